//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "name": "chain-sweep",
//!   "environment": { "kind": "chain", "length": 3, "rewards": [[-1, 0.5], [1, 0.5]] },
//!   "arms": [
//!     { "variant": "quantile_huber", "threshold": 1.0 },
//!     { "name": "gla-adaptive", "variant": "gla", "adaptive": true }
//!   ],
//!   "train": { "learning_rate": 0.02, "epochs": 200, "steps_per_epoch": 300, "n_quantiles": 32 },
//!   "seeds": 5,
//!   "threshold": { "metric": "w1_oracle", "value": 0.05, "direction": "below" },
//!   "out": "runs/chain"
//! }
//! ```
//!
//! Environments:
//! - `chain`: `length`, `rewards` (`[value, probability]` pairs paid on every
//!   advance). Evaluated under the always-advance policy from state 0.
//! - `mdp_file`: `path` (relative to the config file), `policy` (one action
//!   per state), optional `start`. The file's discount is used.
//! - `sabr`: any [`SabrConfig`] field, plus `eval_episodes`, `eval_seed`
//!   and `eval_max_steps` for the per-epoch rollout score. Trained greedily
//!   under `train.risk_metric`.
//!
//! Oracle environments (`chain`, `mdp_file`) run policy evaluation and score
//! each epoch by W1 to the exact return distribution at the start state.
//! Run `r` of `seeds` uses seed `train.seed + r`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use gqhuber_core::agent::{Bootstrap, RiskMetric, TrainConfig};
use gqhuber_core::env::{
    chain_mdp, horizon_for_tolerance, oracle_return_distribution, MdpModel, Payoff, RewardSupport,
    SabrConfig, CHAIN_ADVANCE, DEFAULT_PATH_BUDGET,
};
use gqhuber_core::noise::SpreadMode;
use gqhuber_core::{LossSpec, LossVariant, NoiseStats};
use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, Error, Result};
use crate::mdp_file::MdpFile;
use crate::records::Metric;

/// Oracle truncation tolerance for discounted MDPs.
pub const ORACLE_TOLERANCE: f64 = 1e-4;
/// Oracle horizon for undiscounted MDP files.
pub const UNDISCOUNTED_HORIZON: usize = 1_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub environment: EnvironmentConfig,
    pub arms: Vec<ArmConfig>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default)]
    pub threshold: Option<ThresholdConfig>,
    /// Fill the `ms` column with wall-clock epoch times. Off by default so
    /// that identical runs produce identical files.
    #[serde(default)]
    pub record_timing: bool,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Chain {
        length: usize,
        rewards: Vec<(f64, f64)>,
    },
    MdpFile {
        path: PathBuf,
        policy: Vec<usize>,
        #[serde(default)]
        start: usize,
    },
    Sabr(SabrSection),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SabrSection {
    pub spot: Option<f64>,
    pub strike: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
    pub initial_vol: Option<f64>,
    pub maturity: Option<f64>,
    pub steps: Option<usize>,
    pub transaction_cost_rate: Option<f64>,
    pub hedge_grid: Option<Vec<f64>>,
    pub payoff: Option<PayoffName>,
    pub moneyness_buckets: Option<usize>,
    pub moneyness_range: Option<f64>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub eval_seed: u64,
    #[serde(default = "default_eval_max_steps")]
    pub eval_max_steps: usize,
}

fn default_eval_episodes() -> usize {
    1_000
}

fn default_eval_max_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffName {
    Call,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    /// Defaults to a label derived from the loss, e.g. `qh-k1` or `gl-adaptive`.
    #[serde(default)]
    pub name: Option<String>,
    pub variant: VariantName,
    /// k or b; the starting value for adaptive arms. Defaults to 1.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub adaptive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Qr,
    QuantileHuber,
    Gl,
    Gla,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    /// For `chain` and `sabr`; MDP files carry their own discount.
    pub discount: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub exploration_epsilon: f64,
    pub seed: u64,
    pub risk_metric: RiskName,
    pub n_quantiles: usize,
    pub target_noise_std: f64,
    /// Threshold used by adaptive arms before any batch is observed.
    pub fallback_b: f64,
    pub spread_mode: SpreadName,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            discount: d.discount,
            epochs: d.epochs,
            steps_per_epoch: d.steps_per_epoch,
            exploration_epsilon: d.exploration_epsilon,
            seed: d.seed,
            risk_metric: RiskName::Mean,
            n_quantiles: d.n_quantiles,
            target_noise_std: d.target_noise_std,
            fallback_b: gqhuber_core::noise::DEFAULT_FALLBACK_B,
            spread_mode: SpreadName::BatchMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskName {
    Mean,
    Cvar95,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadName {
    BatchMean,
    RunningMean,
}

/// "Epochs until `metric` first crosses `value`" for the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub metric: Metric,
    pub value: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Below,
    Above,
}

impl ThresholdConfig {
    pub fn reached(&self, x: f64) -> bool {
        match self.direction {
            Direction::Below => x <= self.value,
            Direction::Above => x >= self.value,
        }
    }
}

/// A named loss arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub loss: LossSpec,
}

/// Default arm label: `qr`, `qh-k0.5`, `gl-b1`, `gla-adaptive`, ...
pub fn arm_label(loss: &LossSpec) -> String {
    let prefix = match loss.variant {
        LossVariant::Qr => return "qr".to_string(),
        LossVariant::QuantileHuber => "qh",
        LossVariant::Gl => "gl",
        LossVariant::Gla => "gla",
    };
    if loss.adaptive {
        format!("{prefix}-adaptive")
    } else if loss.variant == LossVariant::QuantileHuber {
        format!("{prefix}-k{}", loss.threshold)
    } else {
        format!("{prefix}-b{}", loss.threshold)
    }
}

/// Environment ready to instantiate per run.
#[derive(Debug, Clone)]
pub enum EnvPlan {
    Oracle {
        model: MdpModel,
        start: usize,
        policy: Vec<usize>,
        /// Midpoint quantiles of the exact return distribution at `start`.
        oracle_quantiles: Vec<f64>,
        truncation_bound: f64,
    },
    Sabr {
        config: SabrConfig,
        eval_episodes: usize,
        eval_seed: u64,
        eval_max_steps: usize,
    },
}

impl EnvPlan {
    pub fn has_oracle(&self) -> bool {
        matches!(self, EnvPlan::Oracle { .. })
    }
}

/// Validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub env: EnvPlan,
    pub arms: Vec<Arm>,
    /// Template; `loss` and `seed` are set per run.
    pub train: TrainConfig,
    pub base_seed: u64,
    pub seeds: usize,
    pub stats: NoiseStats,
    pub threshold: Option<ThresholdConfig>,
    pub record_timing: bool,
    pub out: Option<PathBuf>,
}

impl Plan {
    /// `(arm index, seed)` for every run, arm-major.
    pub fn runs(&self) -> Vec<(usize, u64)> {
        (0..self.arms.len())
            .flat_map(|a| (0..self.seeds as u64).map(move |r| (a, self.base_seed + r)))
            .collect()
    }

    pub fn train_config(&self, arm: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            loss: self.arms[arm].loss,
            seed,
            ..self.train.clone()
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON; syntax and type errors carry line and column.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(origin, &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks every field and builds the run plan. Relative paths inside the
    /// config resolve against `base_dir`. All problems are reported together.
    pub fn resolve(&self, base_dir: &Path) -> Result<Plan> {
        let mut diags = Vec::new();
        let arms = self.resolve_arms(&mut diags);
        if self.seeds == 0 {
            diags.push(Diagnostic::new("seeds", "must be at least 1"));
        }
        let t = &self.train;
        let mut train = TrainConfig {
            loss: LossSpec::qr(),
            learning_rate: t.learning_rate,
            discount: t.discount,
            epochs: t.epochs,
            steps_per_epoch: t.steps_per_epoch,
            exploration_epsilon: t.exploration_epsilon,
            seed: t.seed,
            risk_metric: match t.risk_metric {
                RiskName::Mean => RiskMetric::Mean,
                RiskName::Cvar95 => RiskMetric::Cvar95,
            },
            n_quantiles: t.n_quantiles,
            bootstrap: Bootstrap::Greedy,
            target_noise_std: t.target_noise_std,
        };
        if t.epochs == 0 {
            diags.push(Diagnostic::new("train.epochs", "must be at least 1"));
        }
        if t.steps_per_epoch == 0 {
            diags.push(Diagnostic::new(
                "train.steps_per_epoch",
                "must be at least 1",
            ));
        }
        if !(t.fallback_b.is_finite() && t.fallback_b >= 0.0) {
            diags.push(Diagnostic::new(
                "train.fallback_b",
                "must be finite and nonnegative",
            ));
        }
        let env = self.resolve_env(base_dir, &mut train, &mut diags);
        if let Err(e) = train.validate() {
            diags.push(Diagnostic::new("train", e.to_string()));
        }
        if let (Some(th), Some(env)) = (&self.threshold, &env) {
            if !th.value.is_finite() {
                diags.push(Diagnostic::new("threshold.value", "must be finite"));
            }
            if th.metric == Metric::W1Oracle && !env.has_oracle() {
                diags.push(Diagnostic::new(
                    "threshold.metric",
                    "w1_oracle needs an environment with an oracle (chain or mdp_file)",
                ));
            }
        }
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let env = env.expect("environment resolved when there are no diagnostics");
        if let EnvPlan::Oracle { policy, .. } = &env {
            train.bootstrap = Bootstrap::Fixed(policy.clone());
        }
        let mode = match t.spread_mode {
            SpreadName::BatchMean => SpreadMode::BatchMean,
            SpreadName::RunningMean => SpreadMode::RunningMean,
        };
        Ok(Plan {
            name: self.name.clone(),
            env,
            arms,
            train,
            base_seed: t.seed,
            seeds: self.seeds,
            stats: NoiseStats::with_mode(mode).with_fallback(t.fallback_b),
            threshold: self.threshold,
            record_timing: self.record_timing,
            out: self.out.as_ref().map(|p| base_dir.join(p)),
        })
    }

    fn resolve_arms(&self, diags: &mut Vec<Diagnostic>) -> Vec<Arm> {
        if self.arms.is_empty() {
            diags.push(Diagnostic::new("arms", "at least one arm is required"));
        }
        let mut names = HashSet::new();
        let mut arms = Vec::with_capacity(self.arms.len());
        for (i, a) in self.arms.iter().enumerate() {
            let t = a.threshold.unwrap_or(1.0);
            let mut loss = match a.variant {
                VariantName::Qr => LossSpec::qr(),
                VariantName::QuantileHuber => LossSpec::quantile_huber(t),
                VariantName::Gl => LossSpec::gl(t),
                VariantName::Gla => LossSpec::gla(t),
            };
            if a.adaptive {
                if a.variant == VariantName::Qr {
                    diags.push(Diagnostic::new(
                        format!("arms[{i}].adaptive"),
                        "QR has no threshold to adapt",
                    ));
                }
                loss = loss.adaptive();
            }
            if let Err(e) = loss.validate() {
                diags.push(Diagnostic::new(
                    format!("arms[{i}].threshold"),
                    e.to_string(),
                ));
            }
            let name = a.name.clone().unwrap_or_else(|| arm_label(&loss));
            if name.is_empty() || name.contains([',', '"', '\n', '\r']) {
                diags.push(Diagnostic::new(
                    format!("arms[{i}].name"),
                    "must be nonempty without commas, quotes or newlines",
                ));
            }
            if !names.insert(name.clone()) {
                diags.push(Diagnostic::new(
                    format!("arms[{i}].name"),
                    format!("duplicate arm name {name:?}"),
                ));
            }
            arms.push(Arm { name, loss });
        }
        arms
    }

    fn resolve_env(
        &self,
        base_dir: &Path,
        train: &mut TrainConfig,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<EnvPlan> {
        match &self.environment {
            EnvironmentConfig::Chain { length, rewards } => {
                let noise = match RewardSupport::new(rewards.clone()) {
                    Ok(r) => r,
                    Err(e) => {
                        diags.push(Diagnostic::new("environment.rewards", e.to_string()));
                        return None;
                    }
                };
                let model = match chain_mdp(*length, &noise, train.discount) {
                    Ok(m) => m,
                    Err(e) => {
                        diags.push(Diagnostic::new("environment.length", e.to_string()));
                        return None;
                    }
                };
                let policy = vec![CHAIN_ADVANCE; length + 1];
                oracle_plan(model, 0, policy, train.n_quantiles, diags)
            }
            EnvironmentConfig::MdpFile {
                path,
                policy,
                start,
            } => {
                let full = base_dir.join(path);
                let model = match MdpFile::load(&full).and_then(|f| f.to_model()) {
                    Ok(m) => m,
                    Err(e) => {
                        diags.push(Diagnostic::new("environment.path", e.to_string()));
                        return None;
                    }
                };
                train.discount = model.discount();
                if policy.len() != model.n_states() {
                    diags.push(Diagnostic::new(
                        "environment.policy",
                        format!(
                            "needs one action per state ({}), got {}",
                            model.n_states(),
                            policy.len()
                        ),
                    ));
                    return None;
                }
                if let Some(i) = policy.iter().position(|&a| a >= model.n_actions()) {
                    diags.push(Diagnostic::new(
                        format!("environment.policy[{i}]"),
                        "action out of range",
                    ));
                    return None;
                }
                if *start >= model.n_states() {
                    diags.push(Diagnostic::new("environment.start", "state out of range"));
                    return None;
                }
                oracle_plan(model, *start, policy.clone(), train.n_quantiles, diags)
            }
            EnvironmentConfig::Sabr(s) => {
                let config = s.to_config();
                if let Err(e) = config.validate() {
                    diags.push(Diagnostic::new("environment", e.to_string()));
                    return None;
                }
                if s.eval_episodes < train.risk_metric.min_samples() {
                    diags.push(Diagnostic::new(
                        "environment.eval_episodes",
                        format!("must be at least {}", train.risk_metric.min_samples()),
                    ));
                    return None;
                }
                Some(EnvPlan::Sabr {
                    config,
                    eval_episodes: s.eval_episodes,
                    eval_seed: s.eval_seed,
                    eval_max_steps: s.eval_max_steps,
                })
            }
        }
    }
}

fn oracle_plan(
    model: MdpModel,
    start: usize,
    policy: Vec<usize>,
    n_quantiles: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<EnvPlan> {
    let horizon = horizon_for_tolerance(model.discount(), model.max_abs_reward(), ORACLE_TOLERANCE)
        .unwrap_or(UNDISCOUNTED_HORIZON);
    match oracle_return_distribution(&model, &policy, start, horizon, DEFAULT_PATH_BUDGET) {
        Ok(oracle) => Some(EnvPlan::Oracle {
            oracle_quantiles: oracle.midpoint_quantiles(n_quantiles.max(1)),
            truncation_bound: oracle.truncation_bound,
            model,
            start,
            policy,
        }),
        Err(e) => {
            diags.push(Diagnostic::new(
                "environment",
                format!("oracle enumeration failed: {e}"),
            ));
            None
        }
    }
}

impl SabrSection {
    pub fn to_config(&self) -> SabrConfig {
        let d = SabrConfig::default();
        SabrConfig {
            spot: self.spot.unwrap_or(d.spot),
            strike: self.strike.unwrap_or(d.strike),
            beta: self.beta.unwrap_or(d.beta),
            rho: self.rho.unwrap_or(d.rho),
            nu: self.nu.unwrap_or(d.nu),
            initial_vol: self.initial_vol.unwrap_or(d.initial_vol),
            maturity: self.maturity.unwrap_or(d.maturity),
            steps: self.steps.unwrap_or(d.steps),
            transaction_cost_rate: self
                .transaction_cost_rate
                .unwrap_or(d.transaction_cost_rate),
            hedge_grid: self.hedge_grid.clone().unwrap_or(d.hedge_grid),
            payoff: match self.payoff {
                Some(PayoffName::Linear) => Payoff::Linear,
                Some(PayoffName::Call) => Payoff::Call,
                None => d.payoff,
            },
            moneyness_buckets: self.moneyness_buckets.unwrap_or(d.moneyness_buckets),
            moneyness_range: self.moneyness_range.unwrap_or(d.moneyness_range),
        }
    }
}
