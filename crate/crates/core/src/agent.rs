//! Tabular quantile distributional RL.
//!
//! Each `(state, action)` pair holds `N` quantile values `θ⁽¹⁾..θ⁽ᴺ⁾` at the
//! midpoint fractions `τ̂ᵢ = (2i − 1)/(2N)`. A transition `(s, a, r, s')`
//! produces targets `yⱼ = r + γ·θ̄⁽ʲ⁾(s', a')` from a frozen copy of the
//! table, and the row `θ(s, a)` takes one gradient step on
//!
//! ```text
//! L(θ) = (1/N) Σᵢ Σⱼ |τ̂ᵢ − 1{uᵢⱼ < 0}| · C(uᵢⱼ),   uᵢⱼ = yⱼ − θᵢ
//! ```
//!
//! for the kernel `C` selected by a [`LossSpec`].

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::env::{Environment, Transition};
use crate::error::{finite, Error, Result};
use crate::loss::LossSpec;
use crate::noise::NoiseStats;
use crate::w1::w1_empirical;

/// Midpoint fraction `(2i + 1)/(2n)` for zero-based `i`.
#[inline]
pub fn midpoint_fraction(i: usize, n: usize) -> f64 {
    (2 * i + 1) as f64 / (2 * n) as f64
}

pub fn midpoint_fractions(n: usize) -> Vec<f64> {
    (0..n).map(|i| midpoint_fraction(i, n)).collect()
}

/// Uniform mixture of `N` Diracs at quantile values.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDistribution {
    values: Vec<f64>,
    fractions_mid: Vec<f64>,
}

impl QuantileDistribution {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFew {
                what: "quantile values",
                need: 1,
                got: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantile values"));
        }
        let fractions_mid = midpoint_fractions(values.len());
        Ok(Self {
            values,
            fractions_mid,
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fractions_mid(&self) -> &[f64] {
        &self.fractions_mid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// True when some quantile is below its predecessor.
    pub fn is_crossed(&self) -> bool {
        self.values.windows(2).any(|w| w[1] < w[0])
    }

    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Quantile values for every `(state, action)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    n_states: usize,
    n_actions: usize,
    n_quantiles: usize,
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn zeros(n_states: usize, n_actions: usize, n_quantiles: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || n_quantiles == 0 {
            return Err(Error::InvalidParameter {
                name: "table shape",
                reason: "states, actions and quantiles must be positive",
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            n_quantiles,
            values: vec![0.0; n_states * n_actions * n_quantiles],
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_quantiles(&self) -> usize {
        self.n_quantiles
    }

    fn offset(&self, s: usize, a: usize) -> Result<usize> {
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: s,
                len: self.n_states,
            });
        }
        if a >= self.n_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                len: self.n_actions,
            });
        }
        Ok((s * self.n_actions + a) * self.n_quantiles)
    }

    pub fn row(&self, s: usize, a: usize) -> Result<&[f64]> {
        let o = self.offset(s, a)?;
        Ok(&self.values[o..o + self.n_quantiles])
    }

    pub fn row_mut(&mut self, s: usize, a: usize) -> Result<&mut [f64]> {
        let o = self.offset(s, a)?;
        Ok(&mut self.values[o..o + self.n_quantiles])
    }

    pub fn distribution(&self, s: usize, a: usize) -> Result<QuantileDistribution> {
        QuantileDistribution::new(self.row(s, a)?.to_vec())
    }

    /// Number of rows whose quantiles are not monotone.
    pub fn crossed_rows(&self) -> usize {
        self.values
            .chunks(self.n_quantiles)
            .filter(|r| r.windows(2).any(|w| w[1] < w[0]))
            .count()
    }

    /// Greedy action at `s` under `metric`; lowest index wins ties.
    pub fn greedy_action(&self, s: usize, metric: RiskMetric) -> Result<usize> {
        let mut scratch = Vec::with_capacity(self.n_quantiles);
        self.greedy_action_with(s, metric, &mut scratch)
    }

    fn greedy_action_with(
        &self,
        s: usize,
        metric: RiskMetric,
        scratch: &mut Vec<f64>,
    ) -> Result<usize> {
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for a in 0..self.n_actions {
            let v = risk_value(self.row(s, a)?, metric, scratch)?;
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        Ok(best)
    }
}

/// Objective used to rank actions and to score returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RiskMetric {
    #[default]
    Mean,
    /// Mean of the lowest 5% of outcomes.
    Cvar95,
}

impl RiskMetric {
    /// Smallest sample size for which the metric is defined.
    pub fn min_samples(self) -> usize {
        match self {
            RiskMetric::Mean => 1,
            RiskMetric::Cvar95 => 20,
        }
    }
}

fn risk_value(values: &[f64], metric: RiskMetric, scratch: &mut Vec<f64>) -> Result<f64> {
    let n = values.len();
    if n < metric.min_samples() {
        return Err(Error::TooFew {
            what: "values for the risk metric",
            need: metric.min_samples(),
            got: n,
        });
    }
    match metric {
        RiskMetric::Mean => Ok(values.iter().sum::<f64>() / n as f64),
        RiskMetric::Cvar95 => {
            let tail = n / 20;
            scratch.clear();
            scratch.extend_from_slice(values);
            scratch.select_nth_unstable_by(tail - 1, f64::total_cmp);
            let low = &scratch[..tail];
            Ok(low.iter().sum::<f64>() / tail as f64)
        }
    }
}

/// Score of a return distribution (or of a sample of returns).
///
/// `Mean` is the arithmetic mean; `Cvar95` averages the lowest `⌊N/20⌋`
/// values, so it needs `N ≥ 20`.
pub fn policy_value(values: &[f64], metric: RiskMetric) -> Result<f64> {
    let mut scratch = Vec::with_capacity(values.len());
    risk_value(values, metric, &mut scratch)
}

/// Distributional Bellman targets `yⱼ = r + γ·θⱼ`, or `r` for every `j` on a
/// terminal transition.
pub fn bellman_target(
    reward: f64,
    next: &[f64],
    discount: f64,
    terminal: bool,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; next.len()];
    bellman_target_into(reward, next, discount, terminal, &mut out)?;
    Ok(out)
}

fn bellman_target_into(
    reward: f64,
    next: &[f64],
    discount: f64,
    terminal: bool,
    out: &mut [f64],
) -> Result<()> {
    finite("reward", reward)?;
    finite("discount", discount)?;
    if terminal {
        out.iter_mut().for_each(|y| *y = reward);
    } else {
        for (y, &theta) in out.iter_mut().zip(next) {
            *y = reward + discount * theta;
        }
    }
    Ok(())
}

fn check_pair(pred: &[f64], targets: &[f64]) -> Result<()> {
    if pred.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: targets.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::TooFew {
            what: "quantiles",
            need: 1,
            got: 0,
        });
    }
    if pred.iter().chain(targets).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("quantile values"));
    }
    Ok(())
}

/// Loss and `∂L/∂θ` in one pass. `grad` must have length `N`.
fn loss_and_grad(
    pred: &[f64],
    targets: &[f64],
    loss: &LossSpec,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let n = pred.len();
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    for (i, &theta) in pred.iter().enumerate() {
        let tau = midpoint_fraction(i, n);
        let mut g = 0.0;
        for &y in targets {
            let u = y - theta;
            let w = if u < 0.0 { 1.0 - tau } else { tau };
            let (c, dc) = loss.eval_unchecked(u);
            total += w * c;
            // ∂u/∂θ = −1
            g -= w * dc;
        }
        if let Some(grad) = grad.as_deref_mut() {
            grad[i] = g * inv_n;
        }
    }
    total * inv_n
}

/// `(1/N) Σᵢ Σⱼ |τ̂ᵢ − 1{uᵢⱼ < 0}| · C(uᵢⱼ)` with `uᵢⱼ = yⱼ − θᵢ`.
pub fn pairwise_loss(pred: &QuantileDistribution, targets: &[f64], loss: &LossSpec) -> Result<f64> {
    pairwise_loss_slice(pred.values(), targets, loss)
}

pub fn pairwise_loss_slice(pred: &[f64], targets: &[f64], loss: &LossSpec) -> Result<f64> {
    check_pair(pred, targets)?;
    loss.validate()?;
    Ok(loss_and_grad(pred, targets, loss, None))
}

/// Gradient of [`pairwise_loss`] with respect to the quantile values.
pub fn pairwise_grad(
    pred: &QuantileDistribution,
    targets: &[f64],
    loss: &LossSpec,
) -> Result<Vec<f64>> {
    pairwise_grad_slice(pred.values(), targets, loss)
}

pub fn pairwise_grad_slice(pred: &[f64], targets: &[f64], loss: &LossSpec) -> Result<Vec<f64>> {
    check_pair(pred, targets)?;
    loss.validate()?;
    let mut grad = vec![0.0; pred.len()];
    loss_and_grad(pred, targets, loss, Some(&mut grad));
    Ok(grad)
}

/// Action used for the bootstrap value at the next state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Bootstrap {
    /// Greedy under the configured risk metric (control).
    #[default]
    Greedy,
    /// A fixed action per state (policy evaluation). The behaviour policy
    /// follows it too, up to ε-exploration.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossSpec,
    pub learning_rate: f64,
    pub discount: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub exploration_epsilon: f64,
    pub seed: u64,
    pub risk_metric: RiskMetric,
    pub n_quantiles: usize,
    pub bootstrap: Bootstrap,
    /// Standard deviation of i.i.d. Gaussian noise added to each bootstrapped
    /// target quantile during training (0 disables it). Models estimation
    /// noise in the target quantiles.
    pub target_noise_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossSpec::qr(),
            learning_rate: 0.05,
            discount: 1.0,
            epochs: 100,
            steps_per_epoch: 300,
            exploration_epsilon: 0.1,
            seed: 0,
            risk_metric: RiskMetric::Mean,
            n_quantiles: 32,
            bootstrap: Bootstrap::Greedy,
            target_noise_std: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        finite("learning_rate", self.learning_rate)?;
        if self.learning_rate < 0.0 {
            return bad("learning_rate", "must be nonnegative");
        }
        finite("discount", self.discount)?;
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.exploration_epsilon) {
            return bad("exploration_epsilon", "must lie in [0, 1]");
        }
        if self.n_quantiles == 0 {
            return bad("n_quantiles", "must be positive");
        }
        if self.n_quantiles < self.risk_metric.min_samples() {
            return bad("n_quantiles", "CVaR95 needs at least 20 quantiles");
        }
        finite("target_noise_std", self.target_noise_std)?;
        if self.target_noise_std < 0.0 {
            return bad("target_noise_std", "must be nonnegative");
        }
        Ok(())
    }
}

/// One TD update of row `θ(s, a)` towards the Bellman targets built from
/// `target` (the frozen table). Returns the pairwise loss before the step.
///
/// `target_noise_std` is ignored here; the training loop owns the RNG that
/// injects it.
pub fn td_step(
    table: &mut QuantileTable,
    target: &QuantileTable,
    transition: &Transition,
    config: &TrainConfig,
) -> Result<f64> {
    let mut scratch = Scratch::new(table.n_quantiles);
    td_step_with(
        table,
        target,
        transition,
        config,
        &config.loss,
        &mut scratch,
        None,
    )
}

#[derive(Debug, Clone)]
struct Scratch {
    pred: Vec<f64>,
    targets: Vec<f64>,
    grad: Vec<f64>,
    sort: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            pred: vec![0.0; n],
            targets: vec![0.0; n],
            grad: vec![0.0; n],
            sort: Vec::with_capacity(n),
        }
    }
}

fn td_step_with(
    table: &mut QuantileTable,
    target: &QuantileTable,
    tr: &Transition,
    config: &TrainConfig,
    loss: &LossSpec,
    scratch: &mut Scratch,
    perturb: Option<&mut ChaCha8Rng>,
) -> Result<f64> {
    if table.n_quantiles != target.n_quantiles
        || table.n_states != target.n_states
        || table.n_actions != target.n_actions
    {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: "table shapes differ",
        });
    }
    loss.validate()?;
    table.offset(tr.state, tr.action)?;
    if tr.terminal {
        scratch.targets.iter_mut().for_each(|y| *y = 0.0);
        bellman_target_into(tr.reward, &[], config.discount, true, &mut scratch.targets)?;
    } else {
        let next_action = match &config.bootstrap {
            Bootstrap::Greedy => {
                target.greedy_action_with(tr.next_state, config.risk_metric, &mut scratch.sort)?
            }
            Bootstrap::Fixed(policy) => {
                *policy.get(tr.next_state).ok_or(Error::IndexOutOfRange {
                    what: "policy state",
                    index: tr.next_state,
                    len: policy.len(),
                })?
            }
        };
        let next = target.row(tr.next_state, next_action)?;
        bellman_target_into(
            tr.reward,
            next,
            config.discount,
            false,
            &mut scratch.targets,
        )?;
    }
    if let Some(rng) = perturb {
        if config.target_noise_std > 0.0 {
            for y in scratch.targets.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *y += config.target_noise_std * z;
            }
        }
    }
    let row = table.row_mut(tr.state, tr.action)?;
    scratch.pred.copy_from_slice(row);
    let value = loss_and_grad(
        &scratch.pred,
        &scratch.targets,
        loss,
        Some(&mut scratch.grad),
    );
    let lr = config.learning_rate;
    for (theta, g) in row.iter_mut().zip(&scratch.grad) {
        *theta -= lr * g;
    }
    Ok(value)
}

/// Per-epoch training metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    /// Epochs completed (1-based).
    pub epoch: usize,
    /// Mean pairwise loss over the epoch's steps.
    pub loss: f64,
    pub w1_oracle: Option<f64>,
    pub risk: f64,
    /// Noise-gap estimate after the epoch.
    pub b: f64,
}

/// Scores a table after each epoch.
pub trait EpochMetrics {
    /// Returns `(W1 to the oracle, if any; risk of the greedy policy)`.
    fn evaluate(&mut self, table: &QuantileTable, metric: RiskMetric)
        -> Result<(Option<f64>, f64)>;
}

/// Compares the learned distribution at one `(state, action)` with an exact
/// oracle distribution given as midpoint quantiles.
#[derive(Debug, Clone)]
pub struct OracleMetrics {
    pub state: usize,
    /// `None` evaluates the greedy action.
    pub action: Option<usize>,
    pub oracle_quantiles: Vec<f64>,
}

impl EpochMetrics for OracleMetrics {
    fn evaluate(
        &mut self,
        table: &QuantileTable,
        metric: RiskMetric,
    ) -> Result<(Option<f64>, f64)> {
        let a = match self.action {
            Some(a) => a,
            None => table.greedy_action(self.state, metric)?,
        };
        let mut learned = table.row(self.state, a)?.to_vec();
        learned.sort_by(f64::total_cmp);
        let w1 = w1_empirical(&learned, &self.oracle_quantiles)?;
        let risk = policy_value(&learned, metric)?;
        Ok((Some(w1), risk))
    }
}

/// Monte Carlo score of total episode reward under a policy. Every call
/// replays the same episodes (fixed seed), so scores are comparable across
/// epochs and runs.
pub fn rollout_risk<E, P>(
    env: &mut E,
    mut policy: P,
    episodes: usize,
    seed: u64,
    metric: RiskMetric,
    max_steps: usize,
) -> Result<f64>
where
    E: Environment + ?Sized,
    P: FnMut(usize) -> Result<usize>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totals = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = env.reset(&mut rng);
        let mut total = 0.0;
        for _ in 0..max_steps {
            let step = env.step(policy(s)?, &mut rng)?;
            total += step.reward;
            if step.terminal {
                break;
            }
            s = step.next_state;
        }
        totals.push(total);
    }
    policy_value(&totals, metric)
}

/// [`rollout_risk`] of the greedy policy of the table being trained.
#[derive(Debug, Clone)]
pub struct RolloutMetrics<E> {
    pub env: E,
    pub episodes: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl<E: Environment> EpochMetrics for RolloutMetrics<E> {
    fn evaluate(
        &mut self,
        table: &QuantileTable,
        metric: RiskMetric,
    ) -> Result<(Option<f64>, f64)> {
        let mut scratch = Vec::with_capacity(table.n_quantiles);
        let risk = rollout_risk(
            &mut self.env,
            |s| table.greedy_action_with(s, metric, &mut scratch),
            self.episodes,
            self.seed,
            metric,
            self.max_steps,
        )?;
        Ok((None, risk))
    }
}

/// Stateful training loop: owns the table, the frozen target copy, the
/// noise statistics and the RNG.
#[derive(Debug, Clone)]
pub struct Learner {
    config: TrainConfig,
    loss: LossSpec,
    table: QuantileTable,
    stats: NoiseStats,
    rng: ChaCha8Rng,
    state: Option<usize>,
    epoch: usize,
    scratch: Scratch,
}

impl Learner {
    pub fn new(
        config: TrainConfig,
        n_states: usize,
        n_actions: usize,
        stats: NoiseStats,
    ) -> Result<Self> {
        config.validate()?;
        if let Bootstrap::Fixed(policy) = &config.bootstrap {
            if policy.len() != n_states {
                return Err(Error::LengthMismatch {
                    left: policy.len(),
                    right: n_states,
                });
            }
            if let Some(&a) = policy.iter().find(|&&a| a >= n_actions) {
                return Err(Error::IndexOutOfRange {
                    what: "policy action",
                    index: a,
                    len: n_actions,
                });
            }
        }
        let table = QuantileTable::zeros(n_states, n_actions, config.n_quantiles)?;
        let mut loss = config.loss;
        if loss.adaptive {
            loss.threshold = stats.current_b();
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            scratch: Scratch::new(config.n_quantiles),
            loss,
            table,
            stats,
            config,
            state: None,
            epoch: 0,
        })
    }

    pub fn table(&self) -> &QuantileTable {
        &self.table
    }

    pub fn into_table(self) -> QuantileTable {
        self.table
    }

    pub fn stats(&self) -> &NoiseStats {
        &self.stats
    }

    /// Loss currently in use, including the adaptive threshold.
    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    fn behaviour_action(&mut self, s: usize) -> Result<usize> {
        let n_actions = self.table.n_actions;
        if self.rng.random::<f64>() < self.config.exploration_epsilon {
            return Ok(self.rng.random_range(0..n_actions));
        }
        match &self.config.bootstrap {
            Bootstrap::Fixed(policy) => Ok(policy[s]),
            Bootstrap::Greedy => {
                self.table
                    .greedy_action_with(s, self.config.risk_metric, &mut self.scratch.sort)
            }
        }
    }

    /// Runs `steps_per_epoch` transitions and returns the mean loss.
    ///
    /// The target table is refreshed at the start of the epoch; an adaptive
    /// threshold is refreshed from the noise statistics at its end.
    pub fn run_epoch(&mut self, env: &mut dyn Environment) -> Result<f64> {
        if env.n_states() != self.table.n_states || env.n_actions() != self.table.n_actions {
            return Err(Error::InvalidParameter {
                name: "env",
                reason: "state/action counts differ from the table",
            });
        }
        let target = self.table.clone();
        let mut total = 0.0;
        for step in 0..self.config.steps_per_epoch {
            let s = match self.state {
                Some(s) => s,
                None => env.reset(&mut self.rng),
            };
            let a = self.behaviour_action(s)?;
            let outcome = env.step(a, &mut self.rng)?;
            let tr = Transition::new(s, a, outcome);
            let value = td_step_with(
                &mut self.table,
                &target,
                &tr,
                &self.config,
                &self.loss,
                &mut self.scratch,
                Some(&mut self.rng),
            )?;
            if !value.is_finite() || self.scratch.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch: self.epoch + 1,
                    step,
                });
            }
            if self.scratch.pred.len() >= 2 {
                self.stats
                    .observe_batch(&self.scratch.pred, &self.scratch.targets)?;
            }
            total += value;
            self.state = if outcome.terminal {
                None
            } else {
                Some(outcome.next_state)
            };
        }
        self.epoch += 1;
        if self.loss.adaptive {
            self.loss.threshold = self.stats.current_b();
        }
        Ok(if self.config.steps_per_epoch == 0 {
            0.0
        } else {
            total / self.config.steps_per_epoch as f64
        })
    }

    /// [`Learner::run_epoch`] followed by evaluation.
    pub fn run_epoch_scored(
        &mut self,
        env: &mut dyn Environment,
        metrics: &mut dyn EpochMetrics,
    ) -> Result<RunRecord> {
        let loss = self.run_epoch(env)?;
        let (w1_oracle, risk) = metrics.evaluate(&self.table, self.config.risk_metric)?;
        Ok(RunRecord {
            epoch: self.epoch,
            loss,
            w1_oracle,
            risk,
            b: self.stats.current_b(),
        })
    }
}

/// Trains a zero-initialised table for `config.epochs` epochs.
pub fn train(
    env: &mut dyn Environment,
    config: &TrainConfig,
    stats: NoiseStats,
    metrics: &mut dyn EpochMetrics,
) -> Result<(QuantileTable, Vec<RunRecord>, NoiseStats)> {
    let mut learner = Learner::new(config.clone(), env.n_states(), env.n_actions(), stats)?;
    let mut records = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        records.push(learner.run_epoch_scored(env, metrics)?);
    }
    let stats = learner.stats;
    Ok((learner.table, records, stats))
}
