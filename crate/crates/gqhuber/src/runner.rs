//! Parallel execution of every (arm, seed) run of a plan.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gqhuber_core::agent::{EpochMetrics, Learner, OracleMetrics, RolloutMetrics};
use gqhuber_core::env::{Environment, MdpEnv, SabrHedgingEnv};
use rayon::prelude::*;

use crate::chart::{chart_file_name, write_chart};
use crate::config::{EnvPlan, Plan};
use crate::error::{Error, Result};
use crate::records::{write_records, Metric, Row};
use crate::summary::{summarize, write_summary, SummaryRow, STATUS_OK};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Records of one completed run, or why it stopped.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub arm: usize,
    pub seed: u64,
    pub result: std::result::Result<Vec<Row>, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Rows of successful runs, arm-major, then seed, then epoch.
    pub rows: Vec<Row>,
    pub summary: Vec<SummaryRow>,
    /// First failure message per arm.
    pub failures: BTreeMap<String, String>,
}

impl ExperimentOutput {
    pub fn all_failed(&self) -> bool {
        self.summary.iter().all(|s| s.status != STATUS_OK)
    }
}

fn build_env(plan: &Plan) -> Result<(Box<dyn Environment>, Box<dyn EpochMetrics>)> {
    Ok(match &plan.env {
        EnvPlan::Oracle {
            model,
            start,
            policy,
            oracle_quantiles,
            ..
        } => (
            Box::new(MdpEnv::new(model.clone(), *start)?),
            Box::new(OracleMetrics {
                state: *start,
                action: Some(policy[*start]),
                oracle_quantiles: oracle_quantiles.clone(),
            }),
        ),
        EnvPlan::Sabr {
            config,
            eval_episodes,
            eval_seed,
            eval_max_steps,
        } => {
            let env = SabrHedgingEnv::new(config.clone())?;
            (
                Box::new(env.clone()),
                Box::new(RolloutMetrics {
                    env,
                    episodes: *eval_episodes,
                    seed: *eval_seed,
                    max_steps: *eval_max_steps,
                }),
            )
        }
    })
}

/// Trains one arm with one seed and returns its per-epoch rows. Stops at the
/// first non-finite metric.
pub fn run_single(plan: &Plan, arm: usize, seed: u64) -> Result<Vec<Row>> {
    let (mut env, mut metrics) = build_env(plan)?;
    let config = plan.train_config(arm, seed);
    let mut learner = Learner::new(config, env.n_states(), env.n_actions(), plan.stats)?;
    let name = &plan.arms[arm].name;
    let mut rows = Vec::with_capacity(plan.train.epochs);
    for _ in 0..plan.train.epochs {
        let started = Instant::now();
        let rec = learner.run_epoch_scored(env.as_mut(), metrics.as_mut())?;
        let ms = if plan.record_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        let finite = rec.loss.is_finite() && rec.risk.is_finite() && rec.b.is_finite();
        if !finite || rec.w1_oracle.is_some_and(|w| !w.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite metric at epoch {}",
                rec.epoch
            )));
        }
        rows.push(Row {
            arm: name.clone(),
            seed,
            epoch: rec.epoch,
            loss: rec.loss,
            w1_oracle: rec.w1_oracle,
            risk: rec.risk,
            b: rec.b,
            ms,
        });
    }
    Ok(rows)
}

/// Runs every (arm, seed) pair on at most `workers` threads (all cores when
/// `None`). A failing run marks its arm failed without touching the others.
pub fn run_plan(plan: &Plan, workers: Option<usize>) -> Result<ExperimentOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Format(format!("thread pool: {e}")))?;
    let runs = plan.runs();
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        runs.par_iter()
            .map(|&(arm, seed)| RunOutcome {
                arm,
                seed,
                result: run_single(plan, arm, seed).map_err(|e| e.to_string()),
            })
            .collect()
    });
    Ok(assemble(plan, outcomes))
}

/// Merges run outcomes (in plan order) into rows and a summary.
pub fn assemble(plan: &Plan, outcomes: Vec<RunOutcome>) -> ExperimentOutput {
    let mut rows = Vec::new();
    let mut failures = BTreeMap::new();
    for o in outcomes {
        let name = &plan.arms[o.arm].name;
        match o.result {
            Ok(r) => rows.extend(r),
            Err(msg) => {
                failures
                    .entry(name.clone())
                    .or_insert_with(|| format!("seed {}: {msg}", o.seed));
            }
        }
    }
    let failed: Vec<&String> = failures.keys().collect();
    rows.retain(|r| !failed.contains(&&r.arm));
    let seeds: Vec<u64> = (0..plan.seeds as u64).map(|r| plan.base_seed + r).collect();
    let summary = summarize(
        &plan.arms,
        &seeds,
        &rows,
        &failures,
        plan.threshold.as_ref(),
    );
    ExperimentOutput {
        rows,
        summary,
        failures,
    }
}

/// Metrics that get a chart for this plan.
pub fn charted_metrics(plan: &Plan) -> Vec<Metric> {
    Metric::ALL
        .into_iter()
        .filter(|&m| m != Metric::W1Oracle || plan.env.has_oracle())
        .collect()
}

/// Writes `records.csv`, `summary.csv` and one chart per metric into `dir`.
/// Returns the paths written.
pub fn write_outputs(dir: &Path, plan: &Plan, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let records = dir.join(RECORDS_FILE);
    write_records(&records, &output.rows)?;
    written.push(records);
    let summary = dir.join(SUMMARY_FILE);
    write_summary(&summary, &output.summary)?;
    written.push(summary);
    if !output.rows.is_empty() {
        for metric in charted_metrics(plan) {
            let path = dir.join(chart_file_name(metric));
            let title = if plan.name.is_empty() {
                metric.label().to_string()
            } else {
                format!("{}: {}", plan.name, metric.label())
            };
            write_chart(&path, &output.rows, metric, &title)?;
            written.push(path);
        }
    }
    Ok(written)
}
