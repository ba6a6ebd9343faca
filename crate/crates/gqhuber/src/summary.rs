//! `summary.csv`: one row per arm.
//!
//! Final-epoch metrics are averaged over seeds (`*_mean`) with the
//! Bessel-corrected standard deviation (`*_std`, 0 for a single seed).
//! `epochs_to_threshold_median` is the median over seeds of the first epoch
//! at which the configured threshold is crossed; a seed that never crosses
//! counts as infinitely late, and an infinite median is left empty.
//! `rank` orders arms that completed by final W1 to the oracle (ascending)
//! when one exists, otherwise by final risk (descending), ties by arm order.
//! An arm is `failed` if any of its seeds failed; its metrics are left empty.

use std::collections::BTreeMap;
use std::path::Path;

use gqhuber_core::LossVariant;
use serde::{Deserialize, Serialize};

use crate::config::{Arm, ThresholdConfig};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::records::{Metric, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arm: String,
    pub variant: String,
    pub threshold: Option<f64>,
    pub adaptive: bool,
    pub status: String,
    pub seeds: usize,
    pub final_loss_mean: Option<f64>,
    pub final_loss_std: Option<f64>,
    pub final_w1_oracle_mean: Option<f64>,
    pub final_w1_oracle_std: Option<f64>,
    pub final_risk_mean: Option<f64>,
    pub final_risk_std: Option<f64>,
    pub final_b_mean: Option<f64>,
    pub final_b_std: Option<f64>,
    pub epochs_to_threshold_median: Option<f64>,
    pub threshold_reached: Option<usize>,
    pub rank: Option<usize>,
    pub error: String,
}

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";

/// Sample mean and Bessel-corrected standard deviation, summed in order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Median with `None` standing for "never"; `None` if the median is never.
pub fn median_epoch(epochs: &[Option<usize>]) -> Option<f64> {
    let mut v: Vec<f64> = epochs
        .iter()
        .map(|e| e.map_or(f64::INFINITY, |x| x as f64))
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    m.is_finite().then_some(m)
}

/// First epoch (1-based, as recorded) at which the threshold is crossed.
pub fn first_crossing(rows: &[&Row], threshold: &ThresholdConfig) -> Option<usize> {
    rows.iter()
        .find(|r| {
            r.get(threshold.metric)
                .is_some_and(|x| threshold.reached(x))
        })
        .map(|r| r.epoch)
}

fn variant_name(v: LossVariant) -> &'static str {
    match v {
        LossVariant::Qr => "qr",
        LossVariant::QuantileHuber => "quantile_huber",
        LossVariant::Gl => "gl",
        LossVariant::Gla => "gla",
    }
}

/// Builds the per-arm summary from the records of completed runs.
///
/// `seeds` lists the seeds run for every arm, `failures` maps an arm name
/// to the first error message among its seeds.
pub fn summarize(
    arms: &[Arm],
    seeds: &[u64],
    rows: &[Row],
    failures: &BTreeMap<String, String>,
    threshold: Option<&ThresholdConfig>,
) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = arms
        .iter()
        .map(|arm| {
            let base = SummaryRow {
                arm: arm.name.clone(),
                variant: variant_name(arm.loss.variant).to_string(),
                threshold: (arm.loss.variant != LossVariant::Qr).then_some(arm.loss.threshold),
                adaptive: arm.loss.adaptive,
                status: STATUS_OK.to_string(),
                seeds: seeds.len(),
                final_loss_mean: None,
                final_loss_std: None,
                final_w1_oracle_mean: None,
                final_w1_oracle_std: None,
                final_risk_mean: None,
                final_risk_std: None,
                final_b_mean: None,
                final_b_std: None,
                epochs_to_threshold_median: None,
                threshold_reached: None,
                rank: None,
                error: String::new(),
            };
            if let Some(msg) = failures.get(&arm.name) {
                return SummaryRow {
                    status: STATUS_FAILED.to_string(),
                    error: msg.clone(),
                    ..base
                };
            }
            let per_seed: Vec<Vec<&Row>> = seeds
                .iter()
                .map(|&s| {
                    rows.iter()
                        .filter(|r| r.arm == arm.name && r.seed == s)
                        .collect()
                })
                .collect();
            if per_seed.iter().any(Vec::is_empty) {
                return SummaryRow {
                    status: STATUS_FAILED.to_string(),
                    error: "no records".to_string(),
                    ..base
                };
            }
            let finals: Vec<&Row> = per_seed.iter().map(|rs| *rs.last().unwrap()).collect();
            let stat = |m: Metric| -> (Option<f64>, Option<f64>) {
                let xs: Option<Vec<f64>> = finals.iter().map(|r| r.get(m)).collect();
                match xs {
                    Some(xs) => {
                        let (mean, std) = mean_std(&xs);
                        (Some(mean), Some(std))
                    }
                    None => (None, None),
                }
            };
            let (final_loss_mean, final_loss_std) = stat(Metric::Loss);
            let (final_w1_oracle_mean, final_w1_oracle_std) = stat(Metric::W1Oracle);
            let (final_risk_mean, final_risk_std) = stat(Metric::Risk);
            let (final_b_mean, final_b_std) = stat(Metric::B);
            let (epochs_to_threshold_median, threshold_reached) = match threshold {
                Some(th) => {
                    let hits: Vec<Option<usize>> =
                        per_seed.iter().map(|rs| first_crossing(rs, th)).collect();
                    (median_epoch(&hits), Some(hits.iter().flatten().count()))
                }
                None => (None, None),
            };
            SummaryRow {
                final_loss_mean,
                final_loss_std,
                final_w1_oracle_mean,
                final_w1_oracle_std,
                final_risk_mean,
                final_risk_std,
                final_b_mean,
                final_b_std,
                epochs_to_threshold_median,
                threshold_reached,
                ..base
            }
        })
        .collect();

    let oracle = out.iter().any(|s| s.final_w1_oracle_mean.is_some());
    let mut order: Vec<(usize, f64)> = out
        .iter()
        .enumerate()
        .filter(|(_, s)| s.status == STATUS_OK)
        .filter_map(|(i, s)| {
            if oracle {
                s.final_w1_oracle_mean.map(|w| (i, w))
            } else {
                s.final_risk_mean.map(|r| (i, -r))
            }
        })
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for (rank, (i, _)) in order.into_iter().enumerate() {
        out[i].rank = Some(rank + 1);
    }
    out
}

pub fn to_csv_bytes(summary: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summary {
        w.serialize(s)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("summary.csv", e.into_error()))
}

pub fn write_summary(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    write_atomic(path, &to_csv_bytes(summary)?)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
