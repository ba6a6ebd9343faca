//! `records.csv`: one row per (arm, seed, epoch).
//!
//! Columns: `arm,seed,epoch,loss,w1_oracle,risk,b,ms`. `w1_oracle` is empty
//! for environments without an oracle; `ms` is 0 unless timing was enabled.
//! Floats are written in shortest round-trip form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const RECORD_COLUMNS: [&str; 8] = [
    "arm",
    "seed",
    "epoch",
    "loss",
    "w1_oracle",
    "risk",
    "b",
    "ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub arm: String,
    pub seed: u64,
    pub epoch: usize,
    pub loss: f64,
    pub w1_oracle: Option<f64>,
    pub risk: f64,
    pub b: f64,
    pub ms: u64,
}

impl Row {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Loss => Some(self.loss),
            Metric::W1Oracle => self.w1_oracle,
            Metric::Risk => Some(self.risk),
            Metric::B => Some(self.b),
        }
    }
}

/// Per-epoch quantity that can be summarised or charted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Loss,
    W1Oracle,
    Risk,
    B,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Loss, Metric::W1Oracle, Metric::Risk, Metric::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Loss => "loss",
            Metric::W1Oracle => "w1_oracle",
            Metric::Risk => "risk",
            Metric::B => "b",
        }
    }

    /// Axis label for charts.
    pub fn label(self) -> &'static str {
        match self {
            Metric::Loss => "mean pairwise loss",
            Metric::W1Oracle => "W1 to oracle",
            Metric::Risk => "risk of greedy policy",
            Metric::B => "noise gap b",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!("unknown metric {s:?}; expected one of loss, w1_oracle, risk, b")
            })
    }
}

pub fn to_csv_bytes(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("records.csv", e.into_error()))
}

pub fn write_records(path: &Path, rows: &[Row]) -> Result<()> {
    write_atomic(path, &to_csv_bytes(rows)?)
}

/// Parses a records file, checking the header.
pub fn read_records(path: &Path) -> Result<Vec<Row>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_records(&bytes)
}

pub fn parse_records(bytes: &[u8]) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_COLUMNS {
        return Err(Error::Format(format!(
            "unexpected records header {:?}; expected {}",
            header,
            RECORD_COLUMNS.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
