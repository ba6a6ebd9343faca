//! Running estimate of predicted/target quantile noise and the gap
//! `b = |σ₁ − σ₂|` used as the loss threshold.

use crate::error::{Error, Result};

/// Threshold returned before any batch has been observed.
pub const DEFAULT_FALLBACK_B: f64 = 1.0;

/// How a batch's spread is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadMode {
    /// Bessel-corrected standard deviation about the batch's own mean.
    #[default]
    BatchMean,
    /// Bessel-corrected root mean square of residuals about the running mean
    /// of every value seen so far in that stream (current batch included).
    RunningMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Stream {
    std_sum: f64,
    value_sum: f64,
    value_count: f64,
}

impl Stream {
    fn spread(&mut self, xs: &[f64], mode: SpreadMode) -> f64 {
        let n = xs.len() as f64;
        let center = match mode {
            SpreadMode::BatchMean => xs.iter().sum::<f64>() / n,
            SpreadMode::RunningMean => {
                self.value_sum += xs.iter().sum::<f64>();
                self.value_count += n;
                self.value_sum / self.value_count
            }
        };
        let ss: f64 = xs.iter().map(|x| (x - center) * (x - center)).sum();
        libm::sqrt(ss / (n - 1.0))
    }
}

/// Noise statistics averaged across batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    /// σ₁, spread of predicted quantiles.
    pub sigma_pred: f64,
    /// σ₂, spread of target quantiles.
    pub sigma_target: f64,
    /// `|σ₁ − σ₂|`; meaningful once `batches_seen > 0`.
    pub b: f64,
    pub batches_seen: u64,
    pub fallback_b: f64,
    pub mode: SpreadMode,
    pred: Stream,
    target: Stream,
}

impl Default for NoiseStats {
    fn default() -> Self {
        Self::new()
    }
}

impl NoiseStats {
    pub fn new() -> Self {
        Self::with_mode(SpreadMode::BatchMean)
    }

    pub fn with_mode(mode: SpreadMode) -> Self {
        Self {
            sigma_pred: 0.0,
            sigma_target: 0.0,
            b: 0.0,
            batches_seen: 0,
            fallback_b: DEFAULT_FALLBACK_B,
            mode,
            pred: Stream::default(),
            target: Stream::default(),
        }
    }

    pub fn with_fallback(mut self, fallback_b: f64) -> Self {
        self.fallback_b = fallback_b;
        self
    }

    /// Folds one batch of predicted and target quantile values into the
    /// running means of σ₁ and σ₂ and recomputes `b`.
    pub fn observe_batch(&mut self, predicted: &[f64], target: &[f64]) -> Result<()> {
        for (what, xs) in [("predicted", predicted), ("target", target)] {
            if xs.len() < 2 {
                return Err(Error::TooFew {
                    what,
                    need: 2,
                    got: xs.len(),
                });
            }
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        let sp = self.pred.spread(predicted, self.mode);
        let st = self.target.spread(target, self.mode);
        self.pred.std_sum += sp;
        self.target.std_sum += st;
        self.batches_seen += 1;
        let n = self.batches_seen as f64;
        self.sigma_pred = self.pred.std_sum / n;
        self.sigma_target = self.target.std_sum / n;
        self.b = (self.sigma_pred - self.sigma_target).abs();
        Ok(())
    }

    /// The current gap, or the fallback when nothing has been observed.
    pub fn current_b(&self) -> f64 {
        if self.batches_seen == 0 {
            self.fallback_b
        } else {
            self.b
        }
    }
}

/// Free-function form of [`NoiseStats::observe_batch`].
pub fn observe_batch(
    mut stats: NoiseStats,
    predicted: &[f64],
    target: &[f64],
) -> Result<NoiseStats> {
    stats.observe_batch(predicted, target)?;
    Ok(stats)
}

/// Free-function form of [`NoiseStats::current_b`].
pub fn current_b(stats: &NoiseStats) -> f64 {
    stats.current_b()
}
