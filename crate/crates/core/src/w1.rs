//! 1-Wasserstein distances between univariate Gaussians and between
//! equal-size empirical quantile sets.

use core::f64::consts::SQRT_2;

use crate::error::{finite, Error, Result};
use crate::normal::{inverse_cdf, SQRT_2_OVER_PI};

/// Lower/upper clipping of the probability grid used by [`w1_quadrature`].
pub const QUADRATURE_EPS: f64 = 1e-7;

/// Univariate Gaussian `N(mean, std)`. `std = 0` is a Dirac delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        finite("mean", mean)?;
        finite("std", std)?;
        if std < 0.0 {
            return Err(Error::InvalidParameter {
                name: "std",
                reason: "must be nonnegative",
            });
        }
        Ok(Self { mean, std })
    }

    pub fn dirac(at: f64) -> Result<Self> {
        Self::new(at, 0.0)
    }

    /// Quantile function.
    pub fn quantile(&self, t: f64) -> f64 {
        if self.std == 0.0 {
            self.mean
        } else {
            self.mean + self.std * inverse_cdf(t)
        }
    }

    fn check(&self) -> Result<()> {
        Self::new(self.mean, self.std).map(|_| ())
    }
}

/// Closed-form W1 between two Gaussians:
/// `|Δμ|[1 − 2Φ(−|Δμ|/|Δσ|)] + |Δσ|·sqrt(2/π)·exp(−Δμ²/2Δσ²)`.
///
/// Equal standard deviations give the mean shift `|Δμ|`.
pub fn w1_closed(p: &Gaussian, q: &Gaussian) -> Result<f64> {
    p.check()?;
    q.check()?;
    let dm = (p.mean - q.mean).abs();
    let ds = (p.std - q.std).abs();
    if ds == 0.0 {
        return Ok(dm);
    }
    let z = dm / ds;
    Ok(dm * libm::erf(z / SQRT_2) + ds * SQRT_2_OVER_PI * libm::exp(-0.5 * z * z))
}

/// Quadrature oracle `∫₀¹ |F_p⁻¹(t) − F_q⁻¹(t)| dt`.
///
/// Composite midpoint rule with `points` cells on `[ε, 1 − ε]`,
/// `ε = 1e−7`. Independent of the closed form: it only uses the Gaussian
/// quantile function. The error is dominated by the clipped tails (order
/// `ε·|Φ⁻¹(ε)|·|Δσ|`) plus an `O(points⁻²)` term away from the kink.
pub fn w1_quadrature(p: &Gaussian, q: &Gaussian, points: usize) -> Result<f64> {
    p.check()?;
    q.check()?;
    if points < 1000 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "must be at least 1000",
        });
    }
    let dm = p.mean - q.mean;
    let ds = p.std - q.std;
    let lo = QUADRATURE_EPS;
    let h = (1.0 - 2.0 * lo) / points as f64;
    // cells i and points−1−i sit at t and 1 − t, where Φ⁻¹ flips sign
    let mut sum = 0.0;
    for i in 0..points / 2 {
        let z = inverse_cdf(lo + (i as f64 + 0.5) * h);
        sum += (dm + ds * z).abs() + (dm - ds * z).abs();
    }
    if points % 2 == 1 {
        sum += dm.abs();
    }
    Ok(sum * h)
}

/// W1 between two equal-size sorted samples: `(1/N)·Σ|xs_i − ys_i|`.
pub fn w1_empirical(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::TooFew {
            what: "xs",
            need: 1,
            got: 0,
        });
    }
    for (name, v) in [("xs", xs), ("ys", ys)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(name));
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Unsorted(name));
        }
    }
    let total: f64 = xs.iter().zip(ys).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: f64, s: f64) -> Gaussian {
        Gaussian::new(m, s).unwrap()
    }

    #[test]
    fn closed_examples() {
        assert_eq!(w1_closed(&g(0.0, 1.0), &g(3.0, 1.0)).unwrap(), 3.0);
        let v = w1_closed(&g(0.0, 1.0), &g(0.0, 2.0)).unwrap();
        assert!((v - SQRT_2_OVER_PI).abs() < 1e-15);
        let d = Gaussian::dirac(0.0).unwrap();
        assert_eq!(w1_closed(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn closed_vs_quadrature_examples() {
        let v = w1_quadrature(&g(0.0, 1.0), &g(3.0, 1.0), 100_000).unwrap();
        assert!((v - 3.0).abs() < 1e-4);
        let v = w1_quadrature(&g(0.0, 1.0), &g(0.0, 1.0), 100_000).unwrap();
        assert_eq!(v, 0.0);
        let v = w1_quadrature(&g(0.0, 1.0), &g(0.0, 2.0), 100_000).unwrap();
        assert!((v - 0.797_885).abs() < 1e-4);

        // mpmath quadrature: 1.0084907026168296...
        let closed = w1_closed(&g(1.0, 1.0), &g(0.0, 0.5)).unwrap();
        assert!((closed - 1.008_490_702_616_829_6).abs() < 1e-14);
        let quad = w1_quadrature(&g(1.0, 1.0), &g(0.0, 0.5), 1_000_000).unwrap();
        assert!((closed - quad).abs() < 1e-6, "{closed} vs {quad}");
    }

    #[test]
    fn quadrature_refines() {
        let (p, q) = (g(0.3, 1.7), g(-0.2, 0.4));
        let exact = w1_closed(&p, &q).unwrap();
        let coarse = (w1_quadrature(&p, &q, 1_000).unwrap() - exact).abs();
        let fine = (w1_quadrature(&p, &q, 100_000).unwrap() - exact).abs();
        assert!(fine < coarse);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Gaussian::new(0.0, -1.0).is_err());
        assert!(Gaussian::new(f64::NAN, 1.0).is_err());
        let bad = Gaussian {
            mean: f64::INFINITY,
            std: 1.0,
        };
        assert!(w1_closed(&bad, &g(0.0, 1.0)).is_err());
        assert!(w1_quadrature(&g(0.0, 1.0), &g(0.0, 1.0), 999).is_err());
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(
            w1_empirical(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(w1_empirical(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(
            w1_empirical(&[-1.0, 1.0], &[1.0, -1.0]),
            Err(Error::Unsorted("ys"))
        );
        assert!(matches!(
            w1_empirical(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(w1_empirical(&[], &[]).is_err());
    }
}
