//! Loss kernels for pairwise quantile errors.
//!
//! Every kernel is a symmetric cost `C(u) ≥ 0` of a pairwise error
//! `u = y − θ` with `C(0) = 0`:
//!
//! | variant         | kernel                                                |
//! |-----------------|-------------------------------------------------------|
//! | `Qr`            | `|u|`                                                 |
//! | `QuantileHuber` | `huber(u, k) / k`                                     |
//! | `Gl`            | `c_gl(u, b)`, W1 between Gaussians with std gap `b`   |
//! | `Gla`           | `c_gla(u, b)`, two-branch approximation of `c_gl`     |
//!
//! With a zero threshold, `QuantileHuber`, `Gl` and `Gla` all fall back to
//! `|u|`, which is the limit of each kernel as the threshold goes to zero.

use core::f64::consts::SQRT_2;

use crate::error::{finite, Error, Result};
use crate::normal::{FRAC_1_SQRT_2PI, SQRT_2_OVER_PI};

/// Which member of the loss family to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossVariant {
    /// Plain quantile regression (absolute error).
    Qr,
    /// Quantile Huber with threshold `k`.
    QuantileHuber,
    /// Generalized kernel with noise gap `b`.
    Gl,
    /// Two-branch approximation of the generalized kernel.
    Gla,
}

/// A loss variant together with its threshold.
///
/// `threshold` is `k` for [`LossVariant::QuantileHuber`] and `b` for
/// [`LossVariant::Gl`]/[`LossVariant::Gla`]; it is ignored for
/// [`LossVariant::Qr`]. When `adaptive` is set the training loop overwrites
/// the threshold with the running noise-gap estimate once per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub variant: LossVariant,
    pub threshold: f64,
    pub adaptive: bool,
}

impl LossSpec {
    pub const fn qr() -> Self {
        Self {
            variant: LossVariant::Qr,
            threshold: 0.0,
            adaptive: false,
        }
    }

    pub const fn quantile_huber(k: f64) -> Self {
        Self {
            variant: LossVariant::QuantileHuber,
            threshold: k,
            adaptive: false,
        }
    }

    pub const fn gl(b: f64) -> Self {
        Self {
            variant: LossVariant::Gl,
            threshold: b,
            adaptive: false,
        }
    }

    pub const fn gla(b: f64) -> Self {
        Self {
            variant: LossVariant::Gla,
            threshold: b,
            adaptive: false,
        }
    }

    pub const fn adaptive(mut self) -> Self {
        self.adaptive = true;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant == LossVariant::Qr {
            return Ok(());
        }
        finite("threshold", self.threshold)?;
        if self.threshold < 0.0 {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: "must be nonnegative",
            });
        }
        Ok(())
    }

    /// Kernel value `C(u)`.
    pub fn cost(&self, u: f64) -> Result<f64> {
        self.validate()?;
        finite("u", u)?;
        let t = self.threshold;
        match self.variant {
            LossVariant::Qr => Ok(u.abs()),
            _ if t == 0.0 => Ok(u.abs()),
            LossVariant::QuantileHuber => Ok(huber(u, t)? / t),
            LossVariant::Gl => c_gl(u, t),
            LossVariant::Gla => c_gla(u, t),
        }
    }

    /// Derivative `dC/du`. At nondifferentiable points a fixed one-sided
    /// value is used: 0 at `u = 0` for the absolute kernel and the
    /// quadratic-branch slope at `|u| = b` for the approximation.
    pub fn cost_grad(&self, u: f64) -> Result<f64> {
        self.validate()?;
        finite("u", u)?;
        let t = self.threshold;
        match self.variant {
            LossVariant::Qr => Ok(sign(u)),
            _ if t == 0.0 => Ok(sign(u)),
            LossVariant::QuantileHuber => Ok(huber_grad(u, t)? / t),
            LossVariant::Gl => c_gl_grad(u, t),
            LossVariant::Gla => c_gla_grad(u, t),
        }
    }

    /// `(C(u), C'(u))` without re-validating; the caller has validated
    /// the spec and `u` is finite.
    #[inline]
    pub(crate) fn eval_unchecked(&self, u: f64) -> (f64, f64) {
        let t = self.threshold;
        let a = u.abs();
        match self.variant {
            LossVariant::Qr => (a, sign(u)),
            _ if t == 0.0 => (a, sign(u)),
            LossVariant::QuantileHuber => {
                if a < t {
                    (0.5 * u * u / t, u / t)
                } else {
                    (a - 0.5 * t, sign(u))
                }
            }
            LossVariant::Gl => {
                let e = libm::erf(a / (SQRT_2 * t));
                (c_gl_from_erf(a, t, e), sign(u) * e)
            }
            LossVariant::Gla => {
                let c = FRAC_1_SQRT_2PI / t;
                let v = if a < t {
                    c * u * u
                } else {
                    a - t * SQRT_2_OVER_PI
                };
                let g = if a <= t { 2.0 * c * u } else { sign(u) };
                (v, g)
            }
        }
    }
}

/// `sign(u)` with `sign(0) = 0`.
#[inline]
fn sign(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn positive(name: &'static str, x: f64) -> Result<f64> {
    finite(name, x)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be positive",
        })
    }
}

/// Huber loss: `u²/2` for `|u| < k`, `k(|u| − k/2)` otherwise.
pub fn huber(u: f64, k: f64) -> Result<f64> {
    positive("k", k)?;
    finite("u", u)?;
    let a = u.abs();
    Ok(if a < k {
        0.5 * u * u
    } else {
        k * (a - 0.5 * k)
    })
}

/// Derivative of [`huber`]: `clamp(u, −k, k)`.
pub fn huber_grad(u: f64, k: f64) -> Result<f64> {
    positive("k", k)?;
    finite("u", u)?;
    Ok(u.clamp(-k, k))
}

/// Generalized kernel
/// `|u|[1 − 2Φ(−|u|/b)] + b·sqrt(2/π)·exp(−u²/2b²) − b·sqrt(2/π)`.
///
/// This is the 1-Wasserstein distance between `N(θ, σ₁)` and `N(y, σ₂)`
/// with `u = θ − y` and `b = |σ₁ − σ₂|`, shifted to vanish at `u = 0`.
pub fn c_gl(u: f64, b: f64) -> Result<f64> {
    positive("b", b)?;
    finite("u", u)?;
    Ok(c_gl_raw(u.abs(), b))
}

// `1 − 2Φ(−x)` is `erf(x/√2)`, and `exp(−z) − 1` goes through expm1 so
// that small |u|/b does not cancel.
#[inline]
fn c_gl_raw(a: f64, b: f64) -> f64 {
    c_gl_from_erf(a, b, libm::erf(a / (SQRT_2 * b)))
}

#[inline]
fn c_gl_from_erf(a: f64, b: f64, e: f64) -> f64 {
    let z = a / b;
    (a * e + b * SQRT_2_OVER_PI * libm::expm1(-0.5 * z * z)).max(0.0)
}

/// `dC_GL/du = erf(u / (√2·b))`: odd, bounded by 1 in magnitude.
pub fn c_gl_grad(u: f64, b: f64) -> Result<f64> {
    positive("b", b)?;
    finite("u", u)?;
    Ok(libm::erf(u / (SQRT_2 * b)))
}

/// Two-branch approximation of [`c_gl`]: `u²/(b·sqrt(2π))` for `|u| < b`,
/// `|u| − b·sqrt(2/π)` otherwise.
///
/// The two branches do not meet at `|u| = b`: the value drops from
/// `0.399·b` to `0.202·b` across the breakpoint.
pub fn c_gla(u: f64, b: f64) -> Result<f64> {
    positive("b", b)?;
    finite("u", u)?;
    Ok(LossSpec::gla(b).eval_unchecked(u).0)
}

/// Derivative of [`c_gla`]; the quadratic-branch slope is used at `|u| = b`.
pub fn c_gla_grad(u: f64, b: f64) -> Result<f64> {
    positive("b", b)?;
    finite("u", u)?;
    Ok(LossSpec::gla(b).eval_unchecked(u).1)
}

/// Free-function form of [`LossSpec::cost`].
pub fn cost(spec: &LossSpec, u: f64) -> Result<f64> {
    spec.cost(u)
}
