//! Generalized quantile Huber loss and the machinery around it.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! - [`loss`]: the loss kernels (absolute, Huber, the Gaussian-W1 kernel and
//!   its two-branch approximation) with analytic gradients,
//! - [`w1`]: closed-form and quadrature 1-Wasserstein distances,
//! - [`noise`]: running estimate of the noise gap `b = |σ₁ − σ₂|`,
//! - [`agent`]: tabular quantile distributional RL driven by any loss,
//! - [`env`]: small MDPs with brute-force return oracles and a SABR hedging
//!   simulator.
#![cfg_attr(not(test), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod agent;
pub mod env;
mod error;
pub mod loss;
pub mod noise;
pub mod normal;
pub mod w1;

pub use error::{Error, Result};
pub use loss::{LossSpec, LossVariant};
pub use noise::NoiseStats;
pub use w1::Gaussian;
