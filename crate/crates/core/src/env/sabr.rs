//! Miniature hedging desk: one short European option on an underlying whose
//! price follows SABR dynamics, hedged with the underlying itself.
//!
//! Each episode has `steps` rebalancing dates. At every date the agent picks
//! a hedge position from a discrete grid; the reward is the change in the
//! hedged portfolio value (short option marked to model, long hedge) minus
//! proportional transaction costs. Observations combine the date, a
//! log-moneyness bucket and the index of the position currently held.

use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{Environment, Step};
use crate::error::{finite, Error, Result};
use crate::normal::cdf;

/// Payoff of the option sold at the start of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payoff {
    /// European call `max(S − K, 0)`.
    Call,
    /// Linear claim `S − K` (delta one); fully hedgeable with one unit.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SabrConfig {
    pub spot: f64,
    pub strike: f64,
    pub beta: f64,
    pub rho: f64,
    /// Vol-of-vol ν.
    pub nu: f64,
    pub initial_vol: f64,
    /// Years.
    pub maturity: f64,
    /// Rebalancing dates per episode.
    pub steps: usize,
    pub transaction_cost_rate: f64,
    /// Hedge positions in units of the underlying per option sold; must
    /// contain 0.
    pub hedge_grid: Vec<f64>,
    pub payoff: Payoff,
    pub moneyness_buckets: usize,
    /// Log-moneyness is clipped to `[−range, range]` before bucketing.
    pub moneyness_range: f64,
}

impl Default for SabrConfig {
    fn default() -> Self {
        Self {
            spot: 100.0,
            strike: 100.0,
            beta: 1.0,
            rho: -0.4,
            nu: 0.6,
            initial_vol: 0.25,
            maturity: 10.0 / 52.0,
            steps: 10,
            transaction_cost_rate: 0.005,
            hedge_grid: (0..21).map(|i| i as f64 * 0.05).collect(),
            payoff: Payoff::Call,
            moneyness_buckets: 7,
            moneyness_range: 0.12,
        }
    }
}

impl SabrConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("spot", self.spot),
            ("strike", self.strike),
            ("beta", self.beta),
            ("rho", self.rho),
            ("nu", self.nu),
            ("initial_vol", self.initial_vol),
            ("maturity", self.maturity),
            ("transaction_cost_rate", self.transaction_cost_rate),
            ("moneyness_range", self.moneyness_range),
        ] {
            finite(name, x)?;
        }
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.spot <= 0.0 || self.strike <= 0.0 {
            return bad("spot/strike", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta", "must lie in [0, 1]");
        }
        if self.rho.abs() >= 1.0 {
            return bad("rho", "must satisfy |rho| < 1");
        }
        if self.nu < 0.0 || self.initial_vol < 0.0 {
            return bad("nu/initial_vol", "must be nonnegative");
        }
        if self.maturity <= 0.0 || self.steps == 0 {
            return bad("maturity/steps", "must be positive");
        }
        if self.transaction_cost_rate < 0.0 {
            return bad("transaction_cost_rate", "must be nonnegative");
        }
        if self.hedge_grid.is_empty() {
            return bad("hedge_grid", "must be nonempty");
        }
        if self.hedge_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hedge_grid"));
        }
        if !self.hedge_grid.contains(&0.0) {
            return bad("hedge_grid", "must contain the zero position");
        }
        if self.moneyness_buckets == 0 || self.moneyness_range <= 0.0 {
            return bad("moneyness_buckets/moneyness_range", "must be positive");
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.steps as f64
    }
}

/// Cost of changing the hedge by `position_change` units at `price`.
pub fn transaction_cost(rate: f64, position_change: f64, price: f64) -> f64 {
    rate * position_change.abs() * price
}

/// Continuous market state behind the discrete observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SabrMarketState {
    pub spot: f64,
    pub vol: f64,
    pub time_to_maturity: f64,
    pub position: f64,
    pub step: usize,
}

/// Episodic hedging environment.
#[derive(Debug, Clone)]
pub struct SabrHedgingEnv {
    config: SabrConfig,
    state: SabrMarketState,
    zero_action: usize,
}

impl SabrHedgingEnv {
    pub fn new(config: SabrConfig) -> Result<Self> {
        config.validate()?;
        let zero_action = config
            .hedge_grid
            .iter()
            .position(|&x| x == 0.0)
            .unwrap_or(0);
        let state = Self::initial_state(&config);
        Ok(Self {
            config,
            state,
            zero_action,
        })
    }

    fn initial_state(config: &SabrConfig) -> SabrMarketState {
        SabrMarketState {
            spot: config.spot,
            vol: config.initial_vol,
            time_to_maturity: config.maturity,
            position: 0.0,
            step: 0,
        }
    }

    pub fn config(&self) -> &SabrConfig {
        &self.config
    }

    pub fn state(&self) -> &SabrMarketState {
        &self.state
    }

    /// Action that keeps the book unhedged.
    pub fn do_nothing_action(&self) -> usize {
        self.zero_action
    }

    /// Lognormal volatility implied by the SABR state at `spot`.
    fn local_vol(&self, spot: f64, vol: f64) -> f64 {
        if self.config.beta == 1.0 {
            vol
        } else {
            vol * libm::pow(spot, self.config.beta - 1.0)
        }
    }

    /// Model value of the option sold, per unit.
    ///
    /// Calls are marked with the Black formula at the current lognormal
    /// volatility (zero rates); at maturity this is the payoff.
    pub fn option_value(&self, spot: f64, vol: f64, time_to_maturity: f64) -> f64 {
        let k = self.config.strike;
        match self.config.payoff {
            Payoff::Linear => spot - k,
            Payoff::Call => {
                let sigma = self.local_vol(spot, vol);
                let sd = sigma * libm::sqrt(time_to_maturity.max(0.0));
                if sd <= 0.0 {
                    return (spot - k).max(0.0);
                }
                let d1 = (libm::log(spot / k) + 0.5 * sd * sd) / sd;
                spot * cdf(d1) - k * cdf(d1 - sd)
            }
        }
    }

    /// Hedge ratio of the option under the same marking model.
    pub fn option_delta(&self, spot: f64, vol: f64, time_to_maturity: f64) -> f64 {
        match self.config.payoff {
            Payoff::Linear => 1.0,
            Payoff::Call => {
                let sigma = self.local_vol(spot, vol);
                let sd = sigma * libm::sqrt(time_to_maturity.max(0.0));
                if sd <= 0.0 {
                    return if spot > self.config.strike { 1.0 } else { 0.0 };
                }
                cdf((libm::log(spot / self.config.strike) + 0.5 * sd * sd) / sd)
            }
        }
    }

    /// Grid index closest to `position` (lowest index on ties).
    pub fn nearest_action(&self, position: f64) -> usize {
        let mut best = 0;
        for (i, &p) in self.config.hedge_grid.iter().enumerate() {
            if (p - position).abs() < (self.config.hedge_grid[best] - position).abs() {
                best = i;
            }
        }
        best
    }

    fn observation(&self) -> usize {
        let c = &self.config;
        if self.state.step >= c.steps {
            return 0;
        }
        let x = libm::log(self.state.spot / c.strike).clamp(-c.moneyness_range, c.moneyness_range);
        let frac = (x + c.moneyness_range) / (2.0 * c.moneyness_range);
        let bucket = ((frac * c.moneyness_buckets as f64) as usize).min(c.moneyness_buckets - 1);
        let pos = self.nearest_action(self.state.position);
        (self.state.step * c.moneyness_buckets + bucket) * c.hedge_grid.len() + pos
    }
}

impl Environment for SabrHedgingEnv {
    fn n_states(&self) -> usize {
        self.config.steps * self.config.moneyness_buckets * self.config.hedge_grid.len()
    }

    fn n_actions(&self) -> usize {
        self.config.hedge_grid.len()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.state = Self::initial_state(&self.config);
        self.observation()
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Step> {
        let c = &self.config;
        if action >= c.hedge_grid.len() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                len: c.hedge_grid.len(),
            });
        }
        if self.state.step >= c.steps {
            return Err(Error::InvalidParameter {
                name: "step",
                reason: "episode already finished; call reset",
            });
        }
        let dt = c.dt();
        let sqrt_dt = libm::sqrt(dt);
        let s0 = self.state.spot;
        let v0 = self.state.vol;
        let tau0 = self.state.time_to_maturity;
        let new_pos = c.hedge_grid[action];
        let cost = transaction_cost(c.transaction_cost_rate, new_pos - self.state.position, s0);

        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let w2 = c.rho * z1 + libm::sqrt(1.0 - c.rho * c.rho) * z2;
        // log-Euler for the spot, Euler for the vol floored at zero
        let local = self.local_vol(s0, v0);
        let s1 = s0 * libm::exp(-0.5 * local * local * dt + local * sqrt_dt * z1);
        let v1 = (v0 + c.nu * v0 * sqrt_dt * w2).max(0.0);
        let step = self.state.step + 1;
        let tau1 = if step == c.steps { 0.0 } else { tau0 - dt };

        let dv = self.option_value(s1, v1, tau1) - self.option_value(s0, v0, tau0);
        let reward = -dv + new_pos * (s1 - s0) - cost;

        self.state = SabrMarketState {
            spot: s1,
            vol: v1,
            time_to_maturity: tau1,
            position: new_pos,
            step,
        };
        let terminal = step == self.config.steps;
        Ok(Step {
            reward,
            next_state: self.observation(),
            terminal,
        })
    }
}
