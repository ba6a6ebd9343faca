//! Episodic environments with discrete states and actions.

mod mdp;
mod sabr;

pub use mdp::{
    chain_mdp, horizon_for_tolerance, oracle_return_distribution, MdpEnv, MdpModel,
    OracleDistribution, RewardSupport, CHAIN_ADVANCE, CHAIN_NOOP, DEFAULT_PATH_BUDGET,
};
pub use sabr::{transaction_cost, Payoff, SabrConfig, SabrHedgingEnv, SabrMarketState};

use crate::error::Result;
use rand::RngCore;

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

/// A full transition `(s, a, r, s', terminal)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

impl Transition {
    pub fn new(state: usize, action: usize, step: Step) -> Self {
        Self {
            state,
            action,
            reward: step.reward,
            next_state: step.next_state,
            terminal: step.terminal,
        }
    }
}

/// Episodic environment with `n_states × n_actions` discrete observations.
///
/// The environment owns its internal state; `reset` starts an episode and
/// returns the first observation.
pub trait Environment {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> usize;
    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Step>;
}
