use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Environment, Step};
use crate::error::{finite, Error, Result};

/// Upper bound on enumerated paths in [`oracle_return_distribution`].
pub const DEFAULT_PATH_BUDGET: usize = 10_000_000;

const PROB_TOL: f64 = 1e-12;

/// Action index that moves one state down the chain.
pub const CHAIN_ADVANCE: usize = 0;
/// Action index that stays in place with zero reward.
pub const CHAIN_NOOP: usize = 1;

/// Finite-support reward distribution `{(value, probability)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSupport {
    outcomes: Vec<(f64, f64)>,
}

impl RewardSupport {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::TooFew {
                what: "reward outcomes",
                need: 1,
                got: 0,
            });
        }
        let mut total = 0.0;
        for &(v, p) in &outcomes {
            finite("reward value", v)?;
            finite("reward probability", p)?;
            if p < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "reward probability",
                    reason: "must be nonnegative",
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidParameter {
                name: "reward probability",
                reason: "must sum to 1",
            });
        }
        Ok(Self { outcomes })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)])
    }

    /// Equiprobable outcomes.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let p = 1.0 / values.len().max(1) as f64;
        let mut outcomes: Vec<(f64, f64)> = values.iter().map(|&v| (v, p)).collect();
        // absorb rounding so the total is exactly representable as 1
        if let Some(last) = outcomes.last_mut() {
            let head: f64 = values.iter().take(values.len() - 1).map(|_| p).sum();
            last.1 = 1.0 - head;
        }
        Self::new(outcomes)
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|(v, p)| v * p).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(v, p) in &self.outcomes {
            acc += p;
            if u < acc {
                return v;
            }
        }
        // rounding left the cumulative sum a hair below 1
        self.outcomes
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map_or(self.outcomes[0].0, |o| o.0)
    }
}

/// Finite MDP `(S, A, P, γ, r)` with stochastic finite-support rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    n_states: usize,
    n_actions: usize,
    /// `P(s' | s, a)` at `[(s * n_actions + a) * n_states + s']`.
    transition: Vec<f64>,
    /// Reward distribution for each `(s, a)`.
    rewards: Vec<RewardSupport>,
    terminal: Vec<bool>,
    discount: f64,
}

impl MdpModel {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        rewards: Vec<RewardSupport>,
        terminal: Vec<bool>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidParameter {
                name: "n_states/n_actions",
                reason: "must be positive",
            });
        }
        let sa = n_states * n_actions;
        if transition.len() != sa * n_states {
            return Err(Error::LengthMismatch {
                left: transition.len(),
                right: sa * n_states,
            });
        }
        if rewards.len() != sa {
            return Err(Error::LengthMismatch {
                left: rewards.len(),
                right: sa,
            });
        }
        if terminal.len() != n_states {
            return Err(Error::LengthMismatch {
                left: terminal.len(),
                right: n_states,
            });
        }
        finite("discount", discount)?;
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "discount",
                reason: "must lie in (0, 1]",
            });
        }
        for row in transition.chunks(n_states) {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidParameter {
                    name: "transition",
                    reason: "probabilities must be finite and nonnegative",
                });
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidParameter {
                    name: "transition",
                    reason: "each row must sum to 1",
                });
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            rewards,
            terminal,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> &RewardSupport {
        &self.rewards[s * self.n_actions + a]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards
            .iter()
            .map(RewardSupport::max_abs)
            .fold(0.0, f64::max)
    }

    fn check_sa(&self, s: usize, a: usize) -> Result<()> {
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
        Ok(())
    }

    /// Samples `(r, s')` for `(s, a)`.
    pub fn sample(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> Result<Step> {
        self.check_sa(s, a)?;
        let reward = self.reward(s, a).sample(rng);
        let row = self.transition_row(s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = None;
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = Some(s2);
                break;
            }
        }
        let next_state = next.unwrap_or_else(|| row.iter().rposition(|&p| p > 0.0).unwrap_or(0));
        Ok(Step {
            reward,
            next_state,
            terminal: self.terminal[next_state],
        })
    }
}

/// A linear chain of `length` rewarded steps.
///
/// States `0..length` are live and state `length` is terminal. Action
/// [`CHAIN_ADVANCE`] moves to the next state with a reward drawn from
/// `noise`; [`CHAIN_NOOP`] stays put with zero reward. The terminal state is
/// absorbing with zero reward.
pub fn chain_mdp(length: usize, noise: &RewardSupport, discount: f64) -> Result<MdpModel> {
    if length < 2 {
        return Err(Error::InvalidParameter {
            name: "length",
            reason: "must be at least 2",
        });
    }
    let n_states = length + 1;
    let n_actions = 2;
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let mut rewards = Vec::with_capacity(n_states * n_actions);
    let zero = RewardSupport::deterministic(0.0)?;
    for s in 0..n_states {
        for a in 0..n_actions {
            let next = if s < length && a == CHAIN_ADVANCE {
                s + 1
            } else {
                s
            };
            transition[(s * n_actions + a) * n_states + next] = 1.0;
            rewards.push(if s < length && a == CHAIN_ADVANCE {
                noise.clone()
            } else {
                zero.clone()
            });
        }
    }
    let mut terminal = vec![false; n_states];
    terminal[length] = true;
    MdpModel::new(n_states, n_actions, transition, rewards, terminal, discount)
}

/// Smallest horizon `H` with `γ^H·r_max/(1 − γ) < tol`; `None` when `γ = 1`.
pub fn horizon_for_tolerance(discount: f64, r_max: f64, tol: f64) -> Option<usize> {
    if discount >= 1.0 {
        return None;
    }
    if r_max == 0.0 {
        return Some(0);
    }
    let scale = r_max / (1.0 - discount);
    let mut h = 0usize;
    let mut g = 1.0;
    while g * scale >= tol {
        g *= discount;
        h += 1;
    }
    Some(h)
}

/// Exact finite-support return distribution of a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDistribution {
    /// Sorted `(return, probability)` atoms.
    pub atoms: Vec<(f64, f64)>,
    /// Bound on the return mass cut off by the horizon; 0 when every path
    /// reached a terminal state.
    pub truncation_bound: f64,
    pub paths: usize,
}

impl OracleDistribution {
    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    /// Quantile function `inf{x : F(x) ≥ τ}`.
    pub fn quantile(&self, tau: f64) -> f64 {
        let mut acc = 0.0;
        for &(v, p) in &self.atoms {
            acc += p;
            if acc >= tau - 1e-12 {
                return v;
            }
        }
        self.atoms.last().map_or(0.0, |a| a.0)
    }

    /// Quantiles at the midpoint fractions `(2i − 1)/(2n)`.
    pub fn midpoint_quantiles(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.quantile((2 * i + 1) as f64 / (2 * n) as f64))
            .collect()
    }
}

/// Brute-force return distribution of `policy` from `start` by exhaustive
/// enumeration of every path up to `horizon` steps.
pub fn oracle_return_distribution(
    mdp: &MdpModel,
    policy: &[usize],
    start: usize,
    horizon: usize,
    budget: usize,
) -> Result<OracleDistribution> {
    if policy.len() != mdp.n_states {
        return Err(Error::LengthMismatch {
            left: policy.len(),
            right: mdp.n_states,
        });
    }
    for (s, &a) in policy.iter().enumerate() {
        mdp.check_sa(s, a)?;
    }
    mdp.check_sa(start, 0)?;

    struct Node {
        state: usize,
        depth: usize,
        scale: f64,
        ret: f64,
        prob: f64,
    }
    let mut stack = vec![Node {
        state: start,
        depth: 0,
        scale: 1.0,
        ret: 0.0,
        prob: 1.0,
    }];
    let mut leaves: Vec<(f64, f64)> = Vec::new();
    let mut truncated = false;
    while let Some(node) = stack.pop() {
        if mdp.terminal[node.state] || node.depth == horizon {
            truncated |= !mdp.terminal[node.state];
            leaves.push((node.ret, node.prob));
            if leaves.len() > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            continue;
        }
        let a = policy[node.state];
        let row = mdp.transition_row(node.state, a);
        for &(r, pr) in mdp.reward(node.state, a).outcomes() {
            if pr == 0.0 {
                continue;
            }
            for (s2, &pt) in row.iter().enumerate() {
                if pt == 0.0 {
                    continue;
                }
                stack.push(Node {
                    state: s2,
                    depth: node.depth + 1,
                    scale: node.scale * mdp.discount,
                    ret: node.ret + node.scale * r,
                    prob: node.prob * pr * pt,
                });
            }
        }
        if stack.len() > budget {
            return Err(Error::BudgetExceeded { budget });
        }
    }

    let paths = leaves.len();
    leaves.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (v, p) in leaves {
        match atoms.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 * v.abs().max(1.0) => last.1 += p,
            _ => atoms.push((v, p)),
        }
    }
    let truncation_bound = if !truncated {
        0.0
    } else if mdp.discount < 1.0 {
        libm::pow(mdp.discount, horizon as f64) * mdp.max_abs_reward() / (1.0 - mdp.discount)
    } else {
        f64::INFINITY
    };
    Ok(OracleDistribution {
        atoms,
        truncation_bound,
        paths,
    })
}

/// Sampling environment over an [`MdpModel`] with a fixed start state.
#[derive(Debug, Clone)]
pub struct MdpEnv {
    model: MdpModel,
    start: usize,
    state: usize,
}

impl MdpEnv {
    pub fn new(model: MdpModel, start: usize) -> Result<Self> {
        model.check_sa(start, 0)?;
        Ok(Self {
            model,
            start,
            state: start,
        })
    }

    pub fn model(&self) -> &MdpModel {
        &self.model
    }

    pub fn start(&self) -> usize {
        self.start
    }
}

impl Environment for MdpEnv {
    fn n_states(&self) -> usize {
        self.model.n_states
    }

    fn n_actions(&self) -> usize {
        self.model.n_actions
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.state = self.start;
        self.state
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Step> {
        let step = self.model.sample(self.state, action, rng)?;
        self.state = step.next_state;
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pm1() -> RewardSupport {
        RewardSupport::uniform(&[-1.0, 1.0]).unwrap()
    }

    #[test]
    fn chain_two_steps_deterministic() {
        let mdp = chain_mdp(2, &RewardSupport::deterministic(1.0).unwrap(), 0.9).unwrap();
        let policy = vec![CHAIN_ADVANCE; 3];
        let o = oracle_return_distribution(&mdp, &policy, 0, 10, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(o.atoms.len(), 1);
        assert!((o.atoms[0].0 - 1.9).abs() < 1e-15);
        assert_eq!(o.atoms[0].1, 1.0);
        assert_eq!(o.truncation_bound, 0.0);
    }

    #[test]
    fn chain_three_steps_binomial() {
        let mdp = chain_mdp(3, &pm1(), 1.0).unwrap();
        let o = oracle_return_distribution(&mdp, &[0; 4], 0, 10, DEFAULT_PATH_BUDGET).unwrap();
        let expect = [(-3.0, 0.125), (-1.0, 0.375), (1.0, 0.375), (3.0, 0.125)];
        assert_eq!(o.atoms.len(), 4);
        for (a, e) in o.atoms.iter().zip(expect) {
            assert_eq!(a.0, e.0);
            assert!((a.1 - e.1).abs() < 1e-15);
        }
        assert!((o.total_probability() - 1.0).abs() < 1e-12);
        assert_eq!(o.paths, 8);
    }

    #[test]
    fn chain_zero_rewards() {
        let mdp = chain_mdp(2, &RewardSupport::deterministic(0.0).unwrap(), 0.5).unwrap();
        let o = oracle_return_distribution(&mdp, &[0; 3], 0, 10, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(o.atoms, vec![(0.0, 1.0)]);
    }

    #[test]
    fn chain_rejects_short() {
        assert!(chain_mdp(1, &pm1(), 0.9).is_err());
    }

    #[test]
    fn midpoint_quantiles_of_binomial() {
        let mdp = chain_mdp(3, &pm1(), 1.0).unwrap();
        let o = oracle_return_distribution(&mdp, &[0; 4], 0, 10, DEFAULT_PATH_BUDGET).unwrap();
        let q = o.midpoint_quantiles(8);
        assert_eq!(q, vec![-3.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn budget_is_enforced() {
        let mdp = chain_mdp(12, &pm1(), 1.0).unwrap();
        let r = oracle_return_distribution(&mdp, &[0; 13], 0, 20, 1000);
        assert_eq!(r, Err(Error::BudgetExceeded { budget: 1000 }));
    }

    #[test]
    fn truncation_is_reported() {
        let mdp = chain_mdp(4, &RewardSupport::deterministic(1.0).unwrap(), 0.5).unwrap();
        // no-op loops forever, so the horizon cuts every path
        let o =
            oracle_return_distribution(&mdp, &[CHAIN_NOOP; 5], 0, 3, DEFAULT_PATH_BUDGET).unwrap();
        assert_eq!(o.atoms, vec![(0.0, 1.0)]);
        assert!((o.truncation_bound - 0.125 * 1.0 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn horizon_tolerance() {
        let h = horizon_for_tolerance(0.9, 1.0, 1e-4).unwrap();
        let bound = |h: usize| 0.9f64.powi(h as i32) / 0.1;
        assert!(bound(h) < 1e-4 && bound(h - 1) >= 1e-4);
        assert_eq!(horizon_for_tolerance(1.0, 1.0, 1e-4), None);
    }

    #[test]
    fn rejects_bad_rows() {
        let r = RewardSupport::deterministic(0.0).unwrap();
        let bad = MdpModel::new(1, 1, vec![0.5], vec![r.clone()], vec![false], 0.9);
        assert!(bad.is_err());
        let bad = MdpModel::new(1, 1, vec![1.0], vec![r], vec![false], 0.0);
        assert!(bad.is_err());
        assert!(RewardSupport::new(vec![(1.0, 0.4)]).is_err());
        assert!(RewardSupport::new(vec![(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn env_rejects_bad_action() {
        let mdp = chain_mdp(2, &pm1(), 0.9).unwrap();
        let mut env = MdpEnv::new(mdp, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        env.reset(&mut rng);
        assert!(matches!(
            env.step(5, &mut rng),
            Err(Error::IndexOutOfRange { what: "action", .. })
        ));
    }

    #[test]
    fn uniform_support_sums_to_one() {
        let r = RewardSupport::uniform(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
        let total: f64 = r.outcomes().iter().map(|o| o.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
