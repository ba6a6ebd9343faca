//! JSON description of a finite MDP.
//!
//! ```json
//! {
//!   "n_states": 3,
//!   "n_actions": 1,
//!   "discount": 0.9,
//!   "terminal": [2],
//!   "transitions": [
//!     { "state": 0, "action": 0, "next": [[1, 0.5], [2, 0.5]] },
//!     { "state": 1, "action": 0, "next": [[2, 1.0]] }
//!   ],
//!   "rewards": [
//!     { "state": 0, "action": 0, "outcomes": [[-1.0, 0.5], [1.0, 0.5]] }
//!   ]
//! }
//! ```
//!
//! Every `(state, action)` of a non-terminal state needs a transition entry.
//! Terminal states loop on themselves. Pairs without a reward entry pay a
//! deterministic 0.

use std::path::Path;

use gqhuber_core::env::{MdpModel, RewardSupport};
use serde::Deserialize;

use crate::error::{Diagnostic, Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub discount: f64,
    #[serde(default)]
    pub terminal: Vec<usize>,
    pub transitions: Vec<TransitionEntry>,
    #[serde(default)]
    pub rewards: Vec<RewardEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub state: usize,
    pub action: usize,
    /// `(next state, probability)` pairs.
    pub next: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub state: usize,
    pub action: usize,
    /// `(value, probability)` pairs.
    pub outcomes: Vec<(f64, f64)>,
}

impl MdpFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(origin, &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Builds the model, reporting every structural problem at once.
    pub fn to_model(&self) -> Result<MdpModel> {
        let (ns, na) = (self.n_states, self.n_actions);
        let mut diags = Vec::new();
        if ns == 0 || na == 0 {
            diags.push(Diagnostic::new("n_states/n_actions", "must be positive"));
            return Err(Error::Invalid(diags));
        }
        let mut terminal = vec![false; ns];
        for (i, &s) in self.terminal.iter().enumerate() {
            match terminal.get_mut(s) {
                Some(t) => *t = true,
                None => diags.push(Diagnostic::new(
                    format!("terminal[{i}]"),
                    format!("state {s} out of range"),
                )),
            }
        }
        let mut transition = vec![0.0; ns * na * ns];
        let mut seen = vec![false; ns * na];
        for (i, e) in self.transitions.iter().enumerate() {
            let field = format!("transitions[{i}]");
            if e.state >= ns || e.action >= na {
                diags.push(Diagnostic::new(field, "state or action out of range"));
                continue;
            }
            let sa = e.state * na + e.action;
            if seen[sa] {
                diags.push(Diagnostic::new(field, "duplicate (state, action)"));
                continue;
            }
            seen[sa] = true;
            for &(next, p) in &e.next {
                if next >= ns {
                    diags.push(Diagnostic::new(
                        format!("{field}.next"),
                        format!("state {next} out of range"),
                    ));
                } else {
                    transition[sa * ns + next] += p;
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                let sa = s * na + a;
                if seen[sa] {
                    continue;
                }
                if terminal[s] {
                    transition[sa * ns + s] = 1.0;
                } else {
                    diags.push(Diagnostic::new(
                        "transitions",
                        format!("missing entry for state {s}, action {a}"),
                    ));
                }
            }
        }
        let mut rewards: Vec<Option<RewardSupport>> = vec![None; ns * na];
        for (i, e) in self.rewards.iter().enumerate() {
            let field = format!("rewards[{i}]");
            if e.state >= ns || e.action >= na {
                diags.push(Diagnostic::new(field, "state or action out of range"));
                continue;
            }
            match RewardSupport::new(e.outcomes.clone()) {
                Ok(r) => rewards[e.state * na + e.action] = Some(r),
                Err(err) => diags.push(Diagnostic::new(field, err.to_string())),
            }
        }
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let zero = RewardSupport::deterministic(0.0)?;
        let rewards = rewards
            .into_iter()
            .map(|r| r.unwrap_or_else(|| zero.clone()))
            .collect();
        MdpModel::new(ns, na, transition, rewards, terminal, self.discount)
            .map_err(|e| Error::Invalid(vec![Diagnostic::new("mdp", e.to_string())]))
    }
}
