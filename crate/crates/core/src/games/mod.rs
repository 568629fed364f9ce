//! The strategic layer: utilities, best responses, Nash equilibria and
//! best-response dynamics for project submission games.
//!
//! Strategies are ordered canonically as sorted id tuples compared
//! lexicographically. Best-response tie-breaking, brute-force enumeration
//! and the dynamics all follow this order, which makes every result
//! deterministic.

mod classify;
mod constructive;
mod solver;

pub use classify::{experiment_classify, ClassifyConfig, ClassifyReport, NeClass};
pub use constructive::{
    constructive_ne_basicav_multiwinner, constructive_ne_partylist, constructive_ne_psg1_global_thiele,
    constructive_ne_psg1_sequential,
};
pub use solver::Solver;

use crate::model::{Game, Mode, ModelError, ProjectId, StrategyProfile};
use crate::rules::{RuleError, RuleOptions, RuleSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Per-proposer utility: total cost of that proposer's funded projects.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UtilityVector(pub Vec<u64>);

impl UtilityVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for UtilityVector {
    type Output = u64;
    fn index(&self, i: usize) -> &u64 {
        &self.0[i]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestResponseResult {
    pub best_utility: u64,
    /// Every maximizing strategy, in canonical order.
    pub best_strategies: Vec<BTreeSet<ProjectId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DynamicsStatus {
    Converged,
    Cycle,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub status: DynamicsStatus,
    /// Visited profiles, starting with the initial one.
    pub trajectory: Vec<StrategyProfile>,
    #[serde(rename = "final")]
    pub final_profile: StrategyProfile,
    /// Number of simultaneous updates performed.
    pub iterations: usize,
}

impl DynamicsResult {
    /// Length of the best-response cycle when the dynamics revisited a profile.
    pub fn cycle_length(&self) -> Option<usize> {
        if self.status != DynamicsStatus::Cycle {
            return None;
        }
        let last = self.trajectory.last()?;
        let first = self.trajectory.iter().position(|p| p == last)?;
        Some(self.trajectory.len() - 1 - first)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NeStatus {
    Found,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeSearchResult {
    pub status: NeStatus,
    pub witness: Option<StrategyProfile>,
    pub profiles_checked: u64,
}

/// Enumeration guards for the exhaustive operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest proposer cell whose `2^k - 1` strategies may be enumerated in PSG mode.
    pub max_cell_size: usize,
    /// Largest profile space the brute-force search will walk.
    pub max_profiles: u128,
    pub rule: RuleOptions,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_cell_size: 20,
            max_profiles: 10_000_000,
            rule: RuleOptions::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("proposer {proposer} owns {size} projects; enumerating their strategies exceeds the cap of {cap}")]
    CellCap { proposer: usize, size: usize, cap: usize },
    #[error("profile space of {profiles} profiles exceeds the cap of {cap}")]
    ProfileCap { profiles: u128, cap: u128 },
    #[error("operation requires mode {expected}, game is {actual}")]
    WrongMode { expected: Mode, actual: Mode },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub fn utilities(g: &Game, spec: &RuleSpec, s: &StrategyProfile) -> Result<UtilityVector, GameError> {
    Solver::new(g, spec.clone()).utilities(s)
}

/// Best response of proposer `i` against the other strategies in `s`
/// (the `i`-th strategy of `s` is ignored).
pub fn best_response(g: &Game, spec: &RuleSpec, s: &StrategyProfile, i: usize) -> Result<BestResponseResult, GameError> {
    Solver::new(g, spec.clone()).best_response(s, i)
}

pub fn best_response_decision(
    g: &Game,
    spec: &RuleSpec,
    s: &StrategyProfile,
    i: usize,
    x: u64,
) -> Result<bool, GameError> {
    Ok(best_response(g, spec, s, i)?.best_utility >= x)
}

pub fn is_nash(g: &Game, spec: &RuleSpec, s: &StrategyProfile) -> Result<bool, GameError> {
    Solver::new(g, spec.clone()).is_nash(s)
}

pub fn ne_exists_bruteforce(g: &Game, spec: &RuleSpec) -> Result<NeSearchResult, GameError> {
    Solver::new(g, spec.clone()).ne_exists_bruteforce()
}

pub fn br_dynamics(g: &Game, spec: &RuleSpec, start: &StrategyProfile, max_iter: usize) -> Result<DynamicsResult, GameError> {
    Solver::new(g, spec.clone()).br_dynamics(start, max_iter)
}

/// Every proposer submits all their projects.
pub fn full_profile(g: &Game) -> Result<StrategyProfile, GameError> {
    if g.mode() != Mode::Psg {
        return Err(GameError::WrongMode { expected: Mode::Psg, actual: g.mode() });
    }
    Ok(StrategyProfile {
        strategies: g.proposers().iter().map(|cell| cell.iter().cloned().collect()).collect(),
    })
}
