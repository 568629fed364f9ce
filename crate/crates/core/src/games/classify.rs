//! The experimental protocol: full profile, then dynamics, then brute force.

use super::solver::{Profile, Solver};
use super::{full_profile, DynamicsResult, DynamicsStatus, GameError, Limits, NeStatus};
use crate::model::{Game, Mode, StrategyProfile};
use crate::rules::RuleSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NeClass {
    FullNe,
    BrNe,
    BfNe,
    NoNe,
    Undecided,
}

impl NeClass {
    pub const ALL: [NeClass; 5] = [NeClass::FullNe, NeClass::BrNe, NeClass::BfNe, NeClass::NoNe, NeClass::Undecided];

    pub fn as_str(self) -> &'static str {
        match self {
            NeClass::FullNe => "FULL_NE",
            NeClass::BrNe => "BR_NE",
            NeClass::BfNe => "BF_NE",
            NeClass::NoNe => "NO_NE",
            NeClass::Undecided => "UNDECIDED",
        }
    }
}

impl std::fmt::Display for NeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyConfig {
    /// Iteration budget for the best-response dynamics.
    pub max_iter: usize,
    /// Seed for the random start profile in PSG1 mode.
    pub seed: u64,
    pub limits: Limits,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            max_iter: 10,
            seed: 0,
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub class: NeClass,
    /// Iterations used by the dynamics, when they ran.
    pub iterations: Option<usize>,
    /// An equilibrium, for every class that establishes one.
    pub witness: Option<StrategyProfile>,
    pub dynamics: Option<DynamicsResult>,
    /// Why the game was left undecided.
    pub reason: Option<String>,
}

pub fn experiment_classify(g: &Game, spec: &RuleSpec, cfg: &ClassifyConfig) -> ClassifyReport {
    let solver = Solver::with_limits(g, spec.clone(), cfg.limits.clone());
    let mut dynamics = None;
    match classify_inner(&solver, cfg, &mut dynamics) {
        Ok(report) => report,
        Err(err) => ClassifyReport {
            class: NeClass::Undecided,
            iterations: dynamics.as_ref().map(|d: &DynamicsResult| d.iterations),
            witness: None,
            dynamics,
            reason: Some(err.to_string()),
        },
    }
}

fn random_start(solver: &Solver, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Profile = solver.cells.iter().map(|cell| vec![rng.gen_range(0..cell.len())]).collect();
    solver.profile_ids(&p)
}

fn classify_inner(
    solver: &Solver,
    cfg: &ClassifyConfig,
    dynamics_out: &mut Option<DynamicsResult>,
) -> Result<ClassifyReport, GameError> {
    let g = solver.game();
    let start = match g.mode() {
        Mode::Psg => full_profile(g)?,
        Mode::Psg1 => random_start(solver, cfg.seed),
    };
    // With the full profile as the start, zero iterations to convergence
    // means the full profile itself is an equilibrium.
    let dynamics = solver.br_dynamics(&start, cfg.max_iter)?;
    *dynamics_out = Some(dynamics.clone());
    let iterations = Some(dynamics.iterations);
    if dynamics.status == DynamicsStatus::Converged {
        let class = if g.mode() == Mode::Psg && dynamics.iterations == 0 {
            NeClass::FullNe
        } else {
            NeClass::BrNe
        };
        return Ok(ClassifyReport {
            class,
            iterations,
            witness: Some(dynamics.final_profile.clone()),
            dynamics: Some(dynamics),
            reason: None,
        });
    }
    let search = solver.ne_exists_bruteforce()?;
    let class = match search.status {
        NeStatus::Found => NeClass::BfNe,
        NeStatus::None => NeClass::NoNe,
    };
    Ok(ClassifyReport {
        class,
        iterations,
        witness: search.witness,
        dynamics: Some(dynamics),
        reason: None,
    })
}
