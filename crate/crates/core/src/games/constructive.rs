//! Profiles that are guaranteed equilibria by construction.

use super::solver::{Profile, Solver};
use super::{full_profile, GameError, Limits};
use crate::model::{classify_structure, Game, Mode, StrategyProfile, StructureClass};
use crate::rational::Rational;
use crate::rules::{self, RuleSpec, WeightFunction};

fn require_mode(g: &Game, mode: Mode) -> Result<(), GameError> {
    if g.mode() != mode {
        return Err(GameError::WrongMode { expected: mode, actual: g.mode() });
    }
    Ok(())
}

fn require_unit_costs(g: &Game) -> Result<(), GameError> {
    if !g.election().has_unit_costs() {
        return Err(GameError::Precondition("all projects must have unit cost".into()));
    }
    Ok(())
}

/// Under BasicAV with unit costs, submitting everything is dominant.
pub fn constructive_ne_basicav_multiwinner(g: &Game) -> Result<StrategyProfile, GameError> {
    require_mode(g, Mode::Psg)?;
    require_unit_costs(g)?;
    full_profile(g)
}

/// With party-list approvals and unit costs, the full profile is an
/// equilibrium for Phragmén, MES and every Thiele rule.
pub fn constructive_ne_partylist(g: &Game, spec: &RuleSpec) -> Result<StrategyProfile, GameError> {
    require_mode(g, Mode::Psg)?;
    require_unit_costs(g)?;
    if matches!(spec, RuleSpec::BasicAv) {
        return Err(GameError::Precondition(
            "party-list construction covers Phragmén, MES and Thiele rules".into(),
        ));
    }
    let class = classify_structure(g.election());
    if class != StructureClass::PartyList {
        return Err(GameError::Precondition(format!("approvals are {class}, not PARTY_LIST")));
    }
    full_profile(g)
}

/// Fixes proposers one at a time. With every unfixed proposer submitting all
/// of their projects, the rule is run and the proposer owning the earliest
/// funded project among the unfixed ones is fixed to that project. Proposers
/// that never get a project funded submit their canonically first project.
pub fn constructive_ne_psg1_sequential(g: &Game, spec: &RuleSpec) -> Result<StrategyProfile, GameError> {
    require_mode(g, Mode::Psg1)?;
    require_unit_costs(g)?;
    if !spec.is_sequential() {
        return Err(GameError::Precondition(format!("{spec} is not a sequential rule")));
    }
    let solver = Solver::new(g, spec.clone());
    let n = solver.cells.len();
    let mut fixed: Vec<Option<usize>> = vec![None; n];
    loop {
        let mut active = vec![false; solver.compiled.num_projects()];
        for (i, cell) in solver.cells.iter().enumerate() {
            match fixed[i] {
                Some(pos) => active[cell[pos]] = true,
                None => cell.iter().for_each(|&p| active[p] = true),
            }
        }
        let raw = rules::evaluate(&solver.compiled, &active, spec, &solver.limits().rule)?;
        let next = raw
            .funded
            .iter()
            .map(|&p| (p, g.owner_of_index(p)))
            .find(|&(_, owner)| fixed[owner].is_none());
        let Some((p, owner)) = next else { break };
        let pos = solver.cells[owner].iter().position(|&q| q == p).expect("owner's cell");
        fixed[owner] = Some(pos);
    }
    let profile: Profile = fixed.iter().map(|f| vec![f.unwrap_or(0)]).collect();
    Ok(solver.profile_ids(&profile))
}

/// Among all PSG1 profiles, picks one whose global-Thiele outcome has the
/// highest w-score, preferring outcomes earlier in the lexicographic
/// extension of the tie-breaking order, then the canonically first profile.
pub fn constructive_ne_psg1_global_thiele(g: &Game, w: &WeightFunction, limits: Limits) -> Result<StrategyProfile, GameError> {
    require_mode(g, Mode::Psg1)?;
    require_unit_costs(g)?;
    let spec = RuleSpec::GlobalThiele { weights: w.clone() };
    let solver = Solver::with_limits(g, spec.clone(), limits);
    let mut best: Option<(Rational, Vec<usize>, Profile)> = None;
    solver.for_each_profile(|p| {
        let raw = rules::evaluate(&solver.compiled, &solver.mask(p), &spec, &solver.limits().rule)?;
        let score = rules::score_indices(&solver.compiled, w, &raw.funded);
        let mut ranks: Vec<usize> = raw.funded.iter().map(|&i| solver.compiled.rank[i]).collect();
        ranks.sort_unstable();
        let better = match &best {
            None => true,
            Some((s, r, _)) => score > *s || (score == *s && ranks < *r),
        };
        if better {
            best = Some((score, ranks, p.clone()));
        }
        Ok(None::<()>)
    })?;
    let (_, _, p) = best.expect("profile space is nonempty");
    Ok(solver.profile_ids(&p))
}
