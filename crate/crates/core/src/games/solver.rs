use super::{
    BestResponseResult, DynamicsResult, DynamicsStatus, GameError, Limits, NeSearchResult, NeStatus, UtilityVector,
};
use crate::model::{Game, Mode, ModelError, ProjectId, StrategyProfile};
use crate::rules::compiled::Compiled;
use crate::rules::{self, RuleSpec};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex};

/// Strategy as sorted positions into the proposer's canonical cell.
pub(crate) type Strategy = Vec<usize>;
pub(crate) type Profile = Vec<Strategy>;

const CACHE_CAPACITY: usize = 1 << 21;

/// Evaluates one game under one rule, caching the utility vector of every
/// submitted project set it has seen.
pub struct Solver<'g> {
    game: &'g Game,
    spec: RuleSpec,
    limits: Limits,
    pub(crate) compiled: Compiled,
    /// Election indices of each proposer's projects, sorted by id.
    pub(crate) cells: Vec<Vec<usize>>,
    cache: Mutex<HashMap<Vec<bool>, Arc<Vec<u64>>>>,
}

impl<'g> Solver<'g> {
    pub fn new(game: &'g Game, spec: RuleSpec) -> Self {
        Self::with_limits(game, spec, Limits::default())
    }

    pub fn with_limits(game: &'g Game, spec: RuleSpec, limits: Limits) -> Self {
        let e = game.election();
        let cells = game
            .proposers()
            .iter()
            .map(|cell| {
                let mut ids: Vec<&ProjectId> = cell.iter().collect();
                ids.sort();
                ids.into_iter().map(|id| e.index_of(id).expect("validated game")).collect()
            })
            .collect();
        Solver {
            game,
            spec,
            limits,
            compiled: Compiled::new(e),
            cells,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &Game {
        self.game
    }

    pub fn spec(&self) -> &RuleSpec {
        &self.spec
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    // ---- conversions -------------------------------------------------------

    fn strategy_of(&self, i: usize, s: &BTreeSet<ProjectId>) -> Result<Strategy, ModelError> {
        let e = self.game.election();
        let mut out = Vec::with_capacity(s.len());
        for id in s {
            let idx = e
                .index_of(id)
                .ok_or_else(|| ModelError::InvalidProfile(format!("unknown project `{id}`")))?;
            let pos = self.cells[i]
                .iter()
                .position(|&p| p == idx)
                .ok_or_else(|| ModelError::InvalidProfile(format!("project `{id}` does not belong to proposer {i}")))?;
            out.push(pos);
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Converts and checks a profile; the strategy of `skip` is not inspected.
    pub(crate) fn profile_of(&self, s: &StrategyProfile, skip: Option<usize>) -> Result<Profile, ModelError> {
        if s.strategies.len() != self.cells.len() {
            return Err(ModelError::InvalidProfile(format!(
                "expected {} strategies, got {}",
                self.cells.len(),
                s.strategies.len()
            )));
        }
        let mut out = Vec::with_capacity(self.cells.len());
        for (i, si) in s.strategies.iter().enumerate() {
            if Some(i) == skip {
                out.push(Vec::new());
                continue;
            }
            if si.is_empty() {
                return Err(ModelError::InvalidProfile(format!("proposer {i} submits nothing")));
            }
            if self.game.mode() == Mode::Psg1 && si.len() != 1 {
                return Err(ModelError::InvalidProfile(format!(
                    "proposer {i} submits {} projects in PSG1 mode",
                    si.len()
                )));
            }
            out.push(self.strategy_of(i, si)?);
        }
        Ok(out)
    }

    pub(crate) fn strategy_ids(&self, i: usize, s: &Strategy) -> BTreeSet<ProjectId> {
        let e = self.game.election();
        s.iter().map(|&pos| e.projects()[self.cells[i][pos]].id.clone()).collect()
    }

    pub(crate) fn profile_ids(&self, p: &Profile) -> StrategyProfile {
        StrategyProfile {
            strategies: p.iter().enumerate().map(|(i, s)| self.strategy_ids(i, s)).collect(),
        }
    }

    // ---- utilities ----------------------------------------------------------

    pub(crate) fn mask(&self, p: &Profile) -> Vec<bool> {
        let mut active = vec![false; self.compiled.num_projects()];
        for (i, s) in p.iter().enumerate() {
            for &pos in s {
                active[self.cells[i][pos]] = true;
            }
        }
        active
    }

    pub(crate) fn utilities_of_mask(&self, active: Vec<bool>) -> Result<Arc<Vec<u64>>, GameError> {
        if let Some(u) = self.cache.lock().expect("cache lock").get(&active) {
            return Ok(Arc::clone(u));
        }
        let raw = rules::evaluate(&self.compiled, &active, &self.spec, &self.limits.rule)?;
        let mut u = vec![0u64; self.cells.len()];
        for &p in &raw.funded {
            u[self.game.owner_of_index(p)] += self.compiled.costs[p];
        }
        let u = Arc::new(u);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        cache.insert(active, Arc::clone(&u));
        Ok(u)
    }

    pub(crate) fn utilities_internal(&self, p: &Profile) -> Result<Arc<Vec<u64>>, GameError> {
        self.utilities_of_mask(self.mask(p))
    }

    pub fn utilities(&self, s: &StrategyProfile) -> Result<UtilityVector, GameError> {
        let p = self.profile_of(s, None)?;
        Ok(UtilityVector(self.utilities_internal(&p)?.to_vec()))
    }

    /// Funded projects of the election induced by `s`, in selection order.
    pub fn outcome(&self, s: &StrategyProfile) -> Result<Vec<ProjectId>, GameError> {
        let p = self.profile_of(s, None)?;
        let raw = rules::evaluate(&self.compiled, &self.mask(&p), &self.spec, &self.limits.rule)?;
        let e = self.game.election();
        Ok(raw.funded.iter().map(|&i| e.projects()[i].id.clone()).collect())
    }

    // ---- strategy spaces ---------------------------------------------------

    /// All strategies of proposer `i` in canonical order.
    pub(crate) fn strategies(&self, i: usize) -> Result<Vec<Strategy>, GameError> {
        let k = self.cells[i].len();
        match self.game.mode() {
            Mode::Psg1 => Ok((0..k).map(|j| vec![j]).collect()),
            Mode::Psg => {
                if k > self.limits.max_cell_size {
                    return Err(GameError::CellCap {
                        proposer: i,
                        size: k,
                        cap: self.limits.max_cell_size,
                    });
                }
                let mut out = Vec::with_capacity((1usize << k) - 1);
                let mut stack = Vec::new();
                nonempty_subsets_lex(0, k, &mut stack, &mut out);
                Ok(out)
            }
        }
    }

    pub fn strategy_count(&self, i: usize) -> u128 {
        let k = self.cells[i].len() as u32;
        match self.game.mode() {
            Mode::Psg1 => k as u128,
            Mode::Psg => (1u128 << k) - 1,
        }
    }

    pub fn profile_count(&self) -> u128 {
        (0..self.cells.len()).fold(1u128, |acc, i| acc.saturating_mul(self.strategy_count(i)))
    }

    fn check_profile_cap(&self) -> Result<(), GameError> {
        let profiles = self.profile_count();
        if profiles > self.limits.max_profiles {
            return Err(GameError::ProfileCap {
                profiles,
                cap: self.limits.max_profiles,
            });
        }
        Ok(())
    }

    // ---- best responses ---------------------------------------------------

    pub(crate) fn best_response_internal(&self, p: &Profile, i: usize) -> Result<(u64, Vec<Strategy>), GameError> {
        let mut q = p.clone();
        let mut best = 0u64;
        let mut argmax: Vec<Strategy> = Vec::new();
        for s in self.strategies(i)? {
            q[i] = s;
            let u = self.utilities_internal(&q)?[i];
            if argmax.is_empty() || u > best {
                best = u;
                argmax.clear();
                argmax.push(q[i].clone());
            } else if u == best {
                argmax.push(q[i].clone());
            }
        }
        Ok((best, argmax))
    }

    pub fn best_response(&self, s: &StrategyProfile, i: usize) -> Result<BestResponseResult, GameError> {
        if i >= self.cells.len() {
            return Err(GameError::Precondition(format!("no proposer {i}")));
        }
        let p = self.profile_of(s, Some(i))?;
        let (best_utility, argmax) = self.best_response_internal(&p, i)?;
        Ok(BestResponseResult {
            best_utility,
            best_strategies: argmax.iter().map(|st| self.strategy_ids(i, st)).collect(),
        })
    }

    pub(crate) fn is_nash_internal(&self, p: &Profile) -> Result<bool, GameError> {
        let current = self.utilities_internal(p)?;
        let mut q = p.clone();
        for i in 0..p.len() {
            for s in self.strategies(i)? {
                q[i] = s;
                if self.utilities_internal(&q)?[i] > current[i] {
                    return Ok(false);
                }
            }
            q[i] = p[i].clone();
        }
        Ok(true)
    }

    pub fn is_nash(&self, s: &StrategyProfile) -> Result<bool, GameError> {
        let p = self.profile_of(s, None)?;
        self.is_nash_internal(&p)
    }

    // ---- equilibrium search -------------------------------------------------

    /// Walks every profile, in lexicographic order of the strategy tuples,
    /// calling `visit` until it returns `Some`.
    pub(crate) fn for_each_profile<T>(
        &self,
        mut visit: impl FnMut(&Profile) -> Result<Option<T>, GameError>,
    ) -> Result<(Option<T>, u64), GameError> {
        self.check_profile_cap()?;
        let spaces: Vec<Vec<Strategy>> = (0..self.cells.len())
            .map(|i| self.strategies(i))
            .collect::<Result<_, _>>()?;
        let mut digits = vec![0usize; spaces.len()];
        let mut visited = 0u64;
        loop {
            let p: Profile = digits.iter().enumerate().map(|(i, &d)| spaces[i][d].clone()).collect();
            visited += 1;
            if let Some(found) = visit(&p)? {
                return Ok((Some(found), visited));
            }
            // Odometer: the last proposer varies fastest.
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return Ok((None, visited));
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < spaces[i].len() {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    pub fn ne_exists_bruteforce(&self) -> Result<NeSearchResult, GameError> {
        let (found, visited) = self.for_each_profile(|p| Ok(self.is_nash_internal(p)?.then(|| p.clone())))?;
        Ok(match found {
            Some(p) => NeSearchResult {
                status: NeStatus::Found,
                witness: Some(self.profile_ids(&p)),
                profiles_checked: visited,
            },
            None => NeSearchResult {
                status: NeStatus::None,
                witness: None,
                profiles_checked: visited,
            },
        })
    }

    /// Every profile with its utility vector, in canonical order.
    pub fn payoff_table(&self) -> Result<Vec<(StrategyProfile, UtilityVector)>, GameError> {
        let mut rows = Vec::new();
        self.for_each_profile(|p| {
            rows.push((self.profile_ids(p), UtilityVector(self.utilities_internal(p)?.to_vec())));
            Ok(None::<()>)
        })?;
        Ok(rows)
    }

    // ---- dynamics ------------------------------------------------------------

    /// Simultaneous best-response dynamics. A proposer keeps their current
    /// strategy when it is among their best responses, otherwise moves to the
    /// canonically first one.
    pub fn br_dynamics(&self, start: &StrategyProfile, max_iter: usize) -> Result<DynamicsResult, GameError> {
        let mut current = self.profile_of(start, None)?;
        let mut trajectory = vec![current.clone()];
        let mut visited: HashSet<Profile> = HashSet::from([current.clone()]);
        let mut iterations = 0;
        let status = loop {
            let utilities = self.utilities_internal(&current)?;
            let mut next = current.clone();
            let mut stable = true;
            for i in 0..current.len() {
                let (best, argmax) = self.best_response_internal(&current, i)?;
                if best > utilities[i] {
                    stable = false;
                }
                if !argmax.contains(&current[i]) {
                    next[i] = argmax[0].clone();
                }
            }
            if stable {
                break DynamicsStatus::Converged;
            }
            if iterations == max_iter {
                break DynamicsStatus::IterationLimit;
            }
            iterations += 1;
            trajectory.push(next.clone());
            if !visited.insert(next.clone()) {
                current = next;
                break DynamicsStatus::Cycle;
            }
            current = next;
        };
        let trajectory: Vec<StrategyProfile> = trajectory.iter().map(|p| self.profile_ids(p)).collect();
        Ok(DynamicsResult {
            status,
            final_profile: self.profile_ids(&current),
            trajectory,
            iterations,
        })
    }
}

fn nonempty_subsets_lex(from: usize, k: usize, stack: &mut Vec<usize>, out: &mut Vec<Strategy>) {
    for j in from..k {
        stack.push(j);
        out.push(stack.clone());
        nonempty_subsets_lex(j + 1, k, stack, out);
        stack.pop();
    }
}
