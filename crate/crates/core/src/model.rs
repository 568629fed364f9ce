//! Elections, games and strategy profiles shared by every other module.
//!
//! [`Election`] and [`Game`] are validated on construction and immutable
//! afterwards. Their serde representation goes through the unchecked
//! [`ElectionData`] / [`GameData`] mirrors, so a deserialized value is always
//! well-formed.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProjectId(pub String);

impl ProjectId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProjectId {
    fn from(s: &str) -> Self {
        ProjectId(s.to_owned())
    }
}

impl From<String> for ProjectId {
    fn from(s: String) -> Self {
        ProjectId(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    /// Cost in minor currency units; at least 1.
    pub cost: u64,
}

impl Project {
    pub fn new(id: impl Into<ProjectId>, cost: u64) -> Self {
        Project { id: id.into(), cost }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Voter {
    pub id: String,
    pub approvals: BTreeSet<ProjectId>,
}

impl Voter {
    pub fn new<I, P>(id: impl Into<String>, approvals: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<ProjectId>,
    {
        Voter {
            id: id.into(),
            approvals: approvals.into_iter().map(Into::into).collect(),
        }
    }
}

/// Unchecked election record, the serialized form of [`Election`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionData {
    pub projects: Vec<Project>,
    pub voters: Vec<Voter>,
    pub budget: u64,
    pub tie_break: Vec<ProjectId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateProjectId { project: ProjectId },
    ZeroCost { project: ProjectId },
    DanglingApproval { voter: String, project: ProjectId },
    TieBreakNotPermutation {
        missing: Vec<ProjectId>,
        unknown: Vec<ProjectId>,
        repeated: Vec<ProjectId>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateProjectId { project } => write!(f, "duplicate project id `{project}`"),
            Violation::ZeroCost { project } => write!(f, "project `{project}` has zero cost"),
            Violation::DanglingApproval { voter, project } => {
                write!(f, "voter `{voter}` approves unknown project `{project}`")
            }
            Violation::TieBreakNotPermutation { missing, unknown, repeated } => write!(
                f,
                "tie-breaking order is not a permutation of the projects \
                 (missing {missing:?}, unknown {unknown:?}, repeated {repeated:?})"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed election: {0}")]
    InvalidElection(ValidationReport),
    #[error("malformed game: {0}")]
    InvalidGame(String),
    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),
}

/// Lists every violated election invariant. Empty iff the election is well-formed.
pub fn validate_election(e: &ElectionData) -> ValidationReport {
    let mut violations = Vec::new();
    let mut ids = HashSet::new();
    for p in &e.projects {
        if !ids.insert(&p.id) {
            violations.push(Violation::DuplicateProjectId { project: p.id.clone() });
        }
        if p.cost == 0 {
            violations.push(Violation::ZeroCost { project: p.id.clone() });
        }
    }
    for v in &e.voters {
        for a in &v.approvals {
            if !ids.contains(a) {
                violations.push(Violation::DanglingApproval {
                    voter: v.id.clone(),
                    project: a.clone(),
                });
            }
        }
    }
    let mut seen = HashSet::new();
    let mut unknown = Vec::new();
    let mut repeated = Vec::new();
    for t in &e.tie_break {
        if !ids.contains(t) {
            unknown.push(t.clone());
        } else if !seen.insert(t) {
            repeated.push(t.clone());
        }
    }
    let missing: Vec<ProjectId> = e
        .projects
        .iter()
        .filter(|p| !seen.contains(&p.id))
        .map(|p| p.id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !(missing.is_empty() && unknown.is_empty() && repeated.is_empty()) {
        violations.push(Violation::TieBreakNotPermutation { missing, unknown, repeated });
    }
    ValidationReport { violations }
}

/// A well-formed participatory budgeting election.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ElectionData", into = "ElectionData")]
pub struct Election {
    data: ElectionData,
    index: HashMap<ProjectId, usize>,
    /// Tie-breaking rank per project index; 0 is the most preferred.
    rank: Vec<usize>,
}

impl PartialEq for Election {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl Eq for Election {}

impl TryFrom<ElectionData> for Election {
    type Error = ModelError;

    fn try_from(data: ElectionData) -> Result<Self, ModelError> {
        let report = validate_election(&data);
        if !report.is_empty() {
            return Err(ModelError::InvalidElection(report));
        }
        let index: HashMap<ProjectId, usize> = data
            .projects
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        let mut rank = vec![0; data.projects.len()];
        for (r, id) in data.tie_break.iter().enumerate() {
            rank[index[id]] = r;
        }
        Ok(Election { data, index, rank })
    }
}

impl From<Election> for ElectionData {
    fn from(e: Election) -> Self {
        e.data
    }
}

impl Election {
    pub fn new(
        projects: Vec<Project>,
        voters: Vec<Voter>,
        budget: u64,
        tie_break: Vec<ProjectId>,
    ) -> Result<Self, ModelError> {
        ElectionData { projects, voters, budget, tie_break }.try_into()
    }

    /// Builds an election whose tie-breaking order is the project order.
    pub fn with_project_order(
        projects: Vec<Project>,
        voters: Vec<Voter>,
        budget: u64,
    ) -> Result<Self, ModelError> {
        let tie_break = projects.iter().map(|p| p.id.clone()).collect();
        Self::new(projects, voters, budget, tie_break)
    }

    pub fn data(&self) -> &ElectionData {
        &self.data
    }

    pub fn projects(&self) -> &[Project] {
        &self.data.projects
    }

    pub fn voters(&self) -> &[Voter] {
        &self.data.voters
    }

    pub fn budget(&self) -> u64 {
        self.data.budget
    }

    pub fn tie_break(&self) -> &[ProjectId] {
        &self.data.tie_break
    }

    pub fn num_projects(&self) -> usize {
        self.data.projects.len()
    }

    pub fn index_of(&self, id: &ProjectId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn project(&self, id: &ProjectId) -> Option<&Project> {
        self.index_of(id).map(|i| &self.data.projects[i])
    }

    pub fn contains(&self, id: &ProjectId) -> bool {
        self.index.contains_key(id)
    }

    /// Tie-breaking rank of the project at index `i` (0 = most preferred).
    pub fn rank(&self, i: usize) -> usize {
        self.rank[i]
    }

    pub fn cost_of<'a, I>(&self, ids: I) -> u64
    where
        I: IntoIterator<Item = &'a ProjectId>,
    {
        ids.into_iter()
            .filter_map(|id| self.project(id))
            .map(|p| p.cost)
            .sum()
    }

    /// Indices of the voters approving project `id`.
    pub fn support(&self, id: &ProjectId) -> Vec<usize> {
        self.data
            .voters
            .iter()
            .enumerate()
            .filter(|(_, v)| v.approvals.contains(id))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_unit_costs(&self) -> bool {
        self.data.projects.iter().all(|p| p.cost == 1)
    }

    /// Restriction to the projects in `keep`: approvals are intersected and the
    /// tie-breaking order keeps its relative order. Voters and budget are unchanged.
    pub fn restrict(&self, keep: &HashSet<&ProjectId>) -> Election {
        let data = ElectionData {
            projects: self
                .data
                .projects
                .iter()
                .filter(|p| keep.contains(&p.id))
                .cloned()
                .collect(),
            voters: self
                .data
                .voters
                .iter()
                .map(|v| Voter {
                    id: v.id.clone(),
                    approvals: v.approvals.iter().filter(|a| keep.contains(a)).cloned().collect(),
                })
                .collect(),
            budget: self.data.budget,
            tie_break: self
                .data
                .tie_break
                .iter()
                .filter(|id| keep.contains(id))
                .cloned()
                .collect(),
        };
        Election::try_from(data).expect("restriction of a valid election is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StructureClass {
    General,
    Laminar,
    PartyList,
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureClass::General => "GENERAL",
            StructureClass::Laminar => "LAMINAR",
            StructureClass::PartyList => "PARTY_LIST",
        })
    }
}

/// Most specific structure class of the supporter sets: party-list (equal or
/// disjoint), laminar (nested or disjoint), or general.
pub fn classify_structure(e: &Election) -> StructureClass {
    let supports: Vec<Vec<usize>> = e.projects().iter().map(|p| e.support(&p.id)).collect();
    let mut class = StructureClass::PartyList;
    for a in 0..supports.len() {
        for b in a + 1..supports.len() {
            let (sa, sb) = (&supports[a], &supports[b]);
            let common = intersection_size(sa, sb);
            if common == 0 || (sa.len() == sb.len() && common == sa.len()) {
                continue;
            }
            if common == sa.len() || common == sb.len() {
                class = StructureClass::Laminar;
            } else {
                return StructureClass::General;
            }
        }
    }
    class
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Each proposer submits a nonempty subset of their projects.
    #[serde(rename = "PSG")]
    Psg,
    /// Each proposer submits exactly one project.
    #[serde(rename = "PSG1")]
    Psg1,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Psg => "psg",
            Mode::Psg1 => "psg1",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "psg" => Ok(Mode::Psg),
            "psg1" | "psg/1" => Ok(Mode::Psg1),
            other => Err(format!("unknown mode `{other}` (expected psg or psg1)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameData {
    pub election: Election,
    pub proposers: Vec<Vec<ProjectId>>,
    pub mode: Mode,
}

/// An election universe together with an ordered partition of its projects
/// among proposers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GameData", into = "GameData")]
pub struct Game {
    data: GameData,
    /// Owning proposer per project index.
    owner: Vec<usize>,
}

impl TryFrom<GameData> for Game {
    type Error = ModelError;

    fn try_from(data: GameData) -> Result<Self, ModelError> {
        let e = &data.election;
        if data.proposers.is_empty() {
            return Err(ModelError::InvalidGame("a game needs at least one proposer".into()));
        }
        let mut owner = vec![usize::MAX; e.num_projects()];
        for (i, cell) in data.proposers.iter().enumerate() {
            if cell.is_empty() {
                return Err(ModelError::InvalidGame(format!("proposer {i} owns no projects")));
            }
            for id in cell {
                let idx = e
                    .index_of(id)
                    .ok_or_else(|| ModelError::InvalidGame(format!("proposer {i} owns unknown project `{id}`")))?;
                if owner[idx] != usize::MAX {
                    return Err(ModelError::InvalidGame(format!("project `{id}` is owned twice")));
                }
                owner[idx] = i;
            }
        }
        if let Some(idx) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(ModelError::InvalidGame(format!(
                "project `{}` is not owned by any proposer",
                e.projects()[idx].id
            )));
        }
        Ok(Game { data, owner })
    }
}

impl From<Game> for GameData {
    fn from(g: Game) -> Self {
        g.data
    }
}

impl Game {
    pub fn new(election: Election, proposers: Vec<Vec<ProjectId>>, mode: Mode) -> Result<Self, ModelError> {
        GameData { election, proposers, mode }.try_into()
    }

    pub fn election(&self) -> &Election {
        &self.data.election
    }

    pub fn proposers(&self) -> &[Vec<ProjectId>] {
        &self.data.proposers
    }

    pub fn num_proposers(&self) -> usize {
        self.data.proposers.len()
    }

    pub fn mode(&self) -> Mode {
        self.data.mode
    }

    pub fn with_mode(&self, mode: Mode) -> Game {
        Game {
            data: GameData { mode, ..self.data.clone() },
            owner: self.owner.clone(),
        }
    }

    /// Proposer owning the project at election index `idx`.
    pub fn owner_of_index(&self, idx: usize) -> usize {
        self.owner[idx]
    }

    pub fn owner_of(&self, id: &ProjectId) -> Option<usize> {
        self.data.election.index_of(id).map(|i| self.owner[i])
    }

    /// Checks the profile invariants: one nonempty strategy per proposer, each
    /// within the proposer's cell, singletons in PSG1 mode.
    pub fn check_profile(&self, s: &StrategyProfile) -> Result<(), ModelError> {
        if s.strategies.len() != self.num_proposers() {
            return Err(ModelError::InvalidProfile(format!(
                "expected {} strategies, got {}",
                self.num_proposers(),
                s.strategies.len()
            )));
        }
        for (i, si) in s.strategies.iter().enumerate() {
            if si.is_empty() {
                return Err(ModelError::InvalidProfile(format!("proposer {i} submits nothing")));
            }
            if self.mode() == Mode::Psg1 && si.len() != 1 {
                return Err(ModelError::InvalidProfile(format!(
                    "proposer {i} submits {} projects in PSG1 mode",
                    si.len()
                )));
            }
            for id in si {
                if self.owner_of(id) != Some(i) {
                    return Err(ModelError::InvalidProfile(format!(
                        "project `{id}` does not belong to proposer {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One submitted project set per proposer.
///
/// Strategies are sets of ids, so their canonical form is the sorted id
/// tuple and profiles compare lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub strategies: Vec<BTreeSet<ProjectId>>,
}

impl StrategyProfile {
    pub fn new<S, P>(strategies: impl IntoIterator<Item = S>) -> Self
    where
        S: IntoIterator<Item = P>,
        P: Into<ProjectId>,
    {
        StrategyProfile {
            strategies: strategies
                .into_iter()
                .map(|s| s.into_iter().map(Into::into).collect())
                .collect(),
        }
    }

    pub fn submitted(&self) -> impl Iterator<Item = &ProjectId> {
        self.strategies.iter().flatten()
    }

    pub fn with_strategy(&self, i: usize, s: BTreeSet<ProjectId>) -> Self {
        let mut out = self.clone();
        out.strategies[i] = s;
        out
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.strategies.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (j, id) in s.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{id}")?;
            }
            f.write_str("}")?;
        }
        f.write_str(")")
    }
}

/// The election `E(s)` induced by a profile: only submitted projects remain.
pub fn induced_election(g: &Game, s: &StrategyProfile) -> Result<Election, ModelError> {
    g.check_profile(s)?;
    let keep: HashSet<&ProjectId> = s.submitted().collect();
    Ok(g.election().restrict(&keep))
}
