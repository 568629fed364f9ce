//! Worked example games with their known payoffs, plus a seeded generator of
//! random games for property tests.

use crate::games::UtilityVector;
use crate::model::{Election, Game, Mode, ModelError, Project, ProjectId, StrategyProfile, StructureClass, Voter};
use crate::rules::RuleSpec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One labelled cell of a payoff matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedCell {
    pub label: String,
    pub profile: StrategyProfile,
    pub utilities: UtilityVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "witness", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExpectedNe {
    /// No pure Nash equilibrium exists.
    None,
    Witness(StrategyProfile),
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub game: Game,
    /// Every rule the expected cells hold for.
    pub rules: Vec<RuleSpec>,
    pub expected: Vec<ExpectedCell>,
    pub expected_ne: ExpectedNe,
}

/// Expected results stored next to an exported game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub name: String,
    pub rules: Vec<String>,
    pub expected: Vec<ExpectedCell>,
    pub expected_ne: ExpectedNe,
}

impl Fixture {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            name: self.name.to_string(),
            rules: self.rules.iter().map(|r| r.to_string()).collect(),
            expected: self.expected.clone(),
            expected_ne: self.expected_ne.clone(),
        }
    }

    pub fn game_json(&self) -> String {
        serde_json::to_string_pretty(&self.game).expect("game serializes")
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoNeVariant {
    /// A single voter approving every project.
    SingleVoter,
    /// Each project has its own group of supporters, as many as its cost.
    Plurality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetRule {
    Phragmen,
    Mes,
}

/// Builds voters from `(count, approval set)` blocks with ids `v0, v1, ...`.
fn blocks(spec: &[(usize, &[&str])]) -> Vec<Voter> {
    let mut voters = Vec::new();
    for &(count, approvals) in spec {
        for _ in 0..count {
            let id = format!("v{}", voters.len());
            voters.push(Voter::new(id, approvals.iter().copied()));
        }
    }
    voters
}

fn projects(spec: &[(&str, u64)]) -> Vec<Project> {
    spec.iter().map(|&(id, cost)| Project::new(id, cost)).collect()
}

fn ids(list: &[&str]) -> Vec<ProjectId> {
    list.iter().map(|&s| ProjectId::from(s)).collect()
}

fn cell(label: &str, profile: &[&[&str]], utilities: &[u64]) -> ExpectedCell {
    ExpectedCell {
        label: label.to_string(),
        profile: StrategyProfile::new(profile.iter().map(|s| s.iter().copied())),
        utilities: UtilityVector(utilities.to_vec()),
    }
}

fn game(election: Election, cells: &[&[&str]], mode: Mode) -> Game {
    Game::new(election, cells.iter().map(|c| ids(c)).collect(), mode).expect("fixture game is valid")
}

/// Two proposers, tree projects and bike projects, under BasicAV. Submitting
/// everything is not an equilibrium; withholding the large tree project and
/// the large bike project is.
pub fn intro_example() -> Fixture {
    let ps = projects(&[
        ("T1", 50_000),
        ("T2", 30_000),
        ("T3", 30_000),
        ("B1", 10_000),
        ("B2", 7_000),
        ("B3", 7_000),
    ]);
    let voters = blocks(&[
        (6_000, &["T1"]),
        (5_000, &["T2"]),
        (3_000, &["T3"]),
        (4_000, &["B1"]),
        (2_000, &["B2"]),
        (1_000, &["B3"]),
    ]);
    let e = Election::with_project_order(ps, voters, 75_000).expect("valid election");
    let g = game(e, &[&["T1", "T2", "T3"], &["B1", "B2", "B3"]], Mode::Psg);
    let ne: &[&[&str]] = &[&["T2", "T3"], &["B2", "B3"]];
    Fixture {
        name: "intro",
        game: g,
        rules: vec![RuleSpec::BasicAv],
        expected: vec![
            cell("full", &[&["T1", "T2", "T3"], &["B1", "B2", "B3"]], &[50_000, 24_000]),
            cell("trees withheld", &[&["T2", "T3"], &["B1", "B2", "B3"]], &[60_000, 10_000]),
            cell("equilibrium", ne, &[60_000, 14_000]),
        ],
        expected_ne: ExpectedNe::Witness(StrategyProfile::new(ne.iter().map(|s| s.iter().copied()))),
    }
}

/// Two proposers with three projects each and budget 14; no equilibrium.
/// The payoff matrix is reduced to submitting or withholding `a1` and `b1`.
pub fn two_proposer_no_ne(variant: NoNeVariant) -> Fixture {
    let costs = [("a1", 5), ("a2", 4), ("a3", 2), ("b1", 6), ("b2", 4), ("b3", 4)];
    let ps = projects(&costs);
    let tie = ids(&["a1", "b1", "b2", "b3", "a2", "a3"]);
    let (voters, rules, name) = match variant {
        NoNeVariant::SingleVoter => (
            blocks(&[(1, &["a1", "a2", "a3", "b1", "b2", "b3"])]),
            vec![RuleSpec::BasicAv, RuleSpec::mes()],
            "no-ne-single-voter",
        ),
        NoNeVariant::Plurality => {
            let spec: Vec<(usize, [&str; 1])> = costs.iter().map(|&(id, c)| (c as usize, [id])).collect();
            let spec: Vec<(usize, &[&str])> = spec.iter().map(|(n, a)| (*n, &a[..])).collect();
            (blocks(&spec), vec![RuleSpec::Phragmen], "no-ne-plurality")
        }
    };
    let e = Election::new(ps, voters, 14, tie).expect("valid election");
    let g = game(e, &[&["a1", "a2", "a3"], &["b1", "b2", "b3"]], Mode::Psg);
    Fixture {
        name,
        game: g,
        rules,
        expected: vec![
            cell("a1 in, b1 in", &[&["a1", "a2", "a3"], &["b1", "b2", "b3"]], &[7, 6]),
            cell("a1 out, b1 in", &[&["a2", "a3"], &["b1", "b2", "b3"]], &[0, 14]),
            cell("a1 in, b1 out", &[&["a1", "a2", "a3"], &["b2", "b3"]], &[5, 8]),
            cell("a1 out, b1 out", &[&["a2", "a3"], &["b2", "b3"]], &[6, 8]),
        ],
        expected_ne: ExpectedNe::None,
    }
}

/// Three proposers and unit costs; no equilibrium under Phragmén (budget 4)
/// or MES (budget 8). The matrix is reduced to submitting or withholding
/// `p1` and `q1`.
pub fn three_proposer_gadget(rule: GadgetRule) -> Fixture {
    let ps = projects(&[
        ("p1", 1),
        ("p2", 1),
        ("p3", 1),
        ("q1", 1),
        ("q2", 1),
        ("q3", 1),
        ("r1", 1),
        ("r2", 1),
    ]);
    let voters = blocks(&[
        (6, &["p1"]),
        (9, &["p1", "q1", "q2"]),
        (9, &["p1", "q1", "q3"]),
        (6, &["p1", "q1", "p2"]),
        (6, &["p1", "q1", "p3"]),
        (6, &["r1"]),
        (6, &["r2"]),
    ]);
    let tie = ids(&["p1", "q1", "p2", "p3", "q2", "q3", "r1", "r2"]);
    // With budget 8, MES also buys r1 and r2 in every cell below.
    let (budget, spec, name, r_payoffs) = match rule {
        GadgetRule::Phragmen => (4, RuleSpec::Phragmen, "gadget-phragmen", [0, 1, 1, 2]),
        GadgetRule::Mes => (8, RuleSpec::mes(), "gadget-mes", [2, 2, 2, 2]),
    };
    let e = Election::new(ps, voters, budget, tie).expect("valid election");
    let g = game(e, &[&["p1", "p2", "p3"], &["q1", "q2", "q3"], &["r1", "r2"]], Mode::Psg);
    let r: &[&str] = &["r1", "r2"];
    Fixture {
        name,
        game: g,
        rules: vec![spec],
        expected: vec![
            cell("p1 out, q1 out", &[&["p2", "p3"], &["q2", "q3"], r], &[2, 2, r_payoffs[0]]),
            cell("p1 in, q1 out", &[&["p1", "p2", "p3"], &["q2", "q3"], r], &[1, 2, r_payoffs[1]]),
            cell("p1 out, q1 in", &[&["p2", "p3"], &["q1", "q2", "q3"], r], &[0, 3, r_payoffs[2]]),
            cell("p1 in, q1 in", &[&["p1", "p2", "p3"], &["q1", "q2", "q3"], r], &[1, 1, r_payoffs[3]]),
        ],
        expected_ne: ExpectedNe::None,
    }
}

/// One-project-per-proposer game with a single voter and budget 6; no
/// equilibrium under BasicAV or MES.
pub fn psg1_no_ne_game() -> Fixture {
    let ps = projects(&[("a1", 1), ("a2", 3), ("b1", 4), ("b2", 5)]);
    let voters = blocks(&[(1, &["a1", "a2", "b1", "b2"])]);
    let tie = ids(&["a1", "b1", "a2", "b2"]);
    let e = Election::new(ps, voters, 6, tie).expect("valid election");
    let g = game(e, &[&["a1", "a2"], &["b1", "b2"]], Mode::Psg1);
    Fixture {
        name: "psg1-no-ne",
        game: g,
        rules: vec![RuleSpec::BasicAv, RuleSpec::mes()],
        expected: vec![
            cell("a1, b1", &[&["a1"], &["b1"]], &[1, 4]),
            cell("a2, b1", &[&["a2"], &["b1"]], &[0, 4]),
            cell("a1, b2", &[&["a1"], &["b2"]], &[1, 5]),
            cell("a2, b2", &[&["a2"], &["b2"]], &[3, 0]),
        ],
        expected_ne: ExpectedNe::None,
    }
}

/// Two proposers with four unit-cost projects each; no equilibrium under
/// sequential Chamberlin-Courant with committee size 4.
pub fn cc_gadget() -> Fixture {
    let ps = projects(&[
        ("p1", 1),
        ("p2", 1),
        ("p3", 1),
        ("p4", 1),
        ("q1", 1),
        ("q2", 1),
        ("q3", 1),
        ("q4", 1),
    ]);
    let voters = blocks(&[
        (6, &["p2"]),
        (6, &["p1", "p3"]),
        (6, &["p1", "p4"]),
        (6, &["p1", "q1", "q2"]),
        (6, &["p1", "q1", "q3"]),
        (6, &["q1", "q4"]),
    ]);
    let tie = ids(&["p1", "q1", "q4", "p3", "q2", "q3", "p2", "p4"]);
    let e = Election::new(ps, voters, 4, tie).expect("valid election");
    let g = game(e, &[&["p1", "p2", "p3", "p4"], &["q1", "q2", "q3", "q4"]], Mode::Psg);
    let (p, q): (&[&str], &[&str]) = (&["p2", "p3", "p4"], &["q2", "q3", "q4"]);
    Fixture {
        name: "cc-gadget",
        game: g,
        rules: vec![RuleSpec::seq_cc()],
        expected: vec![
            cell("p1 in, q1 in", &[&["p1", "p2", "p3", "p4"], &["q1", "q2", "q3", "q4"]], &[2, 2]),
            cell("p1 in, q1 out", &[&["p1", "p2", "p3", "p4"], q], &[3, 1]),
            cell("p1 out, q1 in", &[p, &["q1", "q2", "q3", "q4"]], &[3, 1]),
            cell("p1 out, q1 out", &[p, q], &[1, 3]),
        ],
        expected_ne: ExpectedNe::None,
    }
}

/// Every worked example.
pub fn all() -> Vec<Fixture> {
    vec![
        intro_example(),
        two_proposer_no_ne(NoNeVariant::SingleVoter),
        two_proposer_no_ne(NoNeVariant::Plurality),
        three_proposer_gadget(GadgetRule::Phragmen),
        three_proposer_gadget(GadgetRule::Mes),
        psg1_no_ne_game(),
        cc_gadget(),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|f| f.name).collect()
}

// ---- random games -------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModel {
    Unit,
    /// Costs drawn uniformly from `1..=max`.
    Uniform { max: u64 },
}

#[derive(Clone, Debug)]
pub struct RandomGameConfig {
    /// Number of projects.
    pub m: usize,
    /// Number of proposers.
    pub proposers: usize,
    /// Number of voters; for structured elections, an upper bound.
    pub voters: usize,
    pub costs: CostModel,
    pub structure: StructureClass,
    pub mode: Mode,
    /// Budget; drawn at random from `1..=total cost` when absent.
    pub budget: Option<u64>,
    pub seed: u64,
}

impl RandomGameConfig {
    pub fn new(m: usize, proposers: usize, seed: u64) -> Self {
        RandomGameConfig {
            m,
            proposers,
            voters: 12,
            costs: CostModel::Unit,
            structure: StructureClass::General,
            mode: Mode::Psg,
            budget: None,
            seed,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RandomGameError {
    #[error("{m} projects cannot be split among {proposers} proposers")]
    TooFewProjects { m: usize, proposers: usize },
    #[error("at least one proposer is required")]
    NoProposers,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Seeded random game. Every proposer owns at least one project, the
/// tie-breaking order is a random permutation, and the supporter sets follow
/// the requested structure.
pub fn random_game(cfg: &RandomGameConfig) -> Result<Game, RandomGameError> {
    if cfg.proposers == 0 {
        return Err(RandomGameError::NoProposers);
    }
    if cfg.m < cfg.proposers {
        return Err(RandomGameError::TooFewProjects { m: cfg.m, proposers: cfg.proposers });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.m.to_string().len();
    let pids: Vec<ProjectId> = (0..cfg.m).map(|i| ProjectId(format!("c{i:0width$}"))).collect();
    let projects: Vec<Project> = pids
        .iter()
        .map(|id| {
            let cost = match cfg.costs {
                CostModel::Unit => 1,
                CostModel::Uniform { max } => rng.gen_range(1..=max.max(1)),
            };
            Project { id: id.clone(), cost }
        })
        .collect();

    let approvals: Vec<BTreeSet<usize>> = match cfg.structure {
        StructureClass::General => general_approvals(&mut rng, cfg.m, cfg.voters),
        StructureClass::PartyList => party_list_approvals(&mut rng, cfg.m, cfg.voters),
        StructureClass::Laminar => laminar_approvals(&mut rng, cfg.m, cfg.voters),
    };
    let voters = approvals
        .iter()
        .enumerate()
        .map(|(v, a)| Voter::new(format!("v{v}"), a.iter().map(|&p| pids[p].clone())))
        .collect();

    let total: u64 = projects.iter().map(|p| p.cost).sum();
    let budget = cfg.budget.unwrap_or_else(|| rng.gen_range(1..=total));
    let mut tie = pids.clone();
    tie.shuffle(&mut rng);
    let election = Election::new(projects, voters, budget, tie)?;

    let mut order: Vec<usize> = (0..cfg.m).collect();
    order.shuffle(&mut rng);
    let mut cells: Vec<Vec<ProjectId>> = vec![Vec::new(); cfg.proposers];
    for (k, &p) in order.iter().enumerate() {
        let owner = if k < cfg.proposers { k } else { rng.gen_range(0..cfg.proposers) };
        cells[owner].push(pids[p].clone());
    }
    Ok(Game::new(election, cells, cfg.mode)?)
}

fn general_approvals(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<BTreeSet<usize>> {
    let density = rng.gen_range(0.2..0.7);
    (0..n)
        .map(|_| (0..m).filter(|_| rng.gen_bool(density)).collect())
        .collect()
}

/// Projects are split into parties; each party gets its own voter block
/// approving exactly the party's projects.
fn party_list_approvals(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<BTreeSet<usize>> {
    let parties = rng.gen_range(1..=m);
    let mut members: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); parties];
    for p in 0..m {
        let k = if p < parties { p } else { rng.gen_range(0..parties) };
        members[k].insert(p);
    }
    let mut voters = Vec::new();
    for party in members {
        let size = rng.gen_range(0..=n.max(1));
        voters.extend(std::iter::repeat(party).take(size));
    }
    voters
}

/// Projects form a random forest. Each project has a private voter block
/// whose members approve the project and all its ancestors, so a project's
/// supporters are the blocks of its subtree: siblings are disjoint and
/// descendants nested.
fn laminar_approvals(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<BTreeSet<usize>> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut parent: Vec<Option<usize>> = vec![None; m];
    for k in 1..m {
        if rng.gen_bool(0.7) {
            parent[order[k]] = Some(order[rng.gen_range(0..k)]);
        }
    }
    let per_block = (n / m.max(1)).max(1);
    let mut voters = Vec::new();
    for p in 0..m {
        let mut chain = BTreeSet::new();
        let mut cur = Some(p);
        while let Some(c) = cur {
            chain.insert(c);
            cur = parent[c];
        }
        let size = rng.gen_range(0..=per_block + 1);
        voters.extend(std::iter::repeat(chain).take(size));
    }
    voters
}
