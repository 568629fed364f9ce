//! Reader and writer for Pabulib `.pb` files, and the random proposer
//! partition used to turn an election into a game.
//!
//! A file has three sections introduced by the lines `META`, `PROJECTS` and
//! `VOTES`. Each section is semicolon-separated with a header row. Only
//! approval ballots are supported.

use crate::model::{Election, Game, Mode, ModelError, Project, ProjectId, Voter};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionName {
    Meta,
    Projects,
    Votes,
}

impl SectionName {
    const ORDER: [SectionName; 3] = [SectionName::Meta, SectionName::Projects, SectionName::Votes];

    fn keyword(self) -> &'static str {
        match self {
            SectionName::Meta => "META",
            SectionName::Projects => "PROJECTS",
            SectionName::Votes => "VOTES",
        }
    }
}

impl fmt::Display for SectionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PbErrorKind {
    #[error("missing section {0}")]
    MissingSection(SectionName),
    #[error("section {found} appears where {expected} was expected")]
    SectionOrder { expected: SectionName, found: SectionName },
    #[error("section {section} has no header row")]
    MissingHeader { section: SectionName },
    #[error("section {section} lacks required column `{column}`")]
    MissingColumn { section: SectionName, column: String },
    #[error("META lacks the `budget` key")]
    MissingBudget,
    #[error("cannot parse {field} `{value}` as a non-negative decimal")]
    BadNumber { field: String, value: String },
    #[error("vote of `{voter}` references unknown project `{project}`")]
    UnknownProject { voter: String, project: String },
    #[error("duplicate project id `{0}`")]
    DuplicateProject(String),
    #[error("vote_type `{0}` is not supported; only approval ballots are")]
    UnsupportedVoteType(String),
    #[error("malformed row: {0}")]
    Csv(String),
}

/// A parse error, located at a 1-based line of the input when possible.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct PbError {
    pub line: Option<usize>,
    pub kind: PbErrorKind,
}

impl fmt::Display for PbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

fn err(line: Option<usize>, kind: PbErrorKind) -> PbError {
    PbError { line, kind }
}

/// A non-negative decimal kept as `mantissa / 10^scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: u128,
    pub scale: u32,
}

impl Decimal {
    pub fn parse(s: &str) -> Option<Decimal> {
        let s = s.trim();
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int}{frac}");
        let mantissa = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        Some(Decimal {
            mantissa,
            scale: frac.len() as u32,
        })
    }

    /// The value multiplied by `10^scale`, which must not be below `self.scale`.
    pub fn scaled(self, scale: u32) -> Option<u64> {
        let factor = 10u128.checked_pow(scale - self.scale)?;
        u64::try_from(self.mantissa.checked_mul(factor)?).ok()
    }
}

/// Column names and data rows of one section.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Input line of each row.
    pub lines: Vec<usize>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// A parsed file. Unknown keys and columns are kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawInstance {
    pub meta: Vec<(String, String)>,
    pub projects: Table,
    pub votes: Table,
    pub budget: Decimal,
    /// `(id, cost)` per PROJECTS row, in file order.
    pub costs: Vec<(ProjectId, Decimal)>,
    /// `(voter id, approved ids)` per VOTES row, in file order.
    pub ballots: Vec<(String, Vec<ProjectId>)>,
}

impl RawInstance {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn num_projects(&self) -> usize {
        self.costs.len()
    }
}

/// Splits the input into sections and parses each with a `;`-delimited
/// CSV reader, so quoted fields may contain the delimiter.
fn read_table(section: SectionName, body: &str, first_line: usize) -> Result<Table, PbError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut table = Table::default();
    let mut have_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| first_line + p.line() as usize - 1);
            err(line, PbErrorKind::Csv(e.to_string()))
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = first_line + record.position().map_or(1, |p| p.line() as usize) - 1;
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if have_header {
            table.rows.push(fields);
            table.lines.push(line);
        } else {
            table.header = fields;
            have_header = true;
        }
    }
    if !have_header {
        return Err(err(Some(first_line.saturating_sub(1)), PbErrorKind::MissingHeader { section }));
    }
    Ok(table)
}

fn required(table: &Table, section: SectionName, column: &str, header_line: usize) -> Result<usize, PbError> {
    table.column(column).ok_or_else(|| {
        err(
            Some(header_line),
            PbErrorKind::MissingColumn {
                section,
                column: column.to_string(),
            },
        )
    })
}

pub fn parse_pb(text: &str) -> Result<RawInstance, PbError> {
    // (section, line of the keyword, body)
    let mut sections: Vec<(SectionName, usize, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        let keyword = SectionName::ORDER
            .into_iter()
            .find(|s| trimmed.eq_ignore_ascii_case(s.keyword()));
        match (keyword, sections.last_mut()) {
            (Some(s), _) => {
                let expected = SectionName::ORDER.get(sections.len()).copied();
                if expected != Some(s) {
                    let kind = match expected {
                        Some(expected) => PbErrorKind::SectionOrder { expected, found: s },
                        None => PbErrorKind::SectionOrder { expected: SectionName::Votes, found: s },
                    };
                    return Err(err(Some(n + 1), kind));
                }
                sections.push((s, n + 1, String::new()));
            }
            (None, Some((_, _, body))) => {
                body.push_str(line);
                body.push('\n');
            }
            (None, None) if trimmed.is_empty() => {}
            (None, None) => return Err(err(Some(n + 1), PbErrorKind::MissingSection(SectionName::Meta))),
        }
    }
    if let Some(&missing) = SectionName::ORDER.get(sections.len()) {
        return Err(err(None, PbErrorKind::MissingSection(missing)));
    }
    let mut tables = sections
        .iter()
        .map(|(s, line, body)| read_table(*s, body, line + 1).map(|t| (t, *line)));
    let (meta_table, _) = tables.next().expect("three sections")?;
    let (projects, projects_line) = tables.next().expect("three sections")?;
    let (votes, votes_line) = tables.next().expect("three sections")?;

    // META: the header row is usually `key;value`; every data row is a pair.
    let meta: Vec<(String, String)> = meta_table
        .rows
        .iter()
        .map(|r| (r[0].clone(), r.get(1).cloned().unwrap_or_default()))
        .collect();
    let meta_line = |key: &str| {
        meta_table
            .rows
            .iter()
            .position(|r| r[0] == key)
            .map(|i| meta_table.lines[i])
    };
    let budget_str = meta
        .iter()
        .find(|(k, _)| k == "budget")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| err(None, PbErrorKind::MissingBudget))?;
    let budget = Decimal::parse(&budget_str).ok_or_else(|| {
        err(
            meta_line("budget"),
            PbErrorKind::BadNumber {
                field: "budget".into(),
                value: budget_str.clone(),
            },
        )
    })?;
    if let Some((_, vt)) = meta.iter().find(|(k, _)| k == "vote_type") {
        if vt != "approval" {
            return Err(err(meta_line("vote_type"), PbErrorKind::UnsupportedVoteType(vt.clone())));
        }
    }

    let header_line = |section_line: usize, t: &Table| {
        t.lines.first().map_or(section_line + 1, |&l| l.saturating_sub(1).max(section_line + 1))
    };
    let id_col = required(&projects, SectionName::Projects, "project_id", header_line(projects_line, &projects))?;
    let cost_col = required(&projects, SectionName::Projects, "cost", header_line(projects_line, &projects))?;
    let mut costs = Vec::with_capacity(projects.rows.len());
    let mut known: HashSet<String> = HashSet::new();
    for (row, &line) in projects.rows.iter().zip(&projects.lines) {
        let id = row.get(id_col).cloned().unwrap_or_default();
        let cost_str = row.get(cost_col).cloned().unwrap_or_default();
        let cost = Decimal::parse(&cost_str).ok_or_else(|| {
            err(
                Some(line),
                PbErrorKind::BadNumber {
                    field: format!("cost of project `{id}`"),
                    value: cost_str.clone(),
                },
            )
        })?;
        if !known.insert(id.clone()) {
            return Err(err(Some(line), PbErrorKind::DuplicateProject(id)));
        }
        costs.push((ProjectId(id), cost));
    }

    let voter_col = required(&votes, SectionName::Votes, "voter_id", header_line(votes_line, &votes))?;
    let vote_col = required(&votes, SectionName::Votes, "vote", header_line(votes_line, &votes))?;
    let mut ballots = Vec::with_capacity(votes.rows.len());
    for (row, &line) in votes.rows.iter().zip(&votes.lines) {
        let voter = row.get(voter_col).cloned().unwrap_or_default();
        let mut approved = Vec::new();
        for p in row.get(vote_col).map(String::as_str).unwrap_or("").split(',') {
            let p = p.trim();
            if p.is_empty() {
                continue;
            }
            if !known.contains(p) {
                return Err(err(
                    Some(line),
                    PbErrorKind::UnknownProject {
                        voter,
                        project: p.to_string(),
                    },
                ));
            }
            approved.push(ProjectId::from(p));
        }
        ballots.push((voter, approved));
    }

    Ok(RawInstance {
        meta,
        projects,
        votes,
        budget,
        costs,
        ballots,
    })
}

/// Writes a parsed instance back in `.pb` form.
pub fn write_pb(raw: &RawInstance) -> String {
    let mut out = String::new();
    let mut section = |name: &str, header: &[String], rows: &mut dyn Iterator<Item = Vec<String>>| {
        out.push_str(name);
        out.push('\n');
        let mut w = csv::WriterBuilder::new()
            .delimiter(b';')
            .flexible(true)
            .from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input"));
    };
    section(
        "META",
        &["key".to_string(), "value".to_string()],
        &mut raw.meta.iter().map(|(k, v)| vec![k.clone(), v.clone()]),
    );
    section("PROJECTS", &raw.projects.header, &mut raw.projects.rows.iter().cloned());
    section("VOTES", &raw.votes.header, &mut raw.votes.rows.iter().cloned());
    out
}

/// Renders an election with integer amounts as a `.pb` file.
pub fn election_to_pb(e: &Election, description: &str) -> String {
    let mut out = String::new();
    out.push_str("META\nkey;value\n");
    out.push_str(&format!("description;{description}\n"));
    out.push_str(&format!("num_projects;{}\n", e.num_projects()));
    out.push_str(&format!("num_votes;{}\n", e.voters().len()));
    out.push_str(&format!("budget;{}\n", e.budget()));
    out.push_str("vote_type;approval\n");
    out.push_str("PROJECTS\nproject_id;cost\n");
    for p in e.projects() {
        out.push_str(&format!("{};{}\n", p.id, p.cost));
    }
    out.push_str("VOTES\nvoter_id;vote\n");
    for v in e.voters() {
        let ids: Vec<&str> = v.approvals.iter().map(|p| p.as_str()).collect();
        out.push_str(&format!("{};{}\n", v.id, ids.join(",")));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "order", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TieBreakPolicy {
    /// Projects in the order of the PROJECTS section.
    FileOrder,
    /// A configured order that must list every project exactly once.
    Explicit(Vec<ProjectId>),
}

impl fmt::Display for TieBreakPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TieBreakPolicy::FileOrder => f.write_str("file-order"),
            TieBreakPolicy::Explicit(_) => f.write_str("explicit"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("amount of {field} overflows 64 bits after scaling by 10^{scale}")]
    Overflow { field: String, scale: u32 },
    #[error("tie-breaking order does not match the projects: {0}")]
    TieBreak(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Converts amounts to integers by scaling every one of them with `10^d`,
/// where `d` is the largest number of decimal places among the budget and
/// the costs.
pub fn to_election(raw: &RawInstance, policy: &TieBreakPolicy) -> Result<Election, ConvertError> {
    let d = raw.costs.iter().map(|(_, c)| c.scale).chain([raw.budget.scale]).max().unwrap_or(0);
    let scale = |value: Decimal, field: &dyn Fn() -> String| {
        value.scaled(d).ok_or_else(|| ConvertError::Overflow { field: field(), scale: d })
    };
    let budget = scale(raw.budget, &|| "budget".to_string())?;
    let projects = raw
        .costs
        .iter()
        .map(|(id, c)| Ok(Project { id: id.clone(), cost: scale(*c, &|| format!("project `{id}`"))? }))
        .collect::<Result<Vec<_>, ConvertError>>()?;
    let voters = raw
        .ballots
        .iter()
        .map(|(id, approved)| Voter {
            id: id.clone(),
            approvals: approved.iter().cloned().collect(),
        })
        .collect();
    let tie_break = match policy {
        TieBreakPolicy::FileOrder => raw.costs.iter().map(|(id, _)| id.clone()).collect(),
        TieBreakPolicy::Explicit(order) => {
            let given: BTreeSet<&ProjectId> = order.iter().collect();
            let all: BTreeSet<&ProjectId> = raw.costs.iter().map(|(id, _)| id).collect();
            if given != all || order.len() != all.len() {
                let missing: Vec<&str> = all.difference(&given).map(|p| p.as_str()).collect();
                let unknown: Vec<&str> = given.difference(&all).map(|p| p.as_str()).collect();
                return Err(ConvertError::TieBreak(format!(
                    "missing [{}], unknown [{}], {} entries for {} projects",
                    missing.join(","),
                    unknown.join(","),
                    order.len(),
                    all.len()
                )));
            }
            order.clone()
        }
    };
    Ok(Election::new(projects, voters, budget, tie_break)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// Number of proposers, at least 1.
    pub proposers: usize,
    pub seed: u64,
    /// Elections with more projects are skipped.
    pub max_projects: usize,
}

impl PartitionConfig {
    pub fn new(proposers: usize, seed: u64) -> Self {
        PartitionConfig {
            proposers,
            seed,
            max_projects: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SkipReason {
    TooManyProjects { projects: usize, max: usize },
    TooFewProjects { projects: usize, proposers: usize },
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::TooManyProjects { projects, max } => write!(f, "{projects} projects exceed the cap of {max}"),
            SkipReason::TooFewProjects { projects, proposers } => {
                write!(f, "{projects} projects are fewer than {} (proposers + 1)", proposers + 1)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Partitioned {
    Game(Game),
    Skipped(SkipReason),
}

/// Deals a seeded shuffle of the projects into `proposers` cells whose
/// sizes differ by at most one; the first `m mod proposers` cells get the
/// larger size.
pub fn partition_into_game(e: &Election, cfg: &PartitionConfig, mode: Mode) -> Result<Partitioned, ModelError> {
    let m = e.num_projects();
    let l = cfg.proposers;
    if l == 0 {
        return Err(ModelError::InvalidGame("at least one proposer is required".into()));
    }
    if m > cfg.max_projects {
        return Ok(Partitioned::Skipped(SkipReason::TooManyProjects {
            projects: m,
            max: cfg.max_projects,
        }));
    }
    if m < l + 1 {
        return Ok(Partitioned::Skipped(SkipReason::TooFewProjects { projects: m, proposers: l }));
    }
    let mut ids: Vec<ProjectId> = e.projects().iter().map(|p| p.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (base, extra) = (m / l, m % l);
    let mut cells = Vec::with_capacity(l);
    let mut rest = ids.as_slice();
    for i in 0..l {
        let size = base + usize::from(i < extra);
        let (head, tail) = rest.split_at(size);
        cells.push(head.to_vec());
        rest = tail;
    }
    Ok(Partitioned::Game(Game::new(e.clone(), cells, mode)?))
}
