//! The batch experiment over a directory of `.pb` files.

use anyhow::{bail, Context, Result};
use psg_core::games::{self, experiment_classify, ClassifyConfig, DynamicsStatus, Limits, NeClass, NeStatus};
use psg_core::pabulib::{self, PartitionConfig, Partitioned, TieBreakPolicy};
use psg_core::{Election, Mode, ProjectId, RuleOptions, RuleSpec, StrategyProfile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How ties are broken for every instance of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TieBreakConfig {
    FileOrder,
    /// Per-file orders read from a JSON object mapping file names to id lists.
    Explicit { source: String, orders: BTreeMap<String, Vec<ProjectId>> },
}

impl TieBreakConfig {
    /// Parses `file-order` or `explicit:<path to JSON>`.
    pub fn parse(arg: &str) -> Result<Self> {
        if arg == "file-order" {
            return Ok(TieBreakConfig::FileOrder);
        }
        if let Some(path) = arg.strip_prefix("explicit:") {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading tie-break file {path}"))?;
            let orders: BTreeMap<String, Vec<ProjectId>> =
                serde_json::from_str(&text).with_context(|| format!("parsing tie-break file {path}"))?;
            return Ok(TieBreakConfig::Explicit {
                source: path.to_string(),
                orders,
            });
        }
        bail!("unknown tie-break policy `{arg}`; expected `file-order` or `explicit:<file.json>`")
    }

    fn policy_for(&self, file: &str) -> Result<TieBreakPolicy, String> {
        match self {
            TieBreakConfig::FileOrder => Ok(TieBreakPolicy::FileOrder),
            TieBreakConfig::Explicit { orders, .. } => orders
                .get(file)
                .map(|o| TieBreakPolicy::Explicit(o.clone()))
                .ok_or_else(|| format!("no explicit tie-breaking order configured for {file}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_iter: usize,
    pub max_cell_size: usize,
    pub max_profiles: u128,
    pub global_max_projects: usize,
    pub global_max_subsets: u128,
}

impl Default for Caps {
    fn default() -> Self {
        let limits = Limits::default();
        Caps {
            max_iter: 10,
            max_cell_size: limits.max_cell_size,
            max_profiles: limits.max_profiles,
            global_max_projects: limits.rule.global_max_projects,
            global_max_subsets: limits.rule.global_max_subsets,
        }
    }
}

impl Caps {
    pub fn limits(&self) -> Limits {
        Limits {
            max_cell_size: self.max_cell_size,
            max_profiles: self.max_profiles,
            rule: RuleOptions {
                global_max_projects: self.global_max_projects,
                global_max_subsets: self.global_max_subsets,
                ..RuleOptions::default()
            },
        }
    }
}

/// Everything that determines the outputs of a run, given the input files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub input_dir: PathBuf,
    pub seed: u64,
    pub proposers: Vec<usize>,
    pub rules: Vec<String>,
    pub mode: psg_core::Mode,
    pub max_projects: usize,
    pub tie_break: TieBreakConfig,
    pub caps: Caps,
}

impl RunManifest {
    pub fn new(input_dir: impl Into<PathBuf>, rules: &[RuleSpec], mode: Mode) -> Self {
        RunManifest {
            artifact_version: ARTIFACT_VERSION.to_string(),
            input_dir: input_dir.into(),
            seed: 0,
            proposers: vec![2, 3, 4, 5],
            rules: rules.iter().map(ToString::to_string).collect(),
            mode,
            max_projects: 10,
            tie_break: TieBreakConfig::FileOrder,
            caps: Caps::default(),
        }
    }

    pub fn rule_specs(&self) -> Result<Vec<RuleSpec>> {
        self.rules
            .iter()
            .map(|r| r.parse::<RuleSpec>().with_context(|| format!("rule `{r}`")))
            .collect()
    }
}

/// Seed of one (file, proposer count) instance, independent of scheduling.
pub fn instance_seed(seed: u64, file: &str, proposers: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((file.len() as u64).to_le_bytes());
    h.update(file.as_bytes());
    h.update((proposers as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InstanceStatus {
    Classified,
    Skipped,
    Error,
}

/// One line of `instances.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub file: String,
    pub rule: String,
    pub mode: Mode,
    pub proposers: usize,
    pub seed: u64,
    pub status: InstanceStatus,
    pub projects: usize,
    pub voters: usize,
    pub class: Option<NeClass>,
    pub iterations: Option<usize>,
    pub dynamics: Option<DynamicsStatus>,
    pub cycle_length: Option<usize>,
    pub witness: Option<StrategyProfile>,
    /// Whether the witness passed an independent Nash check.
    pub witness_verified: Option<bool>,
    pub reason: Option<String>,
    pub cells: Option<Vec<Vec<ProjectId>>>,
}

/// One line of `results.csv`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub rule: String,
    pub mode: String,
    pub l: usize,
    pub all: usize,
    pub full_ne: usize,
    pub br_ne: usize,
    pub bf_ne: usize,
    pub no_ne: usize,
    pub undecided: usize,
}

impl ExperimentRow {
    fn add(&mut self, class: NeClass) {
        self.all += 1;
        match class {
            NeClass::FullNe => self.full_ne += 1,
            NeClass::BrNe => self.br_ne += 1,
            NeClass::BfNe => self.bf_ne += 1,
            NeClass::NoNe => self.no_ne += 1,
            NeClass::Undecided => self.undecided += 1,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.all == self.full_ne + self.br_ne + self.bf_ne + self.no_ne + self.undecided
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub file: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub files: usize,
    pub parsed: usize,
    pub parse_errors: Vec<ParseFailure>,
    /// (file, proposer count) pairs left out by the size filters.
    pub skipped: usize,
    pub classified: usize,
    /// Games where dynamics found an equilibrium, and how many needed exactly one iteration.
    pub dynamics_ne: usize,
    pub dynamics_ne_one_iteration: usize,
    /// Witnesses that failed re-verification; always expected to be zero.
    pub unverified_witnesses: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub rows: Vec<ExperimentRow>,
    pub records: Vec<InstanceRecord>,
    pub summary: RunSummary,
}

fn list_pb_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pb")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load(path: &Path, tie: &TieBreakConfig) -> Result<Election, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let raw = pabulib::parse_pb(&text).map_err(|e| e.to_string())?;
    let policy = tie.policy_for(&file_name(path))?;
    pabulib::to_election(&raw, &policy).map_err(|e| e.to_string())
}

/// Classifies one game under every rule.
fn run_instance(
    file: &str,
    e: &Election,
    l: usize,
    rules: &[RuleSpec],
    m: &RunManifest,
) -> Vec<InstanceRecord> {
    let seed = instance_seed(m.seed, file, l);
    let base = |rule: &RuleSpec, status| InstanceRecord {
        file: file.to_string(),
        rule: rule.to_string(),
        mode: m.mode,
        proposers: l,
        seed,
        status,
        projects: e.num_projects(),
        voters: e.voters().len(),
        class: None,
        iterations: None,
        dynamics: None,
        cycle_length: None,
        witness: None,
        witness_verified: None,
        reason: None,
        cells: None,
    };
    let cfg = PartitionConfig {
        proposers: l,
        seed,
        max_projects: m.max_projects,
    };
    let game = match pabulib::partition_into_game(e, &cfg, m.mode) {
        Ok(Partitioned::Game(g)) => g,
        Ok(Partitioned::Skipped(why)) => {
            return rules
                .iter()
                .map(|r| InstanceRecord {
                    reason: Some(why.to_string()),
                    ..base(r, InstanceStatus::Skipped)
                })
                .collect()
        }
        Err(err) => {
            return rules
                .iter()
                .map(|r| InstanceRecord {
                    reason: Some(err.to_string()),
                    ..base(r, InstanceStatus::Error)
                })
                .collect()
        }
    };
    let classify = ClassifyConfig {
        max_iter: m.caps.max_iter,
        seed,
        limits: m.caps.limits(),
    };
    rules
        .iter()
        .map(|rule| {
            let report = experiment_classify(&game, rule, &classify);
            let solver = games::Solver::with_limits(&game, rule.clone(), m.caps.limits());
            let witness_verified = match report.class {
                NeClass::FullNe | NeClass::BrNe | NeClass::BfNe => {
                    Some(report.witness.as_ref().is_some_and(|w| solver.is_nash(w).unwrap_or(false)))
                }
                _ => None,
            };
            InstanceRecord {
                class: Some(report.class),
                iterations: report.iterations,
                dynamics: report.dynamics.as_ref().map(|d| d.status),
                cycle_length: report.dynamics.as_ref().and_then(|d| d.cycle_length()),
                witness: report.witness,
                witness_verified,
                reason: report.reason,
                cells: Some(game.proposers().to_vec()),
                ..base(rule, InstanceStatus::Classified)
            }
        })
        .collect()
}

pub fn run_experiments(m: &RunManifest) -> Result<RunOutput> {
    let rules = m.rule_specs()?;
    if m.proposers.iter().any(|&l| l == 0) {
        bail!("proposer counts must be at least 1");
    }
    let files = list_pb_files(&m.input_dir)?;
    let loaded: Vec<(String, Result<Election, String>)> = files
        .par_iter()
        .map(|p| (file_name(p), load(p, &m.tie_break)))
        .collect();

    let mut summary = RunSummary {
        files: files.len(),
        ..RunSummary::default()
    };
    let mut elections = Vec::new();
    for (name, result) in loaded {
        match result {
            Ok(e) => elections.push((name, e)),
            Err(error) => summary.parse_errors.push(ParseFailure { file: name, error }),
        }
    }
    summary.parsed = elections.len();

    let jobs: Vec<(&str, &Election, usize)> = elections
        .iter()
        .flat_map(|(name, e)| m.proposers.iter().map(move |&l| (name.as_str(), e, l)))
        .collect();
    let records: Vec<InstanceRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(name, e, l)| run_instance(name, e, l, &rules, m))
        .collect();

    let mut rows: Vec<ExperimentRow> = rules
        .iter()
        .flat_map(|r| {
            m.proposers.iter().map(move |&l| ExperimentRow {
                rule: r.to_string(),
                mode: m.mode.to_string(),
                l,
                ..ExperimentRow::default()
            })
        })
        .collect();
    let index = |rule: &str, l: usize| rows.iter().position(|r| r.rule == rule && r.l == l);
    let positions: Vec<Option<usize>> = records.iter().map(|rec| index(&rec.rule, rec.proposers)).collect();
    for (rec, pos) in records.iter().zip(positions) {
        match rec.status {
            InstanceStatus::Classified => {
                let class = rec.class.expect("classified records carry a class");
                rows[pos.expect("row for every rule and proposer count")].add(class);
                summary.classified += 1;
                if matches!(class, NeClass::FullNe | NeClass::BrNe) {
                    summary.dynamics_ne += 1;
                    if rec.iterations == Some(1) {
                        summary.dynamics_ne_one_iteration += 1;
                    }
                }
                if rec.witness_verified == Some(false) {
                    summary.unverified_witnesses += 1;
                }
            }
            InstanceStatus::Skipped | InstanceStatus::Error => summary.skipped += 1,
        }
    }
    Ok(RunOutput {
        manifest: m.clone(),
        rows,
        records,
        summary,
    })
}

pub fn rows_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("rule,mode,l,all,full_ne,br_ne,bf_ne,no_ne,undecided\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.rule, r.mode, r.l, r.all, r.full_ne, r.br_ne, r.bf_ne, r.no_ne, r.undecided
        );
    }
    out
}

pub fn records_jsonl(records: &[InstanceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Writes `results.csv`, `instances.jsonl`, `manifest.json` and `summary.json`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("results.csv", rows_csv(&out.rows))?;
    write("instances.jsonl", records_jsonl(&out.records))?;
    write("manifest.json", serde_json::to_string_pretty(&out.manifest)? + "\n")?;
    write("summary.json", serde_json::to_string_pretty(&out.summary)? + "\n")?;
    Ok(())
}

/// Human-readable report printed after a run.
pub fn summary_text(out: &RunOutput) -> String {
    let s = &out.summary;
    let mut t = String::new();
    let _ = writeln!(t, "files: {} ({} parsed, {} parse errors)", s.files, s.parsed, s.parse_errors.len());
    for f in &s.parse_errors {
        let _ = writeln!(t, "  parse error in {}: {}", f.file, f.error);
    }
    let _ = writeln!(t, "instances classified: {}, skipped: {}", s.classified, s.skipped);
    let _ = writeln!(
        t,
        "equilibria found by dynamics: {} ({} after one iteration)",
        s.dynamics_ne, s.dynamics_ne_one_iteration
    );
    if s.unverified_witnesses > 0 {
        let _ = writeln!(t, "WARNING: {} witnesses failed re-verification", s.unverified_witnesses);
    }
    if s.files == 0 {
        let _ = writeln!(t, "warning: no .pb files found in {}", out.manifest.input_dir.display());
    }
    t.push_str(&rows_csv(&out.rows));
    t
}

/// Re-checks a finished run: witnesses are equilibria, NO_NE games have none,
/// and every row adds up. Returns a description of each problem found.
pub fn verify_run(out: &RunOutput) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    for r in &out.rows {
        if !r.is_consistent() {
            problems.push(format!("row {} l={} does not sum to all", r.rule, r.l));
        }
        if out.manifest.mode == Mode::Psg1 && r.full_ne != 0 {
            problems.push(format!("row {} l={} has FULL_NE in PSG1 mode", r.rule, r.l));
        }
    }
    let mut elections: BTreeMap<&str, Election> = BTreeMap::new();
    for rec in out.records.iter().filter(|r| r.status == InstanceStatus::Classified) {
        if !elections.contains_key(rec.file.as_str()) {
            let e = load(&out.manifest.input_dir.join(&rec.file), &out.manifest.tie_break)
                .map_err(|e| anyhow::anyhow!("{}: {e}", rec.file))?;
            elections.insert(&rec.file, e);
        }
        let e = &elections[rec.file.as_str()];
        let game = psg_core::Game::new(e.clone(), rec.cells.clone().unwrap_or_default(), rec.mode)?;
        let rule: RuleSpec = rec.rule.parse()?;
        let solver = games::Solver::with_limits(&game, rule, out.manifest.caps.limits());
        let tag = format!("{} l={} {}", rec.file, rec.proposers, rec.rule);
        match rec.class {
            Some(NeClass::FullNe | NeClass::BrNe | NeClass::BfNe) => match &rec.witness {
                Some(w) if solver.is_nash(w)? => {}
                _ => problems.push(format!("{tag}: witness is not an equilibrium")),
            },
            Some(NeClass::NoNe) => {
                if solver.ne_exists_bruteforce()?.status != NeStatus::None {
                    problems.push(format!("{tag}: NO_NE but brute force finds one"));
                }
            }
            _ => {}
        }
        if rec.class == Some(NeClass::FullNe) && !solver.is_nash(&games::full_profile(&game)?)? {
            problems.push(format!("{tag}: FULL_NE but the full profile is not an equilibrium"));
        }
    }
    Ok(problems)
}
