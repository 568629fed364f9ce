//! Drill-down report for a single game.

use anyhow::{Context, Result};
use psg_core::fixtures::Sidecar;
use psg_core::games::{
    experiment_classify, ClassifyConfig, ClassifyReport, DynamicsResult, Limits, NeSearchResult, Solver,
    UtilityVector,
};
use psg_core::{Game, RuleSpec, StrategyProfile};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Payoff matrices are printed only up to this many profiles.
pub const MATRIX_MAX_PROFILES: u128 = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffEntry {
    pub profile: StrategyProfile,
    pub utilities: UtilityVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCheck {
    pub label: String,
    pub profile: StrategyProfile,
    pub expected: UtilityVector,
    pub actual: Option<UtilityVector>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rule: String,
    pub mode: psg_core::Mode,
    pub proposers: usize,
    pub projects: usize,
    pub budget: u64,
    pub classification: ClassifyReport,
    /// Exhaustive search, or the reason it was not run.
    pub equilibrium: Result<NeSearchResult, String>,
    /// Dynamics from the start profile of the classification protocol.
    pub dynamics: Option<DynamicsResult>,
    pub start_utilities: Option<UtilityVector>,
    pub payoff_matrix: Option<Vec<PayoffEntry>>,
    pub expected: Option<Vec<CellCheck>>,
}

impl AnalysisReport {
    pub fn expected_ok(&self) -> bool {
        self.expected.as_ref().is_none_or(|cells| cells.iter().all(|c| c.ok))
    }

    /// One-line verdict, e.g. "no NE; best-response cycle of length 4".
    pub fn headline(&self) -> String {
        let mut parts = Vec::new();
        match &self.equilibrium {
            Ok(search) => match &search.witness {
                Some(w) => parts.push(format!("NE {w}")),
                None => parts.push("no NE".to_string()),
            },
            Err(reason) => parts.push(format!("equilibrium search UNDECIDED ({reason})")),
        }
        if let Some(d) = &self.dynamics {
            match d.cycle_length() {
                Some(k) => parts.push(format!("best-response cycle of length {k}")),
                None => parts.push(format!(
                    "dynamics {} after {} iterations",
                    status_name(d),
                    d.iterations
                )),
            }
        }
        parts.join("; ")
    }
}

fn status_name(d: &DynamicsResult) -> &'static str {
    match d.status {
        psg_core::games::DynamicsStatus::Converged => "CONVERGED",
        psg_core::games::DynamicsStatus::Cycle => "CYCLE",
        psg_core::games::DynamicsStatus::IterationLimit => "ITERATION_LIMIT",
    }
}

fn utilities_text(u: &UtilityVector) -> String {
    let parts: Vec<String> = u.0.iter().map(u64::to_string).collect();
    format!("({})", parts.join(", "))
}

pub fn analyze(game: &Game, rule: &RuleSpec, cfg: &ClassifyConfig, expected: Option<&Sidecar>) -> AnalysisReport {
    let limits: Limits = cfg.limits.clone();
    let solver = Solver::with_limits(game, rule.clone(), limits);
    let classification = experiment_classify(game, rule, cfg);
    let equilibrium = solver.ne_exists_bruteforce().map_err(|e| e.to_string());
    let dynamics = classification.dynamics.clone();
    let start_utilities = dynamics
        .as_ref()
        .and_then(|d| solver.utilities(&d.trajectory[0]).ok());
    let payoff_matrix = (game.num_proposers() <= 2 && solver.profile_count() <= MATRIX_MAX_PROFILES)
        .then(|| solver.payoff_table().ok())
        .flatten()
        .map(|rows| {
            rows.into_iter()
                .map(|(profile, utilities)| PayoffEntry { profile, utilities })
                .collect()
        });
    let expected = expected.map(|sidecar| {
        sidecar
            .expected
            .iter()
            .map(|cell| {
                let actual = solver.utilities(&cell.profile).ok();
                CellCheck {
                    label: cell.label.clone(),
                    profile: cell.profile.clone(),
                    expected: cell.utilities.clone(),
                    ok: actual.as_ref() == Some(&cell.utilities),
                    actual,
                }
            })
            .collect()
    });
    let e = game.election();
    AnalysisReport {
        rule: rule.to_string(),
        mode: game.mode(),
        proposers: game.num_proposers(),
        projects: e.num_projects(),
        budget: e.budget(),
        classification,
        equilibrium,
        dynamics,
        start_utilities,
        payoff_matrix,
        expected,
    }
}

pub fn report_text(r: &AnalysisReport) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "game: {} proposers, {} projects, budget {}, mode {}",
        r.proposers, r.projects, r.budget, r.mode
    );
    let _ = writeln!(t, "rule: {}", r.rule);
    let _ = writeln!(t, "verdict: {}", r.headline());
    let c = &r.classification;
    let _ = write!(t, "classification: {}", c.class);
    if let Some(reason) = &c.reason {
        let _ = write!(t, " ({reason})");
    }
    t.push('\n');
    match &r.equilibrium {
        Ok(search) => match &search.witness {
            Some(w) => {
                let _ = writeln!(t, "equilibrium: {w} (first of {} profiles searched in order)", search.profiles_checked);
            }
            None => {
                let _ = writeln!(t, "equilibrium: NONE ({} profiles checked)", search.profiles_checked);
            }
        },
        Err(reason) => {
            let _ = writeln!(t, "equilibrium: UNDECIDED ({reason})");
        }
    }
    if let Some(d) = &r.dynamics {
        let _ = writeln!(t, "dynamics: {} after {} iterations", status_name(d), d.iterations);
        for (k, p) in d.trajectory.iter().enumerate() {
            let _ = writeln!(t, "  {k}: {p}");
        }
        if let Some(len) = d.cycle_length() {
            let _ = writeln!(t, "  cycle length {len}");
        }
    }
    if let Some(u) = &r.start_utilities {
        let _ = writeln!(t, "start utilities: {}", utilities_text(u));
    }
    if let Some(rows) = &r.payoff_matrix {
        let _ = writeln!(t, "payoff matrix ({} profiles):", rows.len());
        for row in rows {
            let _ = writeln!(t, "  {} -> {}", row.profile, utilities_text(&row.utilities));
        }
    }
    if let Some(cells) = &r.expected {
        let _ = writeln!(t, "expected cells:");
        for c in cells {
            let actual = c.actual.as_ref().map_or_else(|| "error".to_string(), utilities_text);
            let mark = if c.ok { "ok" } else { "MISMATCH" };
            let _ = writeln!(
                t,
                "  [{mark}] {}: {} expected {} got {}",
                c.label,
                c.profile,
                utilities_text(&c.expected),
                actual
            );
        }
    }
    t
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
