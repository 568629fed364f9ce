//! Participatory budgeting and committee voting rules.
//!
//! Every rule is a deterministic function of the election, including its
//! tie-breaking order. Money, clock times and prices are exact rationals.

mod basicav;
pub(crate) mod compiled;
mod mes;
mod phragmen;
mod thiele;

use crate::model::{Election, ProjectId};
use crate::rational::{self, Rational};
use compiled::Compiled;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use thiele::w_score;
pub(crate) use thiele::score_indices;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MesUtility {
    /// A voter's utility from an approved project equals its cost.
    Cost,
    /// A voter's utility from an approved project is 1.
    Binary,
}

/// Non-increasing Thiele weight sequence with `w(1) = 1`; the last value
/// repeats forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WeightsRepr", into = "WeightsRepr")]
pub struct WeightFunction {
    values: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct WeightsRepr(#[serde(with = "rational::serde_vec_string")] Vec<Rational>);

impl TryFrom<WeightsRepr> for WeightFunction {
    type Error = RuleError;

    fn try_from(r: WeightsRepr) -> Result<Self, RuleError> {
        WeightFunction::new(r.0)
    }
}

impl From<WeightFunction> for WeightsRepr {
    fn from(w: WeightFunction) -> Self {
        WeightsRepr(w.values)
    }
}

impl WeightFunction {
    pub fn new(values: Vec<Rational>) -> Result<Self, RuleError> {
        if values.first() != Some(&rational::one()) {
            return Err(RuleError::InvalidWeights("the first weight must be 1".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(RuleError::InvalidWeights("weights must be non-increasing".into()));
        }
        if values.iter().any(|w| *w < rational::zero()) {
            return Err(RuleError::InvalidWeights("weights must be non-negative".into()));
        }
        Ok(WeightFunction { values })
    }

    /// Approval voting: every approved member counts fully.
    pub fn av() -> Self {
        WeightFunction { values: vec![rational::one()] }
    }

    /// Chamberlin-Courant: only the first approved member counts.
    pub fn cc() -> Self {
        WeightFunction {
            values: vec![rational::one(), rational::zero()],
        }
    }

    /// Harmonic weights `1, 1/2, ..., 1/len`, then constant `1/len`.
    pub fn pav(len: u64) -> Self {
        assert!(len >= 1);
        WeightFunction {
            values: (1..=len).map(|j| rational::ratio(1, j)).collect(),
        }
    }

    /// Weight of the `j`-th approved member (`j >= 1`).
    pub fn weight(&self, j: usize) -> &Rational {
        debug_assert!(j >= 1);
        &self.values[(j - 1).min(self.values.len() - 1)]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn is_av(&self) -> bool {
        self.values.iter().all(|v| *v == rational::one())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleSpec {
    BasicAv,
    Phragmen,
    Mes { mes_utilities: MesUtility },
    SeqThiele { weights: WeightFunction },
    GlobalThiele { weights: WeightFunction },
}

impl RuleSpec {
    pub fn mes() -> Self {
        RuleSpec::Mes { mes_utilities: MesUtility::Cost }
    }

    pub fn mes_binary() -> Self {
        RuleSpec::Mes { mes_utilities: MesUtility::Binary }
    }

    pub fn seq_cc() -> Self {
        RuleSpec::SeqThiele { weights: WeightFunction::cc() }
    }

    /// Rules that fund projects round by round, so that removing a project
    /// not funded in the first `i` rounds leaves those rounds unchanged.
    pub fn is_sequential(&self) -> bool {
        !matches!(self, RuleSpec::GlobalThiele { .. })
    }

    pub fn requires_unit_costs(&self) -> bool {
        matches!(self, RuleSpec::SeqThiele { .. } | RuleSpec::GlobalThiele { .. })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn weights(w: &WeightFunction) -> String {
            if w.is_av() {
                return "av".into();
            }
            if *w == WeightFunction::cc() {
                return "cc".into();
            }
            let len = w.values.len() as u64;
            if *w == WeightFunction::pav(len) {
                return format!("pav:{len}");
            }
            let parts: Vec<String> = w
                .values
                .iter()
                .map(|v| {
                    if v.is_integer() {
                        v.numer().to_string()
                    } else {
                        rational::format(v)
                    }
                })
                .collect();
            format!("thiele:{}", parts.join(","))
        }
        match self {
            RuleSpec::BasicAv => f.write_str("basicav"),
            RuleSpec::Phragmen => f.write_str("phragmen"),
            RuleSpec::Mes { mes_utilities: MesUtility::Cost } => f.write_str("mes"),
            RuleSpec::Mes { mes_utilities: MesUtility::Binary } => f.write_str("mes-binary"),
            RuleSpec::SeqThiele { weights: w } => write!(f, "seq-{}", weights(w)),
            RuleSpec::GlobalThiele { weights: w } => write!(f, "global-{}", weights(w)),
        }
    }
}

impl FromStr for RuleSpec {
    type Err = RuleError;

    /// Accepts `basicav`, `phragmen`, `mes`, `mes-binary`, and
    /// `seq-<w>` / `global-<w>` with `<w>` one of `av`, `cc`, `pav[:len]`
    /// or `thiele:<w1>,<w2>,...`.
    fn from_str(s: &str) -> Result<Self, RuleError> {
        let s = s.trim().to_ascii_lowercase();
        let parse_weights = |w: &str| -> Result<WeightFunction, RuleError> {
            match w {
                "av" => Ok(WeightFunction::av()),
                "cc" => Ok(WeightFunction::cc()),
                "pav" => Ok(WeightFunction::pav(DEFAULT_PAV_LEN)),
                _ => {
                    if let Some(len) = w.strip_prefix("pav:") {
                        let len: u64 = len
                            .parse()
                            .ok()
                            .filter(|&l| l >= 1)
                            .ok_or_else(|| RuleError::UnknownRule(s.clone()))?;
                        Ok(WeightFunction::pav(len))
                    } else if let Some(list) = w.strip_prefix("thiele:") {
                        let values = list
                            .split(',')
                            .map(|v| rational::parse(v).ok_or_else(|| RuleError::UnknownRule(s.clone())))
                            .collect::<Result<Vec<_>, _>>()?;
                        WeightFunction::new(values)
                    } else {
                        Err(RuleError::UnknownRule(s.clone()))
                    }
                }
            }
        };
        match s.as_str() {
            "basicav" | "basic-av" | "av" => Ok(RuleSpec::BasicAv),
            "phragmen" => Ok(RuleSpec::Phragmen),
            "mes" | "mes-cost" => Ok(RuleSpec::mes()),
            "mes-binary" => Ok(RuleSpec::mes_binary()),
            "seqcc" => Ok(RuleSpec::seq_cc()),
            _ => {
                if let Some(w) = s.strip_prefix("seq-") {
                    Ok(RuleSpec::SeqThiele { weights: parse_weights(w)? })
                } else if let Some(w) = s.strip_prefix("global-") {
                    Ok(RuleSpec::GlobalThiele { weights: parse_weights(w)? })
                } else {
                    Err(RuleError::UnknownRule(s.clone()))
                }
            }
        }
    }
}

/// Truncation length used for `pav` without an explicit length.
pub const DEFAULT_PAV_LEN: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("MES needs at least one voter")]
    NoVoters,
    #[error("{rule} is defined for unit costs only")]
    NonUnitCosts { rule: String },
    #[error(
        "global Thiele enumeration over {projects} projects ({subsets} committees) \
         exceeds the cap of {max_projects} projects / {max_subsets} committees"
    )]
    EnumerationCap {
        projects: usize,
        subsets: u128,
        max_projects: usize,
        max_subsets: u128,
    },
    #[error("invalid weight function: {0}")]
    InvalidWeights(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceLevel {
    #[default]
    Off,
    Rounds,
    /// Rounds plus per-voter balances after every round.
    Balances,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleOptions {
    pub trace: TraceLevel,
    pub global_max_projects: usize,
    pub global_max_subsets: u128,
}

impl Default for RuleOptions {
    fn default() -> Self {
        RuleOptions {
            trace: TraceLevel::Off,
            global_max_projects: 20,
            global_max_subsets: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Funded,
    Dropped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub project: ProjectId,
    pub action: Action,
    /// Phragmén purchase time or MES price `rho`; for Thiele rules the
    /// marginal score gain.
    #[serde(with = "rational::serde_opt_string")]
    pub time_or_rho: Option<Rational>,
    /// Per-voter balances after the round, in voter order.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_balances",
        deserialize_with = "de_balances"
    )]
    pub balances: Option<Vec<Rational>>,
}

fn ser_balances<S: serde::Serializer>(b: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
    match b {
        Some(v) => {
            let strs: Vec<String> = v.iter().map(rational::format).collect();
            s.serialize_some(&strs)
        }
        None => s.serialize_none(),
    }
}

fn de_balances<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
    use serde::de::Error;
    let v = Option::<Vec<String>>::deserialize(d)?;
    v.map(|v| {
        v.iter()
            .map(|s| rational::parse(s).ok_or_else(|| D::Error::custom(format!("invalid rational `{s}`"))))
            .collect()
    })
    .transpose()
}

/// Result of running a rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// Funded projects in the order they were selected.
    pub funded: Vec<ProjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

impl Outcome {
    pub fn contains(&self, id: &ProjectId) -> bool {
        self.funded.contains(id)
    }

    pub fn funded_set(&self) -> std::collections::BTreeSet<ProjectId> {
        self.funded.iter().cloned().collect()
    }

    /// Trace as JSON lines, one record per round.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.trace.iter().flatten() {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Index-level trace record; balances are per ballot class.
#[derive(Clone, Debug)]
pub(crate) struct RawRound {
    pub project: usize,
    pub action: Action,
    pub value: Option<Rational>,
    pub class_balances: Option<Vec<Rational>>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct RawOutcome {
    pub funded: Vec<usize>,
    pub rounds: Option<Vec<RawRound>>,
}

impl RawOutcome {
    pub fn new(trace: TraceLevel) -> Self {
        RawOutcome {
            funded: Vec::new(),
            rounds: (trace != TraceLevel::Off).then(Vec::new),
        }
    }

    pub fn record(&mut self, project: usize, action: Action, value: Option<Rational>, balances: impl FnOnce() -> Vec<Rational>, level: TraceLevel) {
        if let Some(rounds) = &mut self.rounds {
            rounds.push(RawRound {
                project,
                action,
                value,
                class_balances: (level == TraceLevel::Balances).then(balances),
            });
        }
    }
}

/// Evaluates `spec` on the sub-election of `c` restricted to `active` projects.
pub(crate) fn evaluate(
    c: &Compiled,
    active: &[bool],
    spec: &RuleSpec,
    opts: &RuleOptions,
) -> Result<RawOutcome, RuleError> {
    match spec {
        RuleSpec::BasicAv => Ok(basicav::run(c, active, opts.trace)),
        RuleSpec::Phragmen => Ok(phragmen::run(c, active, opts.trace)),
        RuleSpec::Mes { mes_utilities } => mes::run(c, active, *mes_utilities, opts.trace),
        RuleSpec::SeqThiele { weights } => {
            if !c.has_unit_costs(active) {
                return Err(RuleError::NonUnitCosts { rule: spec.to_string() });
            }
            Ok(thiele::run_sequential(c, active, weights, opts.trace))
        }
        RuleSpec::GlobalThiele { weights } => {
            if !c.has_unit_costs(active) {
                return Err(RuleError::NonUnitCosts { rule: spec.to_string() });
            }
            thiele::run_global(c, active, weights, opts)
        }
    }
}

pub(crate) fn to_outcome(e: &Election, c: &Compiled, raw: RawOutcome) -> Outcome {
    let id = |i: usize| e.projects()[i].id.clone();
    Outcome {
        funded: raw.funded.iter().map(|&i| id(i)).collect(),
        trace: raw.rounds.map(|rounds| {
            rounds
                .into_iter()
                .enumerate()
                .map(|(round, r)| TraceRecord {
                    round: round + 1,
                    project: id(r.project),
                    action: r.action,
                    time_or_rho: r.value,
                    balances: r
                        .class_balances
                        .map(|b| c.voter_class.iter().map(|&k| b[k].clone()).collect()),
                })
                .collect()
        }),
    }
}

pub fn run_rule_with(e: &Election, spec: &RuleSpec, opts: &RuleOptions) -> Result<Outcome, RuleError> {
    let c = Compiled::new(e);
    let raw = evaluate(&c, &c.all_active(), spec, opts)?;
    Ok(to_outcome(e, &c, raw))
}

pub fn run_rule(e: &Election, spec: &RuleSpec) -> Result<Outcome, RuleError> {
    run_rule_with(e, spec, &RuleOptions::default())
}

/// Greedy approval voting: projects in decreasing approval score (ties by
/// the tie-breaking order), each funded iff it still fits.
pub fn run_basicav(e: &Election) -> Outcome {
    run_rule(e, &RuleSpec::BasicAv).expect("BasicAV never fails")
}

/// Sequential Phragmén with an exact event-driven clock.
pub fn run_phragmen(e: &Election) -> Outcome {
    run_rule(e, &RuleSpec::Phragmen).expect("Phragmén never fails")
}

/// Method of Equal Shares without any completion step.
pub fn run_mes(e: &Election, variant: MesUtility) -> Result<Outcome, RuleError> {
    run_rule(e, &RuleSpec::Mes { mes_utilities: variant })
}

pub fn run_seq_thiele(e: &Election, w: &WeightFunction) -> Result<Outcome, RuleError> {
    run_rule(e, &RuleSpec::SeqThiele { weights: w.clone() })
}

pub fn run_global_thiele(e: &Election, w: &WeightFunction) -> Result<Outcome, RuleError> {
    run_rule(e, &RuleSpec::GlobalThiele { weights: w.clone() })
}
