//! Project submission games for participatory budgeting.
//!
//! Proposers own candidate projects and choose which of them to submit to a
//! participatory budgeting election; their payoff is the total cost of their
//! funded projects. The crate provides the voting rules (BasicAV, Phragmén,
//! Method of Equal Shares, sequential and global Thiele), the strategic layer
//! (utilities, best responses, Nash equilibrium search, best-response
//! dynamics, constructive equilibria), a catalogue of worked example games,
//! and a reader for Pabulib `.pb` files.

pub mod fixtures;
pub mod games;
pub mod model;
pub mod pabulib;
pub mod rational;
pub mod rules;

pub use model::{
    classify_structure, induced_election, validate_election, Election, ElectionData, Game, Mode, ModelError,
    Project, ProjectId, StrategyProfile, StructureClass, ValidationReport, Violation, Voter,
};
pub use rational::Rational;
pub use rules::{
    run_basicav, run_global_thiele, run_mes, run_phragmen, run_rule, run_rule_with, run_seq_thiele, MesUtility,
    Outcome, RuleError, RuleOptions, RuleSpec, TraceLevel, WeightFunction,
};
