//! Library side of the `psg` command: the batch experiment, single-game
//! analysis and fixture export.

pub mod analyze;
pub mod experiment;
pub mod export;
