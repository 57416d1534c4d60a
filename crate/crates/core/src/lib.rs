//! Scoring of multiple-choice response matrices with corrections for
//! guessing, classical item statistics, reliability coefficients, IRT
//! likelihood fitting and a simulator for recovery experiments.

pub mod error;
pub mod experiment;
pub mod io;
pub mod irt;
pub mod matrix;
pub mod reliability;
pub mod sim;
pub mod stats;

pub use error::{Error, Result, Stat, Undefined};
pub use matrix::{
    prune, prune_jointly, score_matrix, ItemBank, MatrixKind, Outcome, PruneOutcome, PruneReport,
    ResponseMatrix, Scheme, ScoredMatrix,
};
