//! Model-based discriminant analysis with stepwise BIC variable selection.
//!
//! Class-conditional Gaussians with parsimonious covariance structures are
//! fitted to labeled rows, optionally updated by EM with unlabeled rows.
//! Variables are chosen by comparing a "grouping" model, in which a
//! proposed variable carries class information, against a "no grouping"
//! model in which it is a linear regression on the variables already
//! chosen. Greedy and headlong (first-improvement) searches are provided.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod dataset;
mod error;
pub mod harness;
pub mod linalg;
pub mod math;
pub mod mixture;
pub mod modelcomp;
pub mod search;
pub mod synthetic;

pub use covariance::{CovarianceSet, CovarianceStructure, GroupScatter};
pub use dataset::{aggregate, stratified_split, Dataset, LabeledSplit};
pub use error::{Error, Result};
pub use harness::{evaluate_split, frequency_histogram, merge_classes, score_outcome, summarize, SplitRecord, Summary};
pub use mixture::{best_structure_fit, classify, fit_semisupervised, fit_supervised, Fitting, MixtureModel, Responsibilities};
pub use modelcomp::{compare_add, compare_remove, fit_regression, ComparisonResult, Proposal, RegressionFit};
pub use search::{run, CandidateOrder, Decision, SearchConfig, SelectionOutcome, SelectionState, Strategy, TraceRecord};
