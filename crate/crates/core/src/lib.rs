//! Causal graphs, single-world intervention graphs and discrete structural
//! models for reasoning about which observed-data functionals identify which
//! effects in a randomized trial with imperfect adherence.
//!
//! Variables carry fixed roles: assignment `Z`, post-assignment covariate
//! `X`, treatment taken `A`, latent `U` and outcome `Y`.

pub mod cli;
pub mod error;
pub mod estimands;
pub mod graph;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod scenarios;
pub mod scm;

pub use error::{Error, Result};

pub const ASSIGNMENT: &str = "Z";
pub const COVARIATE: &str = "X";
pub const TREATMENT: &str = "A";
pub const LATENT: &str = "U";
pub const OUTCOME: &str = "Y";
