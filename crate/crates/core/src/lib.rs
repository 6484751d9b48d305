//! Constrained latent-space Bayesian optimization: a conditional VAE learns
//! where feasible decisions live, a GP searches its latent space, and
//! infeasible decodes are projected onto the nearest known feasible point.

pub mod cvae;
pub mod error;
pub mod gp;
pub mod objectives;
pub mod optimizer;
pub mod problem;
pub mod redistricting;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use problem::Problem;
pub use rng::RngSeed;
pub use types::{Dataset, Decision, EvaluationRecord, LabeledDecision};
