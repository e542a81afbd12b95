//! Numerical Nevanlinna theory for random entire functions.
//!
//! The crate evaluates growth and value-distribution functionals of
//! truncated power series `Σ a_j χ_j z^j` with random coefficients, and runs
//! seeded Monte Carlo experiments over them.
//!
//! - [`series`]: coefficient sequences, truncation, `σ(r,f)` and `M(r,f)`.
//! - [`random`]: coefficient models and reproducible per-trial streams.
//! - [`functionals`]: zeros, counting functions, `m`, `T`, `X_r`.
//! - [`experiments`]: trial runner, record streams and report folds.
//! - [`cli`]: the `nevrand` command-line front end.

// NaN-rejecting range checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod poly;
pub mod quadrature;
pub mod random;
pub mod roots;
pub mod series;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind, RecordFormat, RunManifest, WorkerCount};
pub use error::{Error, Result};
pub use random::{RandomModel, TruncatedSample};
pub use series::{CoefficientSequence, TruncationPolicy};

/// `git describe` of the build, or the package version outside a checkout.
pub const VERSION: &str = env!("NEVRAND_VERSION");
