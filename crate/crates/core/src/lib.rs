//! Trotterised quantum simulation with quantum-chaos diagnostics.
//!
//! This crate simulates first-order Trotter-Suzuki digital dynamics for three
//! model families — the all-to-all Ising model (quantum kicked top), the
//! nearest-neighbour Heisenberg chain, and the Rabi-Dicke cavity model — and
//! provides the diagnostics needed to locate the step-size threshold where the
//! digitised dynamics turn quantum chaotic:
//!
//! - dynamical signatures (observable expectations, participation ratio,
//!   perturbation fidelity, sub-system entropy, simulation fidelity),
//! - random-matrix eigenvector statistics with a reduced chi-squared
//!   goodness-of-fit statistic, and level-spacing statistics with unfolding,
//! - Trotter-error metrics that separate digitisation from sampling error.
//!
//! The [`runner`] module drives deterministic, cached parameter sweeps and
//! backs the `trottersim` CLI.

pub mod errors;
pub mod evolution;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod rmt;
pub mod runner;
pub mod signatures;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dag| = {max_dev:.3e} at entry ({row}, {col})")]
    NotHermitian {
        max_dev: f64,
        row: usize,
        col: usize,
    },
    #[error("matrix is not unitary: max |U^dag U - I| = {0:.3e}")]
    NotUnitary(f64),
    #[error("matrix is not normal: max |S^dag S - S S^dag| = {0:.3e}")]
    NotNormal(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver failed: {0}")]
    EigenSolver(String),
    #[error("state norm drift {drift:.3e} exceeds 1e-6 at step {step}")]
    NormDrift { drift: f64, step: usize },
    #[error("unpaired eigenphase {0} under degeneracy pairing")]
    UnpairedEigenphase(f64),
    #[error("all histogram bins excluded by the target-density floor")]
    AllBinsExcluded,
    #[error("empty sample set")]
    EmptySamples,
    #[error("config validation failed:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),
    #[error("unknown recipe '{name}'; available: {}", .available.join(", "))]
    UnknownRecipe {
        name: String,
        available: Vec<String>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
