use thiserror::Error;

use crate::grid::BusId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{format} syntax error at line {line}, column {column}: {message}")]
    Syntax {
        format: &'static str,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("duplicate bus id {0}")]
    DuplicateBus(BusId),

    #[error("grid is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("power imbalance {imbalance:e} exceeds tolerance {tolerance:e}")]
    PowerImbalance { imbalance: f64, tolerance: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("bus {0} has zero power and no damping floor, so its damping would be zero")]
    ZeroDamping(BusId),

    #[error("generator bus {0} has no inertia constant")]
    MissingInertia(BusId),

    #[error("steady-state iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("{count} near-zero eigenvalues; expected exactly one")]
    DegenerateKernel { count: usize },

    #[error("matrix is indefinite: eigenvalue {eigenvalue:e} below zero")]
    Indefinite { eigenvalue: f64 },

    #[error("modal decomposition requires a homogeneous inertia-to-damping ratio")]
    HeterogeneousRatio,

    #[error("step size {dt:e} s exceeds the limit {limit:e} s ({reason})")]
    StepSize {
        dt: f64,
        limit: f64,
        reason: &'static str,
    },

    #[error("simulation diverged at t = {time} s")]
    Diverged { time: f64 },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("path too short: {available} s available, {required} s required")]
    PathTooShort { available: f64, required: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown bus id {0}")]
    UnknownBus(BusId),

    #[error("ensemble member {index} failed: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::DuplicateBus(_) => "duplicate_bus",
            Error::Disconnected { .. } => "disconnected",
            Error::PowerImbalance { .. } => "power_imbalance",
            Error::InvalidParameters(_) => "invalid_parameters",
            Error::ZeroDamping(_) => "zero_damping",
            Error::MissingInertia(_) => "missing_inertia",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Eigensolver(_) => "eigensolver",
            Error::DegenerateKernel { .. } => "degenerate_kernel",
            Error::Indefinite { .. } => "indefinite",
            Error::HeterogeneousRatio => "heterogeneous_ratio",
            Error::StepSize { .. } => "step_size",
            Error::Diverged { .. } => "diverged",
            Error::InvalidNoise(_) => "invalid_noise",
            Error::PathTooShort { .. } => "path_too_short",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::UnknownBus(_) => "unknown_bus",
            Error::Member { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }
}
