use thiserror::Error;

/// Failures surfaced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("loss of orthogonality in recurrence at k = {k} (value {value:e})")]
    LossOfOrthogonality { k: usize, value: f64 },

    #[error("breakdown of the complex recurrence at k = {k} (|nu_k| = {modulus:e})")]
    Breakdown { k: usize, modulus: f64 },

    #[error("orthogonality residual {residual:e} at degree {k} exceeds the abort threshold")]
    OrthogonalityResidual { k: usize, residual: f64 },

    #[error("degenerate eigenvector basis (condition number {cond:e})")]
    Degenerate { cond: f64 },

    #[error("near-defective effective Hamiltonian (eigenvector condition number {cond:e})")]
    NearDefective { cond: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("negative propagation time t = {0}")]
    NegativeTime(f64),

    #[error("matrix dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("time step {dt} did not converge under halving (relative change {change:e})")]
    StepSize { dt: f64, change: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),
}

impl Error {
    /// Stable identifier used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::LossOfOrthogonality { .. } => "LossOfOrthogonality",
            Error::Breakdown { .. } => "RecurrenceBreakdown",
            Error::OrthogonalityResidual { .. } => "OrthogonalityResidual",
            Error::Degenerate { .. } => "Degenerate",
            Error::NearDefective { .. } => "NearDefective",
            Error::Eigen(_) => "EigenFailure",
            Error::NegativeTime(_) => "NegativeTime",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::StepSize { .. } => "StepSize",
            Error::GridMismatch(_) => "GridMismatch",
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
