use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input data (exit code 1).
    Input,
    /// Invalid configuration or arguments (exit code 2).
    Config,
    /// Numerical failure such as a singular or unstable system (exit code 3).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: isize, len: usize },

    #[error("band {name} ({low_hz}-{high_hz} Hz) is invalid for sample rate {sample_rate_hz} Hz")]
    InvalidBand {
        name: String,
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },

    #[error("filter order {0} must be even and at least 2")]
    InvalidOrder(usize),

    #[error("series of length {len} is too short (need more than {needed})")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("channel {0} has zero variance")]
    ZeroVariance(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unstable model: companion spectral radius {0:.6} >= 1")]
    Unstable(f64),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error(
        "spectral matrix ill-conditioned at frequency {freq:.6} (condition number {cond:.3e}); \
         use a shrinkage estimate (shrink_spectral_estimate) before inverting"
    )]
    IllConditioned { freq: f64, cond: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("phase bin {0} is empty")]
    EmptyBin(usize),

    #[error("coordinate descent did not converge after {sweeps} sweeps (max change {max_change:.3e})")]
    NonConvergence {
        sweeps: usize,
        max_change: f64,
        /// Last iterate, on the original (unstandardized) scale.
        coefficients: Vec<f64>,
    },

    #[error("unknown example generator '{0}'")]
    UnknownExample(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::SeriesTooShort { .. } => ErrorKind::Input,
            Error::Config(_)
            | Error::LagOutOfRange { .. }
            | Error::InvalidBand { .. }
            | Error::InvalidOrder(_)
            | Error::GridMismatch(_)
            | Error::UnknownExample(_) => ErrorKind::Config,
            Error::ZeroVariance(_)
            | Error::Degenerate(_)
            | Error::Unstable(_)
            | Error::Singular(_)
            | Error::IllConditioned { .. }
            | Error::EmptyBin(_)
            | Error::NonConvergence { .. } => ErrorKind::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Input => 1,
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }
}
