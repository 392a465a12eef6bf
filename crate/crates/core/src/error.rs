use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix has no entries")]
    EmptyMatrix,

    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("eigenvalue iteration did not converge (|A|_F = {norm:.3e}, {iterations} iterations)")]
    NonConvergence { norm: f64, iterations: usize },

    #[error("matrix exponential argument too large (|A|_1 = {norm:.3e} > {bound:.1e})")]
    Overflow { norm: f64, bound: f64 },

    #[error("matrix is not Hermitian (max |A - A^H| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside schedule range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("Liouvillian has no eigenvalue within {tol:.1e} of zero (closest: {closest:.3e})")]
    NoSteadyState { closest: f64, tol: f64 },

    #[error("Liouvillian has {count} zero eigenvalues; steady state is not unique")]
    DegenerateSteadyState { count: usize },

    #[error("closed form requires {0}")]
    DomainError(String),

    #[error("jump operator `{channel}` annihilated the state")]
    ZeroNorm { channel: String },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sample times must be strictly increasing")]
    UnsortedTimes,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter { .. }
                | Error::OutOfRange { .. }
                | Error::DomainError(_)
                | Error::DimensionMismatch { .. }
                | Error::NotSquare { .. }
                | Error::EmptyMatrix
                | Error::NotDensityMatrix(_)
                | Error::InsufficientData { .. }
                | Error::UnsortedTimes
        )
    }
}
