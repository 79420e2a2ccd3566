use thiserror::Error;

/// Errors produced by polab operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Stokes vector: {0}")]
    InvalidStokes(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("degree of polarization is undefined for zero intensity")]
    ZeroIntensity,

    #[error("axis is not a unit vector (|n| = {0})")]
    NonUnitAxis(f64),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("singular Jones matrix: limiting case det J = 0")]
    SingularJones,

    #[error("Jones matrix is not unimodular (|det - 1| = {0:e})")]
    NotUnimodular(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("Mueller matrix is not physical: {0}")]
    NonPhysical(String),

    #[error("photon number {requested} exceeds truncation n_max = {n_max}")]
    Truncation { requested: usize, n_max: usize },

    #[error("truncation leakage {leakage:e} exceeds threshold {threshold:e}; n_max >= {required} is needed")]
    LeakageExceeded {
        leakage: f64,
        threshold: f64,
        required: usize,
    },

    #[error("state must be pure and supported on a single photon-number layer")]
    NotSingleLayer,

    #[error("state has support on the vacuum layer; one-photon trace needs N >= 1")]
    VacuumLayer,

    #[error("basis mismatch: n_max {left} vs {right}")]
    BasisMismatch { left: usize, right: usize },

    #[error("probe set is rank deficient (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("covariance matrix is singular; null directions {null_directions:?}")]
    SingularCovariance { null_directions: Vec<[f64; 3]> },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("probability mass deficit {0:e} exceeds tolerance")]
    MassDeficit(f64),

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by a physics check.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Io(_)
                | Error::UnknownExperiment(_)
                | Error::InvalidParameter(_)
                | Error::LengthMismatch { .. }
                | Error::Empty(_)
                | Error::BasisMismatch { .. }
        )
    }

    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
