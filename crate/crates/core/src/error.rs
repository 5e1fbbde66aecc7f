use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator is not supported on the symmetric subspace (deviation {deviation:.3e})")]
    NotSymmetricSupported { deviation: f64 },

    #[error("operator violates 0 <= F <= P+ (min eigenvalue {min_eig:.3e}, min gap {min_gap:.3e})")]
    OutOfInterval { min_eig: f64, min_gap: f64 },

    #[error("outcomes do not sum to the unit (deviation {deviation:.3e})")]
    NotNormalizedMeasurement { deviation: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("partition weight mismatch: {0} vs {1}")]
    WeightMismatch(usize, usize),

    #[error("partition {0} has more than {1} parts")]
    TooManyParts(String, usize),

    #[error("map is not completely positive (min Choi eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("instrument is not trace-preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("outcome has zero probability ({probability:.3e}); post-measurement state undefined")]
    ZeroProbability { probability: f64 },

    #[error("rank did not stabilize after {samples} samples (rank {rank})")]
    RankNotStabilized { samples: usize, rank: usize },

    #[error("span rank is unstable across tolerances: {0} vs {1}")]
    RankUnstable(usize, usize),

    #[error("design matrix is rank deficient: rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
