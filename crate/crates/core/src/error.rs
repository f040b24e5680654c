use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("eigen-solver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("matrix is rank deficient: |r_{column}{column}| = {magnitude:e}")]
    RankDeficient { column: usize, magnitude: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("degenerate sample: trace {trace:e} too small to normalize")]
    DegenerateSample { trace: f64 },

    #[error("Bloch norm at unity (1 - b^2)^2 = {denominator:e} with nonzero determinant gap {numerator:e}")]
    SingularBloch { denominator: f64, numerator: f64 },

    #[error("accumulator holds no weight")]
    EmptyAccumulator,

    #[error("cannot merge accumulators: {0}")]
    ConfigMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
