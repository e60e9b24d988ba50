use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid loading matrix: {0}")]
    InvalidLoadings(String),
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("rotation is not orthogonal (max |R'R - I| = {residual:e})")]
    NonOrthogonalRotation { residual: f64 },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVarianceColumn(String),
    #[error("missing value at row {row}, column {col}")]
    MissingData { row: usize, col: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("correlation matrix is singular")]
    SingularCorrelation,
    #[error("KMO is undefined: no off-diagonal correlation")]
    DegenerateKmo,
    #[error("cannot extract {factors} factors from {variables} variables")]
    TooManyFactors { factors: usize, variables: usize },

    #[error("embedding {0} has zero norm")]
    ZeroNormEmbedding(usize),

    #[error("prior matrix is not symmetric at ({i}, {j})")]
    AsymmetricPrior { i: usize, j: usize },
    #[error("prior matrix has no usable off-diagonal pair")]
    EmptyPrior,
    #[error("variable {index} appears in more than one group")]
    OverlappingGroups { index: usize },

    #[error("pair set has {len} elements, need at least {needed}")]
    DegeneratePairSet { len: usize, needed: usize },
    #[error("Kendall tau-b is undefined: one coordinate is entirely tied")]
    AllTied,
    #[error("slope is undefined: all prior values are equal")]
    ZeroVarianceX,

    #[error("linear solve failed")]
    LinearSolveFailure,
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
