use thiserror::Error;

pub type Shape = (usize, usize);

struct ShapeFmt(Shape);

impl std::fmt::Display for ShapeFmt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.0 .0, self.0 .1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("{op}: incompatible shapes {} and {}", ShapeFmt(*.left), ShapeFmt(*.right))]
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },
    #[error("data length {got} does not match shape (expected {expected})")]
    DataLength { expected: usize, got: usize },
    #[error("matrix must have positive dimensions, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvdError {
    #[error("Jacobi SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Svd(#[from] SvdError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("no orthonormal {k}-frame exists in {m} dimensions")]
    FrameTooWide { m: usize, k: usize },
    #[error("basis is not orthonormal (‖WᵀW − I‖_F = {residual:e})")]
    NotOrthonormal { residual: f64 },
    #[error("k = {k} exceeds min(rows, cols) = {max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("column {column} of the update target vanished")]
    ZeroColumn { column: usize },
    #[error("unknown solver variant `{0}`")]
    UnknownVariant(String),
}

impl SolveError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SolveError::Svd(SvdError::NoConvergence { .. })
                | SolveError::Divergence { .. }
                | SolveError::ZeroColumn { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("boundary for attribute `{label}` (column {column}) has zero norm")]
    ZeroColumn { label: String, column: usize },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("direction index {index} out of range for {k} directions")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("vector length {got} does not match latent dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{which} vector must have unit norm, got {norm}")]
    NotUnit { which: &'static str, norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("correlation undefined: sequence is constant")]
    ConstantSequence,
    #[error("correlation between `{left}` and `{right}` undefined: {source}")]
    Pair {
        left: String,
        right: String,
        #[source]
        source: Box<MetricsError>,
    },
    #[error("need at least 2 attributes, got {0}")]
    TooFewAttributes(usize),
    #[error("non-finite value in delta sequence `{0}`")]
    NonFinite(String),
    #[error("embedding must have unit norm, got {0}")]
    NotUnit(f64),
    #[error("trace is empty")]
    EmptyTrace,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid planted model: {0}")]
    Invalid(String),
}
