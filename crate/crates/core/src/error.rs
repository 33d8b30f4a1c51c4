use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty probability vector")]
    EmptyVector,
    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("probability vector has zero total mass")]
    ZeroMass,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("cost matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("negative cost {value} at ({i}, {j})")]
    NegativeCost { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal cost at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("asymmetric cost: d[{i}][{j}] != d[{j}][{i}]")]
    Asymmetric { i: usize, j: usize },
    #[error("triangle inequality violated: d[{i}][{j}] > d[{i}][{k}] + d[{k}][{j}]")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("cost preset {preset} is not defined for {n} actions")]
    PresetSize { preset: &'static str, n: usize },
    #[error("unknown cost preset {0:?}")]
    UnknownPreset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("slip probability {0} outside [0, 1)")]
    InvalidSlip(f64),
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),

    #[error("Sinkhorn did not converge after {iterations} iterations (row residual {row_residual:e}, column residual {col_residual:e})")]
    NonConvergence {
        iterations: usize,
        row_residual: f64,
        col_residual: f64,
    },
    #[error("degenerate transportation basis")]
    DegenerateBasis,

    #[error("beta must be nonnegative, got {0}")]
    NegativeBeta(f64),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("dual problem is degenerate: every off-diagonal cost is zero")]
    DegenerateProblem,
    #[error("the 0-1 local search requires the zero-one cost matrix")]
    WrongCostPreset,
    #[error("an optimal beta schedule needs a dual problem")]
    MissingProblem,
    #[error("invalid dual problem: {0}")]
    InvalidProblem(String),

    #[error("trajectory was truncated; discounted returns need a complete episode")]
    IncompleteTrajectory,
    #[error("GAE lambda {0} outside [0, 1]")]
    InvalidLambda(f64),
    #[error("empty trajectory batch")]
    EmptyBatch,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("evaluation needs at least one episode")]
    EmptyEvaluation,

    #[error("sampled-mode run has no logged advantage error bound")]
    MissingAdvantageErrorBound,
    #[error("contraction check needs a run with exact advantages")]
    SampledModeUnsupported,
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::DegenerateBasis | Error::SingularSystem
        )
    }

    /// Stable identifier used in machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyVector => "EmptyVector",
            Error::NegativeMass { .. } => "NegativeMass",
            Error::ZeroMass => "ZeroMass",
            Error::NonFinite(_) => "NonFinite",
            Error::NotSquare { .. } => "NotSquare",
            Error::NegativeCost { .. } => "NegativeCost",
            Error::NonzeroDiagonal { .. } => "NonzeroDiagonal",
            Error::Asymmetric { .. } => "Asymmetric",
            Error::TriangleViolation { .. } => "TriangleViolation",
            Error::PresetSize { .. } => "PresetSize",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidMdp(_) => "InvalidMdp",
            Error::InvalidSlip(_) => "InvalidSlip",
            Error::UnknownEnv(_) => "UnknownEnv",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::DegenerateBasis => "DegenerateBasis",
            Error::NegativeBeta(_) => "NegativeBeta",
            Error::NonPositiveBeta(_) => "NonPositiveBeta",
            Error::NonPositiveLambda(_) => "NonPositiveLambda",
            Error::DegenerateProblem => "DegenerateProblem",
            Error::WrongCostPreset => "WrongCostPreset",
            Error::MissingProblem => "MissingProblem",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::IncompleteTrajectory => "IncompleteTrajectory",
            Error::InvalidLambda(_) => "InvalidLambda",
            Error::EmptyBatch => "EmptyBatch",
            Error::SingularSystem => "SingularSystem",
            Error::EmptyEvaluation => "EmptyEvaluation",
            Error::MissingAdvantageErrorBound => "MissingAdvantageErrorBound",
            Error::SampledModeUnsupported => "SampledModeUnsupported",
            Error::Unsupported(_) => "Unsupported",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}
