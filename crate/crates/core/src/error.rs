use thiserror::Error;

/// Errors raised by the numerical and combinatorial routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (defect {defect:.3e} at sample {sample})")]
    NonSymmetric { sample: usize, defect: f64 },

    #[error("asymptotic path is degenerate: normalized det(gamma(1) - I) = {det:.3e}")]
    Degenerate { det: f64 },

    #[error("resolution too low: {0}")]
    ResolutionTooLow(String),

    #[error("no clear spectral gap: largest ratio {best_ratio:.3e} among {count} singular values")]
    NoSpectralGap { best_ratio: f64, count: usize },

    #[error("inconsistent kernel/cokernel count: ker {kernel}, coker {cokernel}, cols - rows = {structural}")]
    InconsistentIndex {
        kernel: usize,
        cokernel: usize,
        structural: i64,
    },

    #[error("path leaves the surjective stratum at parameter {parameter} (kernel dimension {found}, expected {expected})")]
    LeavesSurjectiveStratum {
        parameter: f64,
        expected: usize,
        found: usize,
    },

    #[error("refine parameter grid: alignment determinant {det:.3e} at step {step}")]
    RefineParameterGrid { step: usize, det: f64 },

    #[error("refine sampling: {0}")]
    RefineSampling(String),

    #[error("dimension {n} not supported: {reason}")]
    UnsupportedDimension { n: usize, reason: String },

    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("unitary field violates boundary constraints: {0}")]
    BoundaryConstraint(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a chain complex: {0}")]
    NotAComplex(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
