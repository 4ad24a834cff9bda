use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("eigensolver did not converge within {max_iter} iterations (dim {dim})")]
    NoConvergence { dim: usize, max_iter: usize },

    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },

    #[error("scalar function undefined at x = {x:e}")]
    FunctionDomain { x: f64 },

    #[error("eigenvalue {eigenvalue:e} lies outside the domain ({lo}, {hi})")]
    SpectrumOutsideDomain { eigenvalue: f64, lo: f64, hi: f64 },

    #[error("operator is singular: eigenvalue {eigenvalue:e}")]
    Singular { eigenvalue: f64 },

    #[error("operator is not positive semidefinite: eigenvalue {eigenvalue:e}{}", fmt_index(*.index))]
    NotPsd { index: Option<usize>, eigenvalue: f64 },

    #[error("state {index} has trace {trace} (expected 1)")]
    Trace { index: usize, trace: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}{}", fmt_index(*.index))]
    DimensionMismatch { expected: usize, found: usize, index: Option<usize> },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("partition of identity violated: residual {residual:e}")]
    Partition { residual: f64 },

    #[error("formulations disagree by {residual:e}")]
    FormulationMismatch { residual: f64 },

    #[error("pair of functions is neither monotone nor antimonotone on the domain")]
    UnclassifiedPair,

    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_index(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" (state {i})"),
        None => String::new(),
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
