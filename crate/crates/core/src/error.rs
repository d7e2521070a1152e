use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidShape: {0}")]
    InvalidShape(String),
    #[error("NonFinite: entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("NotSquare: matrix is {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("NotHermitian: max |A - A^H| = {residual:e}")]
    NotHermitian { residual: f64 },
    #[error("NotPositiveDefinite: smallest eigenvalue {min_eig:e}")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("ConvergenceFailure: no convergence after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("DegenerateSpectrum: minimum eigenvalue gap {gap:e} <= {threshold:e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },
    #[error("SingularEigenbasis: eigenvector matrix is numerically singular")]
    SingularEigenbasis,
    #[error("SingularMatrix: pivot {pivot:e} below threshold at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("SingularWeight: weight operator W is not invertible")]
    SingularWeight,
    #[error("ComplexSpectrum: eigenvalues off the real axis: {}", fmt_complex_list(.offending))]
    ComplexSpectrum { offending: Vec<Complex64> },
    #[error("NonpositiveWeight: weight {value:e} at index {index}")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("NonMonotoneMap: g'(x) = {value:e} <= 0 at grid index {index}")]
    NonMonotoneMap { index: usize, value: f64 },
    #[error("GridTooSmall: {points} interior points, need at least 3")]
    GridTooSmall { points: usize },
    #[error("ConditioningFailure: could not meet condition cap {cap:e} after {attempts} attempts")]
    ConditioningFailure { cap: f64, attempts: usize },
}

fn fmt_complex_list(values: &[Complex64]) -> String {
    values
        .iter()
        .map(|z| format!("{:.6e}{:+.6e}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Bad user input (shape, values, grid) as opposed to a numerical
    /// failure of a well-formed problem.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidShape(_)
                | Error::NonFinite { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotSquare { .. }
                | Error::NonpositiveWeight { .. }
                | Error::NonMonotoneMap { .. }
                | Error::GridTooSmall { .. }
        )
    }

    /// The variant name, as printed at the start of the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidShape(_) => "InvalidShape",
            Error::NonFinite { .. } => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::SingularEigenbasis => "SingularEigenbasis",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::SingularWeight => "SingularWeight",
            Error::ComplexSpectrum { .. } => "ComplexSpectrum",
            Error::NonpositiveWeight { .. } => "NonpositiveWeight",
            Error::NonMonotoneMap { .. } => "NonMonotoneMap",
            Error::GridTooSmall { .. } => "GridTooSmall",
            Error::ConditioningFailure { .. } => "ConditioningFailure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
