use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("entries length {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("matrix contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max |u u^dagger - 1| = {0:e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not completely positive (min Choi eigenvalue {0:e}); no Kraus form exists")]
    NotCompletelyPositive(f64),

    #[error("initial joint state is not a product state (distance to product of marginals {0:e}); an induced map requires rho(t0) = rho_1(t0) (x) rho_2(t0)")]
    NotProductState(f64),

    #[error("eigendecomposition failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
