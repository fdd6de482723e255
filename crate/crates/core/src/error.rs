use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum ApcaError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("underdetermined QR not supported ({rows}x{cols})")]
    UnderdeterminedQr { rows: usize, cols: usize },

    #[error("matrix not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("oracle restricted to small matrices (dimension {0} > 64)")]
    OracleTooLarge(usize),

    /// Power iteration hit its iteration budget without reaching a usable
    /// residual. Carries the best estimate so callers can inspect it.
    #[error("dominant eigenpair did not converge after {iterations} iterations (value {value:e}, residual {residual:e})")]
    NonConvergence {
        value: f64,
        vector: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("mu must be nonnegative (got {0})")]
    NegativeMu(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k + s must be < min(n, p) (k = {k}, s = {s}, bound = {bound})")]
    ApproxPrecondition { k: usize, s: usize, bound: usize },

    #[error("local inference requires augmenting data at transform time")]
    MissingAugmenting,

    #[error("need >= 2 classes")]
    TooFewClasses,

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] ModelFileError),
}

/// Failures when decoding a persisted model file. Each variant is a
/// distinct error class so callers can tell corruption kinds apart.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelFileError {
    #[error("not an APCA model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("model file truncated (need {needed} bytes, have {have})")]
    Truncated { needed: usize, have: usize },
    #[error("model file has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("model file checksum mismatch")]
    Checksum,
    #[error("model file contains non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("invalid model field: {0}")]
    InvalidField(&'static str),
}

pub type Result<T> = std::result::Result<T, ApcaError>;
