//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by estimation, testing, simulation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sample cannot support the requested computation
    /// (empty, constant, or otherwise degenerate).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A numerical computation lost all precision or underflowed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Every EM restart collapsed; no usable fit was produced.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// No candidate model order produced a usable fit.
    #[error("model selection failed: {0}")]
    Selection(String),

    /// Invalid configuration (distribution parameters, study spec, flags).
    #[error("configuration error: {0}")]
    Config(String),

    /// A diagnostic condition that requires user attention rather than a retry.
    #[error("diagnostics: {0}")]
    Diagnostics(String),

    /// Input data could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The input contained no usable values.
    #[error("empty input: no values parsed")]
    EmptyInput,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
