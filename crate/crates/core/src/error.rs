use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used to pick process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation set is empty ({what})")]
    EmptyData { what: String },

    #[error("treatment in row {row} is {value}, expected 0 or 1")]
    NonBinaryTreatment { row: usize, value: f64 },

    #[error("non-finite value {value} in row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String, value: f64 },

    #[error("propensity score {value} in row {row} is outside (0, 1)")]
    PropensityOutOfRange { row: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("propensity scores required by the feature maps but none supplied")]
    MissingPropensity,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("precision matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),

    #[error("categorical weights are all zero or invalid")]
    DegenerateWeights,

    #[error("every component density underflowed for subject {subject}")]
    AllZeroLikelihood { subject: usize },

    #[error("posterior scale for component {component} is negative ({value:e})")]
    NegativeScale { component: usize, value: f64 },

    #[error("chain aborted at iteration {iteration}: {source}")]
    ChainAborted {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("subgroup has no members")]
    EmptySubgroup,

    #[error("quantile bracket for alpha = {alpha} exceeded 12 pooled standard deviations")]
    BisectionFailure { alpha: f64 },

    #[error("at least two draws are needed, got {0}")]
    TooFewDraws(usize),

    #[error("logistic regression diverged (coefficient norm {norm:e}); data appear separable")]
    SeparationDetected { norm: f64 },

    #[error("treatment is constant; both arms are needed to fit a propensity model")]
    SingleArm,

    #[error("no persisted draws found at {0}")]
    DrawsNotFound(PathBuf),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Variant name, as reported by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyData { .. } => "EmptyData",
            Error::NonBinaryTreatment { .. } => "NonBinaryTreatment",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::PropensityOutOfRange { .. } => "PropensityOutOfRange",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::MissingPropensity => "MissingPropensity",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::DegenerateWeights => "DegenerateWeights",
            Error::AllZeroLikelihood { .. } => "AllZeroLikelihood",
            Error::NegativeScale { .. } => "NegativeScale",
            Error::ChainAborted { source, .. } => source.name(),
            Error::EmptySubgroup => "EmptySubgroup",
            Error::BisectionFailure { .. } => "BisectionFailure",
            Error::TooFewDraws(_) => "TooFewDraws",
            Error::SeparationDetected { .. } => "SeparationDetected",
            Error::SingleArm => "SingleArm",
            Error::DrawsNotFound(_) => "DrawsNotFound",
            Error::Parse(_) => "Parse",
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::EmptyData { .. }
            | Error::NonBinaryTreatment { .. }
            | Error::NonFiniteValue { .. }
            | Error::PropensityOutOfRange { .. }
            | Error::DimensionMismatch(_)
            | Error::MissingPropensity
            | Error::InvalidConfig(_)
            | Error::EmptySubgroup
            | Error::TooFewDraws(_)
            | Error::SingleArm
            | Error::Parse(_) => ErrorClass::Validation,
            Error::NotPositiveDefinite { .. }
            | Error::NotSymmetric(_)
            | Error::DegenerateWeights
            | Error::AllZeroLikelihood { .. }
            | Error::NegativeScale { .. }
            | Error::BisectionFailure { .. }
            | Error::SeparationDetected { .. } => ErrorClass::Numerical,
            Error::ChainAborted { source, .. } => source.class(),
            Error::DrawsNotFound(_) | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => {
                ErrorClass::Io
            }
        }
    }
}
