use thiserror::Error;

use crate::walk::ClassTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A step distribution or model file that cannot describe a walk.
    #[error("invalid input: {entry}: {reason}")]
    Validation { entry: String, reason: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bad preset parameters for `{name}`: {reason}")]
    PresetParams { name: String, reason: String },

    #[error("operation requires class {expected}, walk is {found:?}")]
    WrongClass { expected: &'static str, found: ClassTag },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation at a pole of {0}")]
    Pole(&'static str),

    #[error("integrand has a pole on the integration path (node t = {t})")]
    PoleOnPath { t: f64 },

    #[error("no explicit gluing function is available for this walk")]
    NoExplicitGluing,

    #[error("{0}")]
    Unsupported(String),

    #[error("root finding failed for polynomial {coeffs:?}: {reason}")]
    RootFinding { coeffs: Vec<f64>, reason: String },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { solver: &'static str, iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn validation(entry: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation { entry: entry.into(), reason: reason.into() }
    }

    /// Errors caused by the request rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::UnknownPreset(_) | Error::PresetParams { .. }
        )
    }

    /// The method cannot be applied to this walk; not a failure of the computation.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, Error::WrongClass { .. } | Error::NoExplicitGluing | Error::Unsupported(_))
    }

    /// Variant name, used as a row status.
    pub fn status(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "Validation",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::PresetParams { .. } => "PresetParams",
            Error::WrongClass { .. } => "WrongClass",
            Error::Domain(_) => "Domain",
            Error::Pole(_) => "Pole",
            Error::PoleOnPath { .. } => "PoleOnPath",
            Error::NoExplicitGluing => "NoExplicitGluing",
            Error::Unsupported(_) => "Unsupported",
            Error::RootFinding { .. } => "RootFinding",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::Numerical(_) => "Numerical",
        }
    }
}
