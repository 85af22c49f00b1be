use thiserror::Error;

/// Errors produced by the geometry pipeline.
///
/// Each variant carries a stable machine-readable [`code`](GeomError::code)
/// that front ends print alongside the human message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    /// Operands of incompatible shape were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A stencil or integration path left the chart's parameter box.
    #[error("point {point:?} lies outside the chart domain (axis {axis})")]
    Domain { point: Vec<f64>, axis: usize },
    /// The chart is not a regular immersion into its model space at the queried point.
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    /// Parallel transport lost orthogonality beyond tolerance.
    #[error("integration failure: {0}")]
    Integration(String),
    /// Sample points disagree on the structure a theorem check requires.
    #[error("structural mismatch: {0}")]
    Structure(String),
    /// Family parameters outside their admissible range.
    #[error("validation error: {0}")]
    Validation(String),
}

impl GeomError {
    pub fn code(&self) -> &'static str {
        match self {
            GeomError::Dimension(_) => "E_DIMENSION",
            GeomError::Contract(_) => "E_CONTRACT",
            GeomError::Domain { .. } => "E_DOMAIN",
            GeomError::InvalidChart(_) => "E_INVALID_CHART",
            GeomError::Integration(_) => "E_INTEGRATION",
            GeomError::Structure(_) => "E_STRUCTURE",
            GeomError::Validation(_) => "E_VALIDATION",
        }
    }
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
