use hyperholonomy::GeomError;
use thiserror::Error;

use crate::expr::SyntaxError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", geom_message(.0))]
    Geom(#[from] GeomError),
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    /// A well-formed entry with an unusable key or value.
    #[error("{key}: {message}")]
    Semantic { key: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

// validation messages already lead with the offending key
fn geom_message(e: &GeomError) -> String {
    match e {
        GeomError::Validation(m) => m.clone(),
        other => other.to_string(),
    }
}

impl CliError {
    pub fn semantic(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Semantic { key: key.into(), message: message.into() }
    }

    /// Machine-parsable error code printed before the message.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Geom(e) => e.code(),
            CliError::Syntax(_) => "E_SYNTAX",
            CliError::Semantic { .. } => "E_SEMANTIC",
            CliError::Config(_) => "E_CONFIG",
            CliError::Io(_) => "E_IO",
        }
    }
}
