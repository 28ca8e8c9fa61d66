use std::fmt;

use qkr_core::QkrError;
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config text, or parameter values.
    Config(String),
    Truncation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Truncation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Truncation(_) => "truncation_guard",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Truncation(m)
            | CliError::Numerical(m)
            | CliError::Io(m) => m,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self, experiment: Option<&str>) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "experiment": experiment,
            "message": self.message(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<QkrError> for CliError {
    fn from(e: QkrError) -> Self {
        match e {
            QkrError::TruncationGuard { .. } => CliError::Truncation(e.to_string()),
            QkrError::Numerical(_)
            | QkrError::InsufficientRealizations(_)
            | QkrError::Degenerate(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
