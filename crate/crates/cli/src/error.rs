use std::fmt;

use serde::Serialize;

/// Failure of a CLI command, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid configuration / artifact (exit 2).
    Parse(String),
    /// Synthesis found no certificate (exit 3).
    Infeasible(String),
    /// Anything else raised while running (exit 4).
    Runtime(String),
    /// File-system failure (exit 4).
    Io(String),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Infeasible(_) => "infeasible",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let report = ErrorReport { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Infeasible(m) | CliError::Runtime(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<linf_core::Error> for CliError {
    fn from(e: linf_core::Error) -> Self {
        use linf_core::Error as E;
        match e {
            E::Infeasible(_) | E::InfeasibleAtAllAlpha { .. } | E::NotControllable | E::NotStabilizable => {
                CliError::Infeasible(e.to_string())
            }
            E::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
