use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("step {step} at t = {t} failed: {source}")]
    StepFailed {
        step: usize,
        t: f64,
        #[source]
        source: eep_core::Error,
    },
    #[error(transparent)]
    Core(eep_core::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// One-line JSON description for machine consumers.
    pub fn to_json(&self) -> serde_json::Value {
        let message = self.to_string();
        match self {
            CliError::Config { field, reason } => {
                json!({ "error": "config", "field": field, "reason": reason, "message": message })
            }
            CliError::Io { path, .. } => json!({ "error": "io", "path": path, "message": message }),
            CliError::StepFailed { step, t, .. } => {
                json!({ "error": "step_failed", "step": step, "t": t, "message": message })
            }
            CliError::Core(_) => json!({ "error": "core", "message": message }),
        }
    }
}

impl From<eep_core::Error> for CliError {
    fn from(e: eep_core::Error) -> Self {
        match e {
            eep_core::Error::InvalidParameter { name, reason } => CliError::Config {
                field: name.into(),
                reason,
            },
            eep_core::Error::StepFailed { step, t, source } => CliError::StepFailed {
                step,
                t,
                source: *source,
            },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
