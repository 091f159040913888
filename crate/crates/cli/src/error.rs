use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment runner, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("gate violated: {0} (pass --allow-gate-violation to run anyway)")]
    Gate(String),

    #[error("audit failed: {violations} of {total} steps exceed the certified bound (worst excess {worst:e})")]
    Audit {
        violations: usize,
        total: usize,
        worst: f64,
    },

    #[error("check failed: {0}")]
    Verdict(String),

    /// Some sweep points failed; `code` is the exit code of the first one.
    #[error("{failed} of {total} sweep points failed")]
    Sweep {
        failed: usize,
        total: usize,
        code: i32,
    },

    #[error("numerical failure: {0}")]
    Numerical(mirrorlab::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Audit { .. } | CliError::Verdict(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Gate(_) => 6,
            CliError::Sweep { code, .. } => *code,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<mirrorlab::Error> for CliError {
    fn from(e: mirrorlab::Error) -> Self {
        use mirrorlab::Error as E;
        match e {
            E::GateViolation(msg) => CliError::Gate(msg),
            E::NumericalFailure { .. } | E::OracleFailure { .. } | E::Stiffness { .. } => {
                CliError::Numerical(e)
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
