//! Error type for the command-line tool and its mapping to process exit
//! codes.
//!
//! Every failure is classified into one of three buckets so scripts can
//! branch on the exit status without parsing messages:
//!
//! | exit code | meaning                                        |
//! |-----------|------------------------------------------------|
//! | 0         | success                                        |
//! | 2         | configuration error (flags, config file)       |
//! | 3         | data error (unreadable, malformed, too short)  |
//! | 4         | solver failed to certify within its budget     |

use std::process::ExitCode;

use sparsemv_core::Error as CoreError;

/// A failure of a CLI run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration: bad flag value, malformed or contradictory
    /// config file, unsupported option combination. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Invalid data: unreadable input, malformed CSV, non-positive
    /// prices, too few periods, or an unwritable output path. Exit
    /// code 3.
    #[error("data error: {0}")]
    Data(String),
    /// A solver exhausted its iteration budget without certifying a
    /// solution. Exit code 4.
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    /// The process exit code for this error class.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::Solver(_) => ExitCode::from(4),
        }
    }

    /// Wraps an I/O failure on an input or output file as a data error.
    pub fn data_io(context: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

/// The innermost error of a chain of backtest-window wrappers; the chain
/// is classified by its root cause.
fn leaf(err: &CoreError) -> &CoreError {
    match err {
        CoreError::BacktestWindow { source, .. } => leaf(source),
        other => other,
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let message = err.to_string();
        match leaf(&err) {
            CoreError::InvalidConfig(_) | CoreError::ProblemTooLarge { .. } => {
                CliError::Config(message)
            }
            CoreError::NonConvergence { .. } => CliError::Solver(message),
            _ => CliError::Data(message),
        }
    }
}
