//! Error taxonomy for exit codes: configuration problems, numerical
//! failures, and I/O failures map to distinct nonzero codes so batch
//! drivers can triage without parsing messages.

use eddikit::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config file, bad flags, or inputs that cannot express the
    /// requested operation. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// The computation itself failed (integration blow-up, no crossings,
    /// degenerate regression). Exit code 3.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Reading or writing files failed, including malformed input files.
    /// Exit code 4.
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidModel(_)
            | CoreError::InvalidConfig(_)
            | CoreError::EmptyLibrary
            | CoreError::CutoffOutOfRange { .. }
            | CoreError::FrequencyOutOfRange { .. }
            | CoreError::MissingAcceleration => CliError::Config(e.to_string()),
            CoreError::NoCrossings => CliError::Numerical(format!(
                "{e}; the record may be truncated before the response develops, \
                 all-positive, or dominated by drift — check the high-pass cutoff \
                 and the forcing threshold"
            )),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches file-path context to an I/O result.
pub fn with_path<T>(r: std::io::Result<T>, path: &std::path::Path) -> Result<T> {
    r.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
