use thiserror::Error;

/// Exit status of a solve that hit `max_sweeps`; artifacts are still written.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Exit status of a verification below its pass threshold.
pub const EXIT_BELOW_THRESHOLD: i32 = 5;

/// Failures of a CLI run, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Integration(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Integration(_) => 4,
        }
    }
}

impl From<mintime::Error> for CliError {
    fn from(e: mintime::Error) -> Self {
        use mintime::Error as E;
        match e {
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            E::Integration(_) => CliError::Integration(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
