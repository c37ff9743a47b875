use thiserror::Error;

/// Errors raised by the library. Variants map onto the failure classes the
/// CLI reports through distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate covector: {0}")]
    DegenerateCovector(String),

    #[error("constant estimation failed: {0}")]
    Estimation(String),

    #[error("provided constant {name} = {provided} is below its sampled estimate {estimated}")]
    ConstantViolation {
        name: &'static str,
        provided: f64,
        estimated: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration diagnostic: {0}")]
    Integration(String),

    #[error("empty boundary: {0}")]
    EmptyBoundary(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} has non-finite entries: {v:?}")))
    }
}
