use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for success.
pub const EXIT_OK: i32 = 0;
/// Unwritable output or unreadable input.
pub const EXIT_IO: i32 = 1;
/// Bad configuration, invalid parameters or domain errors.
pub const EXIT_INPUT: i32 = 2;
/// Numerical failure: divergence, instability, ill-conditioning, quadrature.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] phasenoise::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("sweep point {index} ({mode}): {source}")]
    Point {
        index: usize,
        mode: &'static str,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(phasenoise::Error::Io(_)) => EXIT_IO,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => EXIT_IO,
            CliError::Point { source, .. } => source.exit_code(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let inv = CliError::from(phasenoise::Error::Invalid(vec![]));
        assert_eq!(inv.exit_code(), EXIT_INPUT);
        let div = CliError::from(phasenoise::Error::Divergence {
            diverged: 2,
            total: 10,
            first: 0,
            step: 3,
        });
        assert_eq!(div.exit_code(), EXIT_NUMERICAL);
        let unstable = CliError::from(phasenoise::Error::Unstable { eigenvalues: vec![(1.0, 0.0)] });
        assert_eq!(unstable.exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_INPUT);
        let io = CliError::io("/x", std::io::Error::other("denied"));
        assert_eq!(io.exit_code(), EXIT_IO);
    }
}
