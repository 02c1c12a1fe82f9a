use crate::checkpoint::CheckpointError;
use std::io;
use std::path::{Path, PathBuf};

/// Failure of a run, classified by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {message}{}", last_checkpoint_note(.last_checkpoint))]
    Numerical {
        message: String,
        last_checkpoint: Option<PathBuf>,
    },
    #[error("I/O error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint {}: {source}", .path.display())]
    Checkpoint {
        path: PathBuf,
        source: CheckpointError,
    },
}

fn last_checkpoint_note(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("; last good checkpoint: {}", p.display()),
        None => "; no checkpoint was written".into(),
    }
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical { .. } => 2,
            CliError::Io { .. } | CliError::Checkpoint { .. } => 3,
        }
    }

    pub fn with_checkpoint(self, last: Option<PathBuf>) -> Self {
        match self {
            CliError::Numerical { message, .. } => CliError::Numerical {
                message,
                last_checkpoint: last,
            },
            other => other,
        }
    }
}

impl From<kawahara::Error> for CliError {
    fn from(e: kawahara::Error) -> Self {
        match e {
            kawahara::Error::Overflow { .. } | kawahara::Error::BlowUp { .. } => {
                CliError::Numerical {
                    message: e.to_string(),
                    last_checkpoint: None,
                }
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        let blow = CliError::from(kawahara::Error::BlowUp {
            t: 1.0,
            reason: "nan".into(),
        });
        assert_eq!(blow.exit_code(), 2);
        let blow = blow.with_checkpoint(Some("out/c.gkaw".into()));
        assert!(blow.to_string().contains("out/c.gkaw"));
        assert_eq!(CliError::io("f", io::Error::other("x")).exit_code(), 3);
        assert_eq!(
            CliError::from(kawahara::Error::Usage("u".into())).exit_code(),
            1
        );
    }
}
