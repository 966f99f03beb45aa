use std::io;
use std::path::PathBuf;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read config file `{}`: {source}", path.display())]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("invalid config file `{}`: {source}", path.display())]
    ConfigParse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("I/O error on `{}`: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("simulation failed: {0}")]
    Engine(#[from] safety_inspector_core::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl SimError {
    /// Errors caused by the user's input rather than by the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SimError::Config(_) | SimError::ConfigRead { .. } | SimError::ConfigParse { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
