//! Experiment harness: run configuration, the generate/train/evaluate
//! pipeline, experiment presets, manifests and reports.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod presets;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] btlab_core::Error),
    #[error(transparent)]
    Nmt(#[from] btlab_nmt::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Toml(_) => 2,
            Error::Core(btlab_core::Error::Validation(_) | btlab_core::Error::Parse(_)) => 2,
            Error::Nmt(btlab_nmt::Error::Config(_)) => 2,
            Error::Nmt(btlab_nmt::Error::Diverged { .. }) => 3,
            _ => 1,
        }
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
