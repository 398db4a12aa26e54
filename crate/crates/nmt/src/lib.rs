//! A small two-language transformer trained with denoising auto-encoding,
//! optional supervision and on-the-fly back-translation.

pub mod checkpoint;
pub mod embed_init;
pub mod model;
pub mod noise;
pub mod params;
pub mod real;
pub mod tape;
pub mod train;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("training diverged at step {step} ({objective}): loss {loss}")]
    Diverged {
        step: u64,
        objective: String,
        loss: f64,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint was trained with tokenizer {found}, expected {expected}")]
    TokenizerMismatch { expected: String, found: String },
    #[error(transparent)]
    Core(#[from] btlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
