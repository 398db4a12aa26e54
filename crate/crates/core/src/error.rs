use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("lexicon capacity exhausted: {0}")]
    Capacity(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("dictionary does not cover lemma {0}")]
    Coverage(u32),
    #[error("sentence has no provenance")]
    MissingProvenance,
    #[error("unknown character {0:?} in word {1:?}")]
    UnknownCharacter(char, String),
    #[error("regression error: {0}")]
    Regression(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
