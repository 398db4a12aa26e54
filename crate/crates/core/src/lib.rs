//! Artificial-language generation, corpora, subword tokenization and
//! evaluation metrics for controlled back-translation experiments.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod grammar;
pub mod lexicon;
pub mod seed;
pub mod tokenizer;

pub use error::{Error, Result};
