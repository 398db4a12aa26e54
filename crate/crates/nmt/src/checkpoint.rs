//! Binary checkpoints: magic, format version, JSON header, then the
//! parameter buffer as little-endian `f32`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Model, ModelConfig};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"BTLABCKP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub tokenizer_sha256: String,
    pub parameters: usize,
}

/// Hex SHA-256 of arbitrary bytes (tokenizer merges, corpora).
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save(path: &Path, model: &Model<f32>, tokenizer_sha256: &str) -> Result<()> {
    let header = serde_json::to_vec(&CheckpointHeader {
        config: model.cfg.clone(),
        tokenizer_sha256: tokenizer_sha256.to_string(),
        parameters: model.params.len(),
    })?;
    let mut buf = Vec::with_capacity(16 + header.len() + 4 * model.params.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    for x in &model.params.data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Loads a checkpoint, refusing it when it was trained with another
/// tokenizer.
pub fn load(path: &Path, expected_tokenizer_sha256: &str) -> Result<Model<f32>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let hlen = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?)?;
    if header.tokenizer_sha256 != expected_tokenizer_sha256 {
        return Err(Error::TokenizerMismatch {
            expected: expected_tokenizer_sha256.to_string(),
            found: header.tokenizer_sha256,
        });
    }
    let mut model = Model::<f32>::new(header.config)?;
    let body = &bytes[16 + hlen..];
    if body.len() != 4 * model.params.len() || header.parameters != model.params.len() {
        return Err(bad("parameter count does not match the configuration"));
    }
    for (x, chunk) in model.params.data.iter_mut().zip(body.chunks_exact(4)) {
        *x = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
    }
    Ok(model)
}
