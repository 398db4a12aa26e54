//! The corruption function of the denoising objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub substitution: f64,
    pub mask: f64,
    /// Local shuffle window: no token moves `window` or more positions.
    pub window: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            substitution: 0.1,
            mask: 0.1,
            window: 3,
        }
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        NoiseConfig {
            substitution: 0.0,
            mask: 0.0,
            window: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("substitution", self.substitution), ("mask", self.mask)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("noise {name} probability {p} is not in [0, 1]")));
            }
        }
        if self.window == 0 {
            return Err(Error::Config("noise shuffle window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Masks and substitutes tokens independently, then shuffles locally by
/// sorting on `i + U[0, window)`. Substitutes are drawn uniformly from
/// `first_word_id..vocab_size`.
pub fn noise<R: Rng + ?Sized>(
    ids: &[u32],
    cfg: &NoiseConfig,
    mask_id: u32,
    first_word_id: u32,
    vocab_size: u32,
    rng: &mut R,
) -> Vec<u32> {
    let mut out: Vec<u32> = ids
        .iter()
        .map(|&t| {
            let u: f64 = rng.random();
            if u < cfg.mask {
                mask_id
            } else if u < cfg.mask + cfg.substitution * (1.0 - cfg.mask) && first_word_id < vocab_size {
                rng.random_range(first_word_id..vocab_size)
            } else {
                t
            }
        })
        .collect();
    if cfg.window > 1 {
        let mut keys: Vec<(f64, usize)> = (0..out.len())
            .map(|i| (i as f64 + rng.random::<f64>() * cfg.window as f64, i))
            .collect();
        keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out = keys.iter().map(|&(_, i)| out[i]).collect();
    }
    out
}
