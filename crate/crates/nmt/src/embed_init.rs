//! Skip-gram with negative sampling over subword ids, used to initialize
//! the shared embedding table.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            epochs: 5,
            window: 5,
            negatives: 5,
            lr: 0.025,
        }
    }
}

const TABLE_SIZE: usize = 1 << 20;

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains input vectors for every id in `0..vocab`, starting from `init`
/// (row-major vocab x dims). Ids that never occur keep their initial row.
/// The result is rescaled to the standard deviation of `init`.
pub fn init_embeddings<R: Rng + ?Sized>(
    sentences: &[Vec<u32>],
    vocab: usize,
    dims: usize,
    init: &[f32],
    cfg: &SkipGramConfig,
    rng: &mut R,
) -> Vec<f32> {
    assert_eq!(init.len(), vocab * dims);
    let mut input = init.to_vec();
    if cfg.epochs == 0 {
        return input;
    }
    let mut counts = vec![0u64; vocab];
    for s in sentences {
        for &t in s {
            counts[t as usize] += 1;
        }
    }
    let total_tokens: u64 = counts.iter().sum();
    if total_tokens == 0 {
        return input;
    }
    // Unigram^0.75 table for negatives.
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut table = Vec::with_capacity(TABLE_SIZE);
    let mut acc = 0.0;
    let mut id = 0usize;
    for i in 0..TABLE_SIZE {
        let target = (i as f64 + 0.5) / TABLE_SIZE as f64 * wsum;
        while acc + weights[id] < target && id + 1 < vocab {
            acc += weights[id];
            id += 1;
        }
        table.push(id as u32);
    }

    let mut output = vec![0f32; vocab * dims];
    let mut grad = vec![0f32; dims];
    let steps_total = (cfg.epochs as u64 * total_tokens).max(1) as f64;
    let mut seen = 0u64;
    for _ in 0..cfg.epochs {
        for s in sentences {
            for (i, &center) in s.iter().enumerate() {
                seen += 1;
                let lr = (cfg.lr * (1.0 - seen as f64 / steps_total)).max(cfg.lr * 1e-4) as f32;
                let b = rng.random_range(0..cfg.window.max(1));
                let lo = i.saturating_sub(cfg.window - b);
                let hi = (i + cfg.window - b + 1).min(s.len());
                for (j, &ctx) in s.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let cin = ctx as usize * dims;
                    grad.fill(0.0);
                    for n in 0..=cfg.negatives {
                        let (target, label) = if n == 0 {
                            (center, 1.0)
                        } else {
                            let t = table[rng.random_range(0..TABLE_SIZE)];
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let to = target as usize * dims;
                        let dot: f32 = (0..dims).map(|k| input[cin + k] * output[to + k]).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for k in 0..dims {
                            grad[k] += g * output[to + k];
                            output[to + k] += g * input[cin + k];
                        }
                    }
                    for k in 0..dims {
                        input[cin + k] += grad[k];
                    }
                }
            }
        }
    }
    let std_of = |v: &[f32]| {
        let n = v.len() as f64;
        let m = v.iter().map(|&x| x as f64).sum::<f64>() / n;
        (v.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let (s0, s1) = (std_of(init), std_of(&input));
    if s1 > 0.0 {
        let f = (s0 / s1) as f32;
        for x in &mut input {
            *x *= f;
        }
    }
    input
}
