//! Flat parameter arena and the Adam optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Zeros,
    Ones,
    /// Uniform with the variance of N(0, std^2).
    Scaled { std: f64 },
    /// Glorot uniform from the matrix shape.
    Glorot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub init: Init,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// All tensors of a model in one contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    specs: Vec<ParamSpec>,
    pub data: Vec<T>,
}

impl<T: Real> Default for Params<T> {
    fn default() -> Self {
        Params {
            specs: Vec::new(),
            data: Vec::new(),
        }
    }
}

impl<T: Real> Params<T> {
    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init) -> ParamId {
        let offset = self.data.len();
        self.specs.push(ParamSpec {
            name: name.into(),
            rows,
            cols,
            offset,
            init,
        });
        self.data.resize(offset + rows * cols, T::zero());
        ParamId(self.specs.len() - 1)
    }

    pub fn initialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for spec in &self.specs {
            let bound = match spec.init {
                Init::Zeros => {
                    self.data[spec.range()].fill(T::zero());
                    continue;
                }
                Init::Ones => {
                    self.data[spec.range()].fill(T::one());
                    continue;
                }
                Init::Scaled { std } => std * 3f64.sqrt(),
                Init::Glorot => (6.0 / (spec.rows + spec.cols) as f64).sqrt(),
            };
            for x in &mut self.data[spec.range()] {
                *x = T::of(rng.random_range(-bound..bound));
            }
        }
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn spec(&self, id: ParamId) -> &ParamSpec {
        &self.specs[id.0]
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.data[self.specs[id.0].range()]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [T] {
        let r = self.specs[id.0].range();
        &mut self.data[r]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Vec<T> {
        vec![T::zero(); self.data.len()]
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            specs: self.specs.clone(),
            data: self.data.iter().map(|x| U::of(x.to_f64().unwrap_or(0.0))).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub cfg: AdamConfig,
    m: Vec<f32>,
    v: Vec<f32>,
    t: u64,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n: usize) -> Adam {
        Adam {
            cfg,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f32], grads: &[f32]) {
        self.t += 1;
        let (b1, b2) = (self.cfg.beta1 as f32, self.cfg.beta2 as f32);
        let c1 = 1.0 - (self.cfg.beta1).powi(self.t as i32);
        let c2 = 1.0 - (self.cfg.beta2).powi(self.t as i32);
        let lr = (self.cfg.lr * c2.sqrt() / c1) as f32;
        let eps = (self.cfg.eps * c2.sqrt()) as f32;
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * *m / (v.sqrt() + eps);
        }
    }
}
