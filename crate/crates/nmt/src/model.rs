//! Two-language transformer encoder-decoder with partially shared layers.
//!
//! Encoder layers below the shared block and decoder layers above it have
//! one parameter set per language; the embedding table is shared by both
//! languages and tied to the output projection.

use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::params::{Init, ParamId, Params};
use crate::real::Real;
use crate::tape::{self, Graph, NodeId, Segment};
use crate::{Error, Result};
use btlab_core::tokenizer::{BOS, EOS, MASK, PAD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    /// The last `shared_enc` encoder layers are shared across languages.
    pub shared_enc: usize,
    /// The first `shared_dec` decoder layers are shared across languages.
    pub shared_dec: usize,
    pub max_len: usize,
    pub dropout: f64,
    /// Vocabulary ids of the language tokens, one per language.
    pub lang_tokens: Vec<u32>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.shared_enc >= self.enc_layers || self.shared_dec >= self.dec_layers {
            return bad(format!(
                "shared layers ({}, {}) must be fewer than layers ({}, {})",
                self.shared_enc, self.shared_dec, self.enc_layers, self.dec_layers
            ));
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return bad(format!("width {} is not divisible by {} heads", self.d_model, self.heads));
        }
        if self.lang_tokens.len() != 2 {
            return bad(format!("expected 2 language tokens, got {}", self.lang_tokens.len()));
        }
        if self.lang_tokens.iter().any(|&t| t as usize >= self.vocab_size) {
            return bad("language token outside the vocabulary".into());
        }
        if self.max_len < 3 {
            return bad("max_len must be at least 3".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} is not in [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn parameter_count(&self) -> usize {
        let (d, f, v) = (self.d_model, self.d_ff, self.vocab_size);
        let ln = 2 * d;
        let proj = d * d + d;
        let ffn = d * f + f + f * d + d;
        let enc = 2 * ln + 4 * proj + ffn;
        let dec = 3 * ln + 8 * proj + ffn;
        let enc_sets = self.shared_enc + 2 * (self.enc_layers - self.shared_enc);
        let dec_sets = self.shared_dec + 2 * (self.dec_layers - self.shared_dec);
        v * d + v + enc_sets * enc + dec_sets * dec + ln + 2 * ln
    }
}

#[derive(Debug, Clone, Copy)]
struct Ln {
    g: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Proj {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct EncLayer {
    ln1: Ln,
    q: Proj,
    k: Proj,
    v: Proj,
    o: Proj,
    ln2: Ln,
    ff1: Proj,
    ff2: Proj,
}

#[derive(Debug, Clone, Copy)]
struct DecLayer {
    ln1: Ln,
    q: Proj,
    k: Proj,
    v: Proj,
    o: Proj,
    ln2: Ln,
    cq: Proj,
    ck: Proj,
    cv: Proj,
    co: Proj,
    ln3: Ln,
    ff1: Proj,
    ff2: Proj,
}

#[derive(Debug, Clone)]
struct Layout {
    embed: ParamId,
    out_bias: ParamId,
    /// `[layer][language]`; shared layers hold the same ids twice.
    enc: Vec<[EncLayer; 2]>,
    dec: Vec<[DecLayer; 2]>,
    enc_ln: Ln,
    dec_ln: [Ln; 2],
}

fn ln<T: Real>(p: &mut Params<T>, name: &str, d: usize) -> Ln {
    Ln {
        g: p.add(format!("{name}.g"), 1, d, Init::Ones),
        b: p.add(format!("{name}.b"), 1, d, Init::Zeros),
    }
}

fn proj<T: Real>(p: &mut Params<T>, name: &str, i: usize, o: usize) -> Proj {
    Proj {
        w: p.add(format!("{name}.w"), i, o, Init::Glorot),
        b: p.add(format!("{name}.b"), 1, o, Init::Zeros),
    }
}

fn enc_layer<T: Real>(p: &mut Params<T>, name: &str, d: usize, f: usize) -> EncLayer {
    EncLayer {
        ln1: ln(p, &format!("{name}.ln1"), d),
        q: proj(p, &format!("{name}.q"), d, d),
        k: proj(p, &format!("{name}.k"), d, d),
        v: proj(p, &format!("{name}.v"), d, d),
        o: proj(p, &format!("{name}.o"), d, d),
        ln2: ln(p, &format!("{name}.ln2"), d),
        ff1: proj(p, &format!("{name}.ff1"), d, f),
        ff2: proj(p, &format!("{name}.ff2"), f, d),
    }
}

fn dec_layer<T: Real>(p: &mut Params<T>, name: &str, d: usize, f: usize) -> DecLayer {
    DecLayer {
        ln1: ln(p, &format!("{name}.ln1"), d),
        q: proj(p, &format!("{name}.q"), d, d),
        k: proj(p, &format!("{name}.k"), d, d),
        v: proj(p, &format!("{name}.v"), d, d),
        o: proj(p, &format!("{name}.o"), d, d),
        ln2: ln(p, &format!("{name}.ln2"), d),
        cq: proj(p, &format!("{name}.cq"), d, d),
        ck: proj(p, &format!("{name}.ck"), d, d),
        cv: proj(p, &format!("{name}.cv"), d, d),
        co: proj(p, &format!("{name}.co"), d, d),
        ln3: ln(p, &format!("{name}.ln3"), d),
        ff1: proj(p, &format!("{name}.ff1"), d, f),
        ff2: proj(p, &format!("{name}.ff2"), f, d),
    }
}

/// Greedy or temperature sampling for generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeMode {
    #[default]
    Greedy,
    Sample {
        temperature: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    pub cfg: ModelConfig,
    pub params: Params<T>,
    layout: Layout,
    positions: Vec<T>,
}

/// Source/target id sequences without special tokens.
pub type Pair = (Vec<u32>, Vec<u32>);

impl<T: Real> Model<T> {
    /// Parameters are laid out but left at zero; call
    /// [`Params::initialize`] or load a checkpoint.
    pub fn new(cfg: ModelConfig) -> Result<Model<T>> {
        cfg.validate()?;
        let (d, f) = (cfg.d_model, cfg.d_ff);
        let mut p = Params::default();
        let embed = p.add("embed", cfg.vocab_size, d, Init::Scaled { std: (d as f64).powf(-0.5) });
        let out_bias = p.add("out_bias", 1, cfg.vocab_size, Init::Zeros);
        let mut enc = Vec::new();
        for l in 0..cfg.enc_layers {
            if l >= cfg.enc_layers - cfg.shared_enc {
                let layer = enc_layer(&mut p, &format!("enc.{l}"), d, f);
                enc.push([layer, layer]);
            } else {
                let a = enc_layer(&mut p, &format!("enc.{l}.lang0"), d, f);
                let b = enc_layer(&mut p, &format!("enc.{l}.lang1"), d, f);
                enc.push([a, b]);
            }
        }
        let mut dec = Vec::new();
        for l in 0..cfg.dec_layers {
            if l < cfg.shared_dec {
                let layer = dec_layer(&mut p, &format!("dec.{l}"), d, f);
                dec.push([layer, layer]);
            } else {
                let a = dec_layer(&mut p, &format!("dec.{l}.lang0"), d, f);
                let b = dec_layer(&mut p, &format!("dec.{l}.lang1"), d, f);
                dec.push([a, b]);
            }
        }
        let enc_ln = ln(&mut p, "enc.ln", d);
        let dec_ln = [ln(&mut p, "dec.ln.lang0", d), ln(&mut p, "dec.ln.lang1", d)];
        let mut positions = vec![T::zero(); cfg.max_len * d];
        for pos in 0..cfg.max_len {
            for i in 0..d / 2 {
                let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
                positions[pos * d + 2 * i] = T::of(angle.sin());
                positions[pos * d + 2 * i + 1] = T::of(angle.cos());
            }
        }
        Ok(Model {
            cfg,
            params: p,
            layout: Layout {
                embed,
                out_bias,
                enc,
                dec,
                enc_ln,
                dec_ln,
            },
            positions,
        })
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        let mut m = Model::<U>::new(self.cfg.clone()).expect("validated config");
        m.params = self.params.cast();
        m
    }

    pub fn embedding_id(&self) -> ParamId {
        self.layout.embed
    }

    fn d(&self) -> usize {
        self.cfg.d_model
    }

    fn embed_scale(&self) -> T {
        T::of((self.d() as f64).sqrt())
    }

    fn position_offsets(&self, lens: &[usize]) -> Vec<T> {
        let d = self.d();
        let mut out = Vec::with_capacity(lens.iter().sum::<usize>() * d);
        for &l in lens {
            out.extend_from_slice(&self.positions[..l * d]);
        }
        out
    }

    fn encoder_inputs(&self, src: &[Vec<u32>], lang: usize) -> (Vec<u32>, Vec<Segment>) {
        let mut ids = Vec::new();
        let mut segs = Vec::new();
        for s in src {
            let keep = s.len().min(self.cfg.max_len - 2);
            if keep < s.len() {
                log::debug!("source of {} tokens truncated to {}", s.len(), keep);
            }
            let start = ids.len();
            ids.push(self.cfg.lang_tokens[lang]);
            ids.extend_from_slice(&s[..keep]);
            ids.push(EOS);
            segs.push(Segment {
                start,
                len: keep + 2,
            });
        }
        (ids, segs)
    }

    fn dropout<R: Rng + ?Sized>(&self, g: &mut Graph<'_, T>, x: NodeId, rng: &mut Option<&mut R>) -> NodeId {
        let p = self.cfg.dropout;
        match rng {
            Some(r) if p > 0.0 => {
                let (rows, cols) = g.shape(x);
                let keep = T::of(1.0 / (1.0 - p));
                let cut = (p * 4_294_967_296.0) as u64;
                let mask = (0..rows * cols)
                    .map(|_| if (r.next_u32() as u64) < cut { T::zero() } else { keep })
                    .collect();
                g.dropout(x, mask)
            }
            _ => x,
        }
    }

    fn proj(&self, g: &mut Graph<'_, T>, x: NodeId, p: Proj) -> NodeId {
        g.linear(x, p.w, Some(p.b))
    }

    fn ffn<R: Rng + ?Sized>(&self, g: &mut Graph<'_, T>, x: NodeId, ln: Ln, ff1: Proj, ff2: Proj, rng: &mut Option<&mut R>) -> NodeId {
        let h = g.layer_norm(x, ln.g, ln.b);
        let h = self.proj(g, h, ff1);
        let h = g.gelu(h);
        let h = self.proj(g, h, ff2);
        let h = self.dropout(g, h, rng);
        g.add(x, h)
    }

    /// Encoder states (packed rows) and the segment of each sentence.
    pub fn encode_graph<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<'_, T>,
        src: &[Vec<u32>],
        lang: usize,
        rng: &mut Option<&mut R>,
    ) -> (NodeId, Vec<Segment>) {
        let (ids, segs) = self.encoder_inputs(src, lang);
        let lens: Vec<usize> = segs.iter().map(|s| s.len).collect();
        let offsets = self.position_offsets(&lens);
        let mut x = g.embed(ids, self.layout.embed, self.embed_scale(), &offsets);
        x = self.dropout(g, x, rng);
        for layer in &self.layout.enc {
            let l = layer[lang];
            let h = g.layer_norm(x, l.ln1.g, l.ln1.b);
            let q = self.proj(g, h, l.q);
            let k = self.proj(g, h, l.k);
            let v = self.proj(g, h, l.v);
            let a = g.attention(q, k, v, self.cfg.heads, segs.clone(), segs.clone(), false);
            let o = self.proj(g, a, l.o);
            let o = self.dropout(g, o, rng);
            x = g.add(x, o);
            x = self.ffn(g, x, l.ln2, l.ff1, l.ff2, rng);
        }
        let out = g.layer_norm(x, self.layout.enc_ln.g, self.layout.enc_ln.b);
        (out, segs)
    }

    /// Teacher-forced mean token cross entropy of `tgt` given `src`.
    /// Dropout is applied when `rng` is given.
    pub fn loss_graph<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<'_, T>,
        batch: &[Pair],
        src_lang: usize,
        tgt_lang: usize,
        mut rng: Option<&mut R>,
    ) -> NodeId {
        let logits = self.logits_graph(g, batch, src_lang, tgt_lang, &mut rng);
        let mut targets = Vec::new();
        for (_, t) in batch {
            let keep = t.len().min(self.cfg.max_len - 1);
            targets.extend_from_slice(&t[..keep]);
            targets.push(EOS);
        }
        g.cross_entropy(logits, targets)
    }

    /// Decoder output logits for every teacher-forced position.
    pub fn logits_graph<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<'_, T>,
        batch: &[Pair],
        src_lang: usize,
        tgt_lang: usize,
        rng: &mut Option<&mut R>,
    ) -> NodeId {
        let src: Vec<Vec<u32>> = batch.iter().map(|p| p.0.clone()).collect();
        let (enc, enc_segs) = self.encode_graph(g, &src, src_lang, rng);
        let mut ids = Vec::new();
        let mut segs = Vec::new();
        for (_, t) in batch {
            let keep = t.len().min(self.cfg.max_len - 1);
            if keep < t.len() {
                log::debug!("target of {} tokens truncated to {}", t.len(), keep);
            }
            segs.push(Segment {
                start: ids.len(),
                len: keep + 1,
            });
            ids.push(self.cfg.lang_tokens[tgt_lang]);
            ids.extend_from_slice(&t[..keep]);
        }
        let lens: Vec<usize> = segs.iter().map(|s| s.len).collect();
        let offsets = self.position_offsets(&lens);
        let mut x = g.embed(ids, self.layout.embed, self.embed_scale(), &offsets);
        x = self.dropout(g, x, rng);
        for layer in &self.layout.dec {
            let l = layer[tgt_lang];
            let h = g.layer_norm(x, l.ln1.g, l.ln1.b);
            let q = self.proj(g, h, l.q);
            let k = self.proj(g, h, l.k);
            let v = self.proj(g, h, l.v);
            let a = g.attention(q, k, v, self.cfg.heads, segs.clone(), segs.clone(), true);
            let o = self.proj(g, a, l.o);
            let o = self.dropout(g, o, rng);
            x = g.add(x, o);
            let h = g.layer_norm(x, l.ln2.g, l.ln2.b);
            let q = self.proj(g, h, l.cq);
            let k = self.proj(g, enc, l.ck);
            let v = self.proj(g, enc, l.cv);
            let a = g.attention(q, k, v, self.cfg.heads, segs.clone(), enc_segs.clone(), false);
            let o = self.proj(g, a, l.co);
            let o = self.dropout(g, o, rng);
            x = g.add(x, o);
            x = self.ffn(g, x, l.ln3, l.ff1, l.ff2, rng);
        }
        let ln = self.layout.dec_ln[tgt_lang];
        let x = g.layer_norm(x, ln.g, ln.b);
        g.linear_t(x, self.layout.embed, Some(self.layout.out_bias))
    }

    /// Loss value without gradients or dropout.
    pub fn loss(&self, batch: &[Pair], src_lang: usize, tgt_lang: usize) -> f64 {
        let mut g = Graph::new(&self.params);
        let l = self.loss_graph::<rand_chacha::ChaCha8Rng>(&mut g, batch, src_lang, tgt_lang, None);
        g.value(l)[0].to_f64().unwrap_or(f64::NAN)
    }

    /// Loss and accumulated gradients (added into `grads`).
    pub fn loss_and_grad<R: Rng + ?Sized>(
        &self,
        batch: &[Pair],
        src_lang: usize,
        tgt_lang: usize,
        rng: Option<&mut R>,
        grads: &mut [T],
    ) -> f64 {
        let mut g = Graph::new(&self.params);
        let l = self.loss_graph(&mut g, batch, src_lang, tgt_lang, rng);
        g.backward(l, grads);
        g.value(l)[0].to_f64().unwrap_or(f64::NAN)
    }

    /// Autoregressive decoding with cached keys and values. Outputs exclude
    /// the final end-of-sentence token.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        src: &[Vec<u32>],
        src_lang: usize,
        tgt_lang: usize,
        mode: DecodeMode,
        max_len: usize,
        rng: &mut R,
    ) -> Vec<Vec<u32>> {
        if src.is_empty() {
            return Vec::new();
        }
        let d = self.d();
        let heads = self.cfg.heads;
        let dh = d / heads;
        let max_len = max_len.min(self.cfg.max_len - 1);
        let mut g = Graph::new(&self.params);
        let (enc, enc_segs) = self.encode_graph::<R>(&mut g, src, src_lang, &mut None);
        let enc_v = g.value(enc);
        let p = &self.params;
        let cross: Vec<(Vec<T>, Vec<T>)> = self
            .layout
            .dec
            .iter()
            .map(|layer| {
                let l = layer[tgt_lang];
                (
                    tape::linear(enc_v, d, p.get(l.ck.w), Some(p.get(l.ck.b)), false),
                    tape::linear(enc_v, d, p.get(l.cv.w), Some(p.get(l.cv.b)), false),
                )
            })
            .collect();
        let n = src.len();
        let n_layers = self.layout.dec.len();
        let mut cache_k: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); n_layers]; n];
        let mut cache_v: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); n_layers]; n];
        let mut outputs: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut active: Vec<usize> = (0..n).collect();
        let mut last: Vec<u32> = vec![self.cfg.lang_tokens[tgt_lang]; n];
        let scale = self.embed_scale();
        for step in 0..=max_len {
            if active.is_empty() {
                break;
            }
            let b = active.len();
            let mut x = vec![T::zero(); b * d];
            let table = p.get(self.layout.embed);
            for (r, &s) in active.iter().enumerate() {
                let id = last[s] as usize;
                for c in 0..d {
                    x[r * d + c] = table[id * d + c] * scale + self.positions[step * d + c];
                }
            }
            for (li, layer) in self.layout.dec.iter().enumerate() {
                let l = layer[tgt_lang];
                let (h, _, _) = tape::layer_norm(&x, d, p.get(l.ln1.g), p.get(l.ln1.b));
                let q = tape::linear(&h, d, p.get(l.q.w), Some(p.get(l.q.b)), false);
                let k = tape::linear(&h, d, p.get(l.k.w), Some(p.get(l.k.b)), false);
                let v = tape::linear(&h, d, p.get(l.v.w), Some(p.get(l.v.b)), false);
                let mut a = vec![T::zero(); b * d];
                for (r, &s) in active.iter().enumerate() {
                    cache_k[s][li].extend_from_slice(&k[r * d..(r + 1) * d]);
                    cache_v[s][li].extend_from_slice(&v[r * d..(r + 1) * d]);
                    let len = step + 1;
                    let mut out = vec![T::zero(); d];
                    for hh in 0..heads {
                        tape::attend_head(
                            &q[r * d..(r + 1) * d],
                            &cache_k[s][li],
                            &cache_v[s][li],
                            d,
                            hh * dh,
                            dh,
                            Segment { start: 0, len: 1 },
                            Segment { start: 0, len },
                            false,
                            &mut out,
                        );
                    }
                    a[r * d..(r + 1) * d].copy_from_slice(&out);
                }
                let o = tape::linear(&a, d, p.get(l.o.w), Some(p.get(l.o.b)), false);
                add_in_place(&mut x, &o);
                let (h, _, _) = tape::layer_norm(&x, d, p.get(l.ln2.g), p.get(l.ln2.b));
                let q = tape::linear(&h, d, p.get(l.cq.w), Some(p.get(l.cq.b)), false);
                let (ck, cv) = &cross[li];
                let mut a = vec![T::zero(); b * d];
                for (r, &s) in active.iter().enumerate() {
                    let mut out = vec![T::zero(); d];
                    for hh in 0..heads {
                        tape::attend_head(
                            &q[r * d..(r + 1) * d],
                            ck,
                            cv,
                            d,
                            hh * dh,
                            dh,
                            Segment { start: 0, len: 1 },
                            enc_segs[s],
                            false,
                            &mut out,
                        );
                    }
                    a[r * d..(r + 1) * d].copy_from_slice(&out);
                }
                let o = tape::linear(&a, d, p.get(l.co.w), Some(p.get(l.co.b)), false);
                add_in_place(&mut x, &o);
                let (h, _, _) = tape::layer_norm(&x, d, p.get(l.ln3.g), p.get(l.ln3.b));
                let mut f = tape::linear(&h, d, p.get(l.ff1.w), Some(p.get(l.ff1.b)), false);
                for v in &mut f {
                    *v = tape::gelu(*v);
                }
                let f = tape::linear(&f, self.cfg.d_ff, p.get(l.ff2.w), Some(p.get(l.ff2.b)), false);
                add_in_place(&mut x, &f);
            }
            let ln = self.layout.dec_ln[tgt_lang];
            let (h, _, _) = tape::layer_norm(&x, d, p.get(ln.g), p.get(ln.b));
            let logits = tape::linear(&h, d, p.get(self.layout.embed), Some(p.get(self.layout.out_bias)), true);
            let v = self.cfg.vocab_size;
            let mut still = Vec::with_capacity(b);
            for (r, &s) in active.iter().enumerate() {
                let row = &logits[r * v..(r + 1) * v];
                let tok = if step == max_len {
                    EOS
                } else {
                    self.pick(row, mode, rng)
                };
                if tok == EOS {
                    continue;
                }
                outputs[s].push(tok);
                last[s] = tok;
                still.push(s);
            }
            active = still;
        }
        outputs
    }

    fn pick<R: Rng + ?Sized>(&self, row: &[T], mode: DecodeMode, rng: &mut R) -> u32 {
        let allowed = |i: usize| ![PAD, BOS, MASK].contains(&(i as u32)) && !self.cfg.lang_tokens.contains(&(i as u32));
        match mode {
            DecodeMode::Greedy => {
                let mut best = EOS as usize;
                for i in 0..row.len() {
                    if allowed(i) && row[i] > row[best] {
                        best = i;
                    }
                }
                best as u32
            }
            DecodeMode::Sample { temperature } => {
                let t = temperature.max(1e-6);
                let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.to_f64().unwrap_or(0.0)));
                let w: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if allowed(i) {
                            ((v.to_f64().unwrap_or(0.0) - max) / t).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                WeightedIndex::new(&w).map(|d| d.sample(rng) as u32).unwrap_or(EOS)
            }
        }
    }
}

fn add_in_place<T: Real>(x: &mut [T], y: &[T]) {
    for (a, &b) in x.iter_mut().zip(y) {
        *a += b;
    }
}
