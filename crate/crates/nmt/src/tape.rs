//! Reverse-mode autodiff over row-major matrices.
//!
//! Sequences of a batch are packed along the row axis without padding;
//! attention ops carry the segment boundaries. Every op computes its value
//! when it is recorded.

use crate::params::{ParamId, Params};
use crate::real::{gemm, Real, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Rows `[start, start + len)` of a packed matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

enum Op<T> {
    Constant,
    Embed {
        ids: Vec<u32>,
        table: ParamId,
        scale: T,
    },
    Linear {
        x: NodeId,
        w: ParamId,
        b: Option<ParamId>,
        transpose_w: bool,
    },
    Add(NodeId, NodeId),
    LayerNorm {
        x: NodeId,
        gamma: ParamId,
        beta: ParamId,
        xhat: Vec<T>,
        rstd: Vec<T>,
    },
    Gelu(NodeId),
    Dropout {
        x: NodeId,
        mask: Vec<T>,
    },
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        heads: usize,
        q_seg: Vec<Segment>,
        k_seg: Vec<Segment>,
        probs: Vec<T>,
    },
    CrossEntropy {
        logits: NodeId,
        targets: Vec<u32>,
        probs: Vec<T>,
    },
}

struct Node<T> {
    rows: usize,
    cols: usize,
    value: Vec<T>,
    op: Op<T>,
}

pub struct Graph<'p, T: Real> {
    params: &'p Params<T>,
    nodes: Vec<Node<T>>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

// tanh through a single exp; libm's tanh is several times slower here.
fn fast_tanh<T: Real>(u: T) -> T {
    let two = T::of(2.0);
    T::one() - two / ((two * u).exp() + T::one())
}

pub(crate) fn gelu<T: Real>(x: T) -> T {
    let c = T::of(GELU_C);
    let a = T::of(GELU_A);
    let half = T::of(0.5);
    half * x * (T::one() + fast_tanh(c * (x + a * x * x * x)))
}

fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::of(GELU_C);
    let a = T::of(GELU_A);
    let half = T::of(0.5);
    let t = fast_tanh(c * (x + a * x * x * x));
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::of(3.0) * a * x * x)
}

pub(crate) const LN_EPS: f64 = 1e-5;

/// Row-wise layer norm; returns (output, normalized input, 1/std).
pub(crate) fn layer_norm<T: Real>(x: &[T], cols: usize, gamma: &[T], beta: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let rows = x.len() / cols;
    let mut y = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut rstd = vec![T::zero(); rows];
    let n = T::of(cols as f64);
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let mean = row.iter().fold(T::zero(), |s, &v| s + v) / n;
        let var = row.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean)) / n;
        let rs = T::one() / (var + T::of(LN_EPS)).sqrt();
        rstd[r] = rs;
        for c in 0..cols {
            let h = (row[c] - mean) * rs;
            xhat[r * cols + c] = h;
            y[r * cols + c] = h * gamma[c] + beta[c];
        }
    }
    (y, xhat, rstd)
}

/// `x W + b` for row-major `x` (n x in) and `W` (in x out), or `x W^T`
/// when `W` is stored out x in.
pub(crate) fn linear<T: Real>(x: &[T], in_dim: usize, w: &[T], b: Option<&[T]>, transpose_w: bool) -> Vec<T> {
    let n = x.len() / in_dim;
    let out = w.len() / in_dim;
    let mut y = vec![T::zero(); n * out];
    let wv = if transpose_w {
        View::t(w, 0, in_dim)
    } else {
        View::rows(w, 0, out)
    };
    gemm(n, in_dim, out, View::rows(x, 0, in_dim), wv, &mut y, 0, out, false);
    if let Some(b) = b {
        for row in y.chunks_mut(out) {
            for (v, &bb) in row.iter_mut().zip(b) {
                *v += bb;
            }
        }
    }
    y
}

pub(crate) fn softmax_in_place<T: Real>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// Scaled dot-product attention of one head over one segment pair. Writes
/// the head's output columns and returns the probabilities (lq x lk).
#[allow(clippy::too_many_arguments)]
pub(crate) fn attend_head<T: Real>(
    q: &[T],
    k: &[T],
    v: &[T],
    d: usize,
    head_off: usize,
    dh: usize,
    qs: Segment,
    ks: Segment,
    causal: bool,
    out: &mut [T],
) -> Vec<T> {
    let (lq, lk) = (qs.len, ks.len);
    let mut p = vec![T::zero(); lq * lk];
    gemm(
        lq,
        dh,
        lk,
        View::strided(q, qs.start * d + head_off, d),
        View::strided(k, ks.start * d + head_off, d).transposed(),
        &mut p,
        0,
        lk,
        false,
    );
    let scale = T::one() / T::of(dh as f64).sqrt();
    for i in 0..lq {
        let row = &mut p[i * lk..(i + 1) * lk];
        for (j, s) in row.iter_mut().enumerate() {
            *s = if causal && j > i { T::neg_infinity() } else { *s * scale };
        }
        softmax_in_place(row);
    }
    gemm(
        lq,
        lk,
        dh,
        View::rows(&p, 0, lk),
        View::strided(v, ks.start * d + head_off, d),
        out,
        qs.start * d + head_off,
        d,
        false,
    );
    p
}

impl<'p, T: Real> Graph<'p, T> {
    pub fn new(params: &'p Params<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<T>, op: Op<T>) -> NodeId {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node { rows, cols, value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[T] {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        (self.nodes[id.0].rows, self.nodes[id.0].cols)
    }

    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<T>) -> NodeId {
        self.push(rows, cols, value, Op::Constant)
    }

    /// `scale * table[id] + offsets[i]` per row; `offsets` is a constant
    /// (positional encodings), same shape as the output.
    pub fn embed(&mut self, ids: Vec<u32>, table: ParamId, scale: T, offsets: &[T]) -> NodeId {
        let spec = self.params.spec(table);
        let d = spec.cols;
        let t = self.params.get(table);
        let mut value = offsets.to_vec();
        for (i, &id) in ids.iter().enumerate() {
            let src = &t[id as usize * d..(id as usize + 1) * d];
            for (o, &s) in value[i * d..(i + 1) * d].iter_mut().zip(src) {
                *o += scale * s;
            }
        }
        let rows = ids.len();
        self.push(rows, d, value, Op::Embed { ids, table, scale })
    }

    pub fn linear(&mut self, x: NodeId, w: ParamId, b: Option<ParamId>) -> NodeId {
        self.linear_impl(x, w, b, false)
    }

    /// `x W^T + b` with `W` stored out x in (tied output embedding).
    pub fn linear_t(&mut self, x: NodeId, w: ParamId, b: Option<ParamId>) -> NodeId {
        self.linear_impl(x, w, b, true)
    }

    fn linear_impl(&mut self, x: NodeId, w: ParamId, b: Option<ParamId>, transpose_w: bool) -> NodeId {
        let (rows, in_dim) = self.shape(x);
        let spec = self.params.spec(w);
        let out = if transpose_w { spec.rows } else { spec.cols };
        assert_eq!(if transpose_w { spec.cols } else { spec.rows }, in_dim, "linear: {}", spec.name);
        let value = linear(
            self.value(x),
            in_dim,
            self.params.get(w),
            b.map(|b| self.params.get(b)),
            transpose_w,
        );
        self.push(rows, out, value, Op::Linear { x, w, b, transpose_w })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.shape(a), self.shape(b));
        let (rows, cols) = self.shape(a);
        let value = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x + y).collect();
        self.push(rows, cols, value, Op::Add(a, b))
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: ParamId, beta: ParamId) -> NodeId {
        let (rows, cols) = self.shape(x);
        let (y, xhat, rstd) = layer_norm(self.value(x), cols, self.params.get(gamma), self.params.get(beta));
        self.push(rows, cols, y, Op::LayerNorm { x, gamma, beta, xhat, rstd })
    }

    pub fn gelu(&mut self, x: NodeId) -> NodeId {
        let (rows, cols) = self.shape(x);
        let value = self.value(x).iter().map(|&v| gelu(v)).collect();
        self.push(rows, cols, value, Op::Gelu(x))
    }

    /// Inverted dropout with a precomputed keep mask (entries 0 or 1/(1-p)).
    pub fn dropout(&mut self, x: NodeId, mask: Vec<T>) -> NodeId {
        let (rows, cols) = self.shape(x);
        let value = self.value(x).iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        self.push(rows, cols, value, Op::Dropout { x, mask })
    }

    /// Multi-head attention; query segment `i` attends to key segment `i`.
    #[allow(clippy::too_many_arguments)]
    pub fn attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        heads: usize,
        q_seg: Vec<Segment>,
        k_seg: Vec<Segment>,
        causal: bool,
    ) -> NodeId {
        let (rows, d) = self.shape(q);
        assert_eq!(q_seg.len(), k_seg.len());
        assert_eq!(d % heads, 0);
        let dh = d / heads;
        let mut out = vec![T::zero(); rows * d];
        let mut probs = Vec::new();
        for (&qs, &ks) in q_seg.iter().zip(&k_seg) {
            for h in 0..heads {
                let p = attend_head(
                    self.value(q),
                    self.value(k),
                    self.value(v),
                    d,
                    h * dh,
                    dh,
                    qs,
                    ks,
                    causal,
                    &mut out,
                );
                probs.extend(p);
            }
        }
        self.push(
            rows,
            d,
            out,
            Op::Attention {
                q,
                k,
                v,
                heads,
                q_seg,
                k_seg,
                probs,
            },
        )
    }

    /// Mean token cross entropy; a 1 x 1 node.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: Vec<u32>) -> NodeId {
        let (rows, cols) = self.shape(logits);
        assert_eq!(rows, targets.len());
        let mut probs = self.value(logits).to_vec();
        let mut loss = T::zero();
        for (r, &t) in targets.iter().enumerate() {
            let row = &mut probs[r * cols..(r + 1) * cols];
            softmax_in_place(row);
            loss -= row[t as usize].max(T::min_positive_value()).ln();
        }
        let loss = if rows == 0 { T::zero() } else { loss / T::of(rows as f64) };
        self.push(1, 1, vec![loss], Op::CrossEntropy { logits, targets, probs })
    }

    /// Accumulates d(loss)/d(params) into `grads` (same layout as params).
    pub fn backward(&self, loss: NodeId, grads: &mut [T]) {
        assert_eq!(self.shape(loss), (1, 1));
        assert_eq!(grads.len(), self.params.len());
        let mut g: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(vec![T::one()]);
        for idx in (0..=loss.0).rev() {
            let Some(dy) = g[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Embed { ids, table, scale } => {
                    let d = node.cols;
                    let off = self.params.spec(*table).offset;
                    for (i, &id) in ids.iter().enumerate() {
                        let dst = &mut grads[off + id as usize * d..off + (id as usize + 1) * d];
                        for (o, &v) in dst.iter_mut().zip(&dy[i * d..(i + 1) * d]) {
                            *o += *scale * v;
                        }
                    }
                }
                Op::Linear { x, w, b, transpose_w } => {
                    let n = node.rows;
                    let out = node.cols;
                    let (_, in_dim) = self.shape(*x);
                    let wv = self.params.get(*w);
                    let woff = self.params.spec(*w).offset;
                    let gx = grad_slot(&mut g, *x, n * in_dim);
                    let xv = &self.nodes[x.0].value;
                    if *transpose_w {
                        gemm(n, out, in_dim, View::rows(&dy, 0, out), View::rows(wv, 0, in_dim), gx, 0, in_dim, true);
                        gemm(out, n, in_dim, View::t(&dy, 0, out), View::rows(xv, 0, in_dim), grads, woff, in_dim, true);
                    } else {
                        gemm(n, out, in_dim, View::rows(&dy, 0, out), View::t(wv, 0, out), gx, 0, in_dim, true);
                        gemm(in_dim, n, out, View::t(xv, 0, in_dim), View::rows(&dy, 0, out), grads, woff, out, true);
                    }
                    if let Some(b) = b {
                        let boff = self.params.spec(*b).offset;
                        for row in dy.chunks(out) {
                            for (o, &v) in grads[boff..boff + out].iter_mut().zip(row) {
                                *o += v;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    for t in [*a, *b] {
                        let gt = grad_slot(&mut g, t, dy.len());
                        for (o, &v) in gt.iter_mut().zip(&dy) {
                            *o += v;
                        }
                    }
                }
                Op::LayerNorm { x, gamma, beta, xhat, rstd } => {
                    let cols = node.cols;
                    let gam = self.params.get(*gamma);
                    let goff = self.params.spec(*gamma).offset;
                    let boff = self.params.spec(*beta).offset;
                    let n = T::of(cols as f64);
                    let gx = grad_slot(&mut g, *x, dy.len());
                    for r in 0..node.rows {
                        let dyr = &dy[r * cols..(r + 1) * cols];
                        let xh = &xhat[r * cols..(r + 1) * cols];
                        let mut sum_d = T::zero();
                        let mut sum_dx = T::zero();
                        for c in 0..cols {
                            grads[goff + c] += dyr[c] * xh[c];
                            grads[boff + c] += dyr[c];
                            let dxh = dyr[c] * gam[c];
                            sum_d += dxh;
                            sum_dx += dxh * xh[c];
                        }
                        for c in 0..cols {
                            let dxh = dyr[c] * gam[c];
                            gx[r * cols + c] += rstd[r] * (dxh - sum_d / n - xh[c] * sum_dx / n);
                        }
                    }
                }
                Op::Gelu(x) => {
                    let xv = &self.nodes[x.0].value;
                    let gx = grad_slot(&mut g, *x, dy.len());
                    for i in 0..dy.len() {
                        gx[i] += dy[i] * gelu_grad(xv[i]);
                    }
                }
                Op::Dropout { x, mask } => {
                    let gx = grad_slot(&mut g, *x, dy.len());
                    for i in 0..dy.len() {
                        gx[i] += dy[i] * mask[i];
                    }
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    heads,
                    q_seg,
                    k_seg,
                    probs,
                } => {
                    let d = node.cols;
                    let dh = d / heads;
                    let scale = T::one() / T::of(dh as f64).sqrt();
                    let mut gq = vec![T::zero(); self.nodes[q.0].value.len()];
                    let mut gk = vec![T::zero(); self.nodes[k.0].value.len()];
                    let mut gv = vec![T::zero(); self.nodes[v.0].value.len()];
                    let (qv, kv, vv) = (&self.nodes[q.0].value, &self.nodes[k.0].value, &self.nodes[v.0].value);
                    let mut p_off = 0;
                    for (&qs, &ks) in q_seg.iter().zip(k_seg) {
                        let (lq, lk) = (qs.len, ks.len);
                        for h in 0..*heads {
                            let ho = h * dh;
                            let p = &probs[p_off..p_off + lq * lk];
                            p_off += lq * lk;
                            let mut dp = vec![T::zero(); lq * lk];
                            gemm(
                                lq,
                                dh,
                                lk,
                                View::strided(&dy, qs.start * d + ho, d),
                                View::strided(vv, ks.start * d + ho, d).transposed(),
                                &mut dp,
                                0,
                                lk,
                                false,
                            );
                            for i in 0..lq {
                                let pr = &p[i * lk..(i + 1) * lk];
                                let dr = &mut dp[i * lk..(i + 1) * lk];
                                let dot = pr.iter().zip(dr.iter()).fold(T::zero(), |s, (&a, &b)| s + a * b);
                                for j in 0..lk {
                                    dr[j] = pr[j] * (dr[j] - dot) * scale;
                                }
                            }
                            gemm(lq, lk, dh, View::rows(&dp, 0, lk), View::strided(kv, ks.start * d + ho, d), &mut gq, qs.start * d + ho, d, true);
                            gemm(lk, lq, dh, View::t(&dp, 0, lk), View::strided(qv, qs.start * d + ho, d), &mut gk, ks.start * d + ho, d, true);
                            gemm(lk, lq, dh, View::t(p, 0, lk), View::strided(&dy, qs.start * d + ho, d), &mut gv, ks.start * d + ho, d, true);
                        }
                    }
                    for (t, gt) in [(*q, gq), (*k, gk), (*v, gv)] {
                        let slot = grad_slot(&mut g, t, gt.len());
                        for (o, v) in slot.iter_mut().zip(gt) {
                            *o += v;
                        }
                    }
                }
                Op::CrossEntropy { logits, targets, probs } => {
                    let cols = self.nodes[logits.0].cols;
                    let n = targets.len();
                    let gl = grad_slot(&mut g, *logits, probs.len());
                    if n > 0 {
                        let s = dy[0] / T::of(n as f64);
                        for (r, &t) in targets.iter().enumerate() {
                            for c in 0..cols {
                                let onehot = if c == t as usize { T::one() } else { T::zero() };
                                gl[r * cols + c] += s * (probs[r * cols + c] - onehot);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn grad_slot<T: Real>(g: &mut [Option<Vec<T>>], id: NodeId, len: usize) -> &mut Vec<T> {
    g[id.0].get_or_insert_with(|| vec![T::zero(); len])
}
