// SPDX-License-Identifier: Apache-2.0

//! Relational graph convolution Q-network with hand-written backprop.
//!
//! Layer `l` maps node embeddings `h` to
//! `z_i = W_o h_i + W_in mean_{j in fanin(i)} h_j + W_out mean_{j in fanout(i)} h_j`
//! followed by ReLU on every layer but the last. At the first layer the
//! load feature only travels along fanout edges and the input slew only
//! along fanin edges. The last layer emits `[Q_up, Q_down]` per node.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::features::FeatureSchema;
use crate::math::sqrt;

use super::state::{Adjacency, StateSubgraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("feature width {got} does not match network input {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Weight matrices of one layer, row-major `dout x din`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgcnLayer {
    pub din: usize,
    pub dout: usize,
    pub w_self: Vec<f64>,
    pub w_fanin: Vec<f64>,
    pub w_fanout: Vec<f64>,
}

impl RgcnLayer {
    fn zeros(din: usize, dout: usize) -> Self {
        Self { din, dout, w_self: vec![0.0; din * dout], w_fanin: vec![0.0; din * dout], w_fanout: vec![0.0; din * dout] }
    }

    fn glorot<R: Rng>(din: usize, dout: usize, rng: &mut R) -> Self {
        let a = sqrt(6.0 / (din + dout) as f64);
        let mut m = || (0..din * dout).map(|_| rng.gen_range(-a..a)).collect::<Vec<f64>>();
        Self { din, dout, w_self: m(), w_fanin: m(), w_fanout: m() }
    }

    fn mats(&self) -> [&Vec<f64>; 3] {
        [&self.w_self, &self.w_fanin, &self.w_fanout]
    }

    fn mats_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.w_self, &mut self.w_fanin, &mut self.w_fanout]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: Vec<RgcnLayer>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    n: usize,
    /// Per layer: input embeddings, fanin and fanout means, pre-activations.
    inputs: Vec<Vec<f64>>,
    agg_in: Vec<Vec<f64>>,
    agg_out: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    pub q: Vec<[f64; 2]>,
}

/// `y[i] += m x` for row-major `m` of shape `rows x cols`, over `n` rows of
/// `x` (width `cols`) into `y` (width `rows`).
fn gemm_acc(m: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64], n: usize) {
    for i in 0..n {
        let xi = &x[i * cols..(i + 1) * cols];
        let yi = &mut y[i * rows..(i + 1) * rows];
        for (r, yr) in yi.iter_mut().enumerate() {
            let row = &m[r * cols..(r + 1) * cols];
            let mut s = 0.0;
            for c in 0..cols {
                s += row[c] * xi[c];
            }
            *yr += s;
        }
    }
}

fn mean_over(adj: &Adjacency, x: &[f64], width: usize, n: usize, gate: Option<usize>) -> Vec<f64> {
    let mut out = vec![0.0; n * width];
    for i in 0..n {
        let nb = adj.of(i);
        if nb.is_empty() {
            continue;
        }
        let inv = 1.0 / nb.len() as f64;
        let oi = &mut out[i * width..(i + 1) * width];
        for &j in nb {
            let xj = &x[j as usize * width..(j as usize + 1) * width];
            for c in 0..width {
                oi[c] += inv * xj[c];
            }
        }
        if let Some(g) = gate {
            oi[g] = 0.0;
        }
    }
    out
}

impl QNetwork {
    /// Layer widths `input -> hidden -> ... -> 2`, Glorot-uniform weights.
    pub fn new<R: Rng>(input: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(2);
        Self { layers: dims.windows(2).map(|w| RgcnLayer::glorot(w[0], w[1], rng)).collect() }
    }

    /// Same shape, all weights zero.
    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| RgcnLayer::zeros(l.din, l.dout)).collect() }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].din
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.din).collect();
        d.push(self.layers.last().map_or(0, |l| l.dout));
        d
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| 3 * l.din * l.dout).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.mats().into_iter().flat_map(|m| m.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.mats_mut().into_iter().flat_map(|m| m.iter_mut()))
    }

    pub fn forward(&self, s: &StateSubgraph) -> Result<ForwardCache, NetworkError> {
        if s.dim != self.input_dim() {
            return Err(NetworkError::DimensionMismatch { expected: self.input_dim(), got: s.dim });
        }
        let n = s.len();
        let mut cache = ForwardCache {
            n,
            inputs: Vec::with_capacity(self.layers.len()),
            agg_in: Vec::with_capacity(self.layers.len()),
            agg_out: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            q: Vec::new(),
        };
        let mut h = s.features.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (gin, gout) = if l == 0 { (Some(FeatureSchema::LOAD), Some(FeatureSchema::IN_SLEW)) } else { (None, None) };
            let ain = mean_over(&s.fanin, &h, layer.din, n, gin);
            let aout = mean_over(&s.fanout, &h, layer.din, n, gout);
            let mut z = vec![0.0; n * layer.dout];
            gemm_acc(&layer.w_self, layer.dout, layer.din, &h, &mut z, n);
            gemm_acc(&layer.w_fanin, layer.dout, layer.din, &ain, &mut z, n);
            gemm_acc(&layer.w_fanout, layer.dout, layer.din, &aout, &mut z, n);
            let next = if l == last { z.clone() } else { z.iter().map(|&v| v.max(0.0)).collect() };
            cache.inputs.push(h);
            cache.agg_in.push(ain);
            cache.agg_out.push(aout);
            cache.pre.push(z);
            h = next;
        }
        cache.q = h.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        Ok(cache)
    }

    pub fn q_values(&self, s: &StateSubgraph) -> Result<Vec<[f64; 2]>, NetworkError> {
        Ok(self.forward(s)?.q)
    }

    /// Accumulates `d(loss)/d(weights)` into `grads` given `dq = d(loss)/dQ`.
    pub fn backward(&self, s: &StateSubgraph, cache: &ForwardCache, dq: &[[f64; 2]], grads: &mut QNetwork) {
        let n = cache.n;
        let mut dh: Vec<f64> = dq.iter().flat_map(|q| q.iter().copied()).collect();
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let (din, dout) = (layer.din, layer.dout);
            let z = &cache.pre[l];
            let dz: Vec<f64> = if l == last {
                dh
            } else {
                dh.iter().zip(z).map(|(&g, &zv)| if zv > 0.0 { g } else { 0.0 }).collect()
            };
            let g = &mut grads.layers[l];
            let inputs = [&cache.inputs[l], &cache.agg_in[l], &cache.agg_out[l]];
            for (m, x) in g.mats_mut().into_iter().zip(inputs) {
                for i in 0..n {
                    let dzi = &dz[i * dout..(i + 1) * dout];
                    let xi = &x[i * din..(i + 1) * din];
                    for r in 0..dout {
                        let d = dzi[r];
                        if d == 0.0 {
                            continue;
                        }
                        let row = &mut m[r * din..(r + 1) * din];
                        for c in 0..din {
                            row[c] += d * xi[c];
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            // Gradient w.r.t. the layer input through the self term and
            // both neighbor means.
            let mut dx = vec![0.0; n * din];
            let mut dain = vec![0.0; n * din];
            let mut daout = vec![0.0; n * din];
            for (m, out) in [(&layer.w_self, &mut dx), (&layer.w_fanin, &mut dain), (&layer.w_fanout, &mut daout)] {
                for i in 0..n {
                    let dzi = &dz[i * dout..(i + 1) * dout];
                    let oi = &mut out[i * din..(i + 1) * din];
                    for r in 0..dout {
                        let d = dzi[r];
                        if d == 0.0 {
                            continue;
                        }
                        let row = &m[r * din..(r + 1) * din];
                        for c in 0..din {
                            oi[c] += d * row[c];
                        }
                    }
                }
            }
            for (adj, da) in [(&s.fanin, &dain), (&s.fanout, &daout)] {
                for i in 0..n {
                    let nb = adj.of(i);
                    if nb.is_empty() {
                        continue;
                    }
                    let inv = 1.0 / nb.len() as f64;
                    for &j in nb {
                        let j = j as usize;
                        for c in 0..din {
                            dx[j * din + c] += inv * da[i * din + c];
                        }
                    }
                }
            }
            dh = dx;
        }
    }

    pub fn add_scaled(&mut self, other: &QNetwork, k: f64) {
        for (a, b) in self.params_mut().zip(other.params()) {
            *a += k * b;
        }
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.params().map(|x| x * x).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|x| x.is_finite())
    }
}

/// Stochastic gradient descent with momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    pub velocity: QNetwork,
}

impl Sgd {
    pub fn new(net: &QNetwork, lr: f64, momentum: f64) -> Self {
        Self { lr, momentum, velocity: net.zeros_like() }
    }

    pub fn step(&mut self, net: &mut QNetwork, grad: &QNetwork) {
        for ((w, v), g) in net.params_mut().zip(self.velocity.params_mut()).zip(grad.params()) {
            *v = self.momentum * *v + g;
            *w -= self.lr * *v;
        }
    }
}

const MAGIC: &[u8; 4] = b"ECOQ";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("model truncated")]
    Truncated,
    #[error("feature schema mismatch: model {model:#018x}, design {design:#018x}")]
    SchemaMismatch { model: u64, design: u64 },
    #[error("non-finite weight in model")]
    NonFinite,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ModelError> {
        if self.buf.len() < N {
            return Err(ModelError::Truncated);
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

impl QNetwork {
    /// `ECOQ`, version, schema hash, layer count, widths, then each layer's
    /// self, fanin and fanout matrices as little-endian f64, row-major.
    pub fn to_bytes(&self, schema_hash: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.num_params());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&schema_hash.to_le_bytes());
        let dims = self.dims();
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for w in self.params() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Returns the network and the schema hash it was saved with.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, u64), ModelError> {
        let mut r = Reader { buf: bytes };
        if &r.take::<4>()? != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let v = r.u32()?;
        if v != VERSION {
            return Err(ModelError::Version(v));
        }
        let hash = r.u64()?;
        let nd = r.u32()? as usize;
        if !(2..=64).contains(&nd) {
            return Err(ModelError::Truncated);
        }
        let mut dims = Vec::with_capacity(nd);
        for _ in 0..nd {
            dims.push(r.u32()? as usize);
        }
        let mut net = QNetwork { layers: dims.windows(2).map(|w| RgcnLayer::zeros(w[0], w[1])).collect() };
        if r.buf.len() != 8 * net.num_params() {
            return Err(ModelError::Truncated);
        }
        for w in net.params_mut() {
            *w = r.f64()?;
        }
        if !net.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok((net, hash))
    }
}
