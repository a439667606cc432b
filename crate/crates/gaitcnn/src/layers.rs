//! Layer forward/backward passes and the 4-stage CNN they compose:
//! [conv 3x3 same -> relu -> maxpool 2x2/2] x4 -> flatten -> dense -> relu
//! -> dense -> softmax.
//!
//! Convolution layers run cross-correlation (learned filters make the flip
//! immaterial) through an im2col patch matrix and a GEMM; the naive
//! sliding-window path in `tensor` doubles as the oracle in tests.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{maxpool2d, pool_output_shape, ShapeSpec, Tensor};

pub const XENT_CLIP: f64 = 1e-12;

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Unroll f x f patches of an h x w x c tensor (zero padding) into a
/// row-major [out_h*out_w, f*f*c] matrix. Column order (ki, kj, ci) matches
/// the [f, f, c_in, c_out] weight layout.
fn im2col(x: &Tensor, f: usize, stride: usize, pad: usize) -> (Vec<f64>, usize, usize) {
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let out_h = (h + 2 * pad - f) / stride + 1;
    let out_w = (w + 2 * pad - f) / stride + 1;
    let patch = f * f * c;
    let mut cols = vec![0.0; out_h * out_w * patch];
    let data = x.data();
    for oi in 0..out_h {
        for oj in 0..out_w {
            let row = (oi * out_w + oj) * patch;
            let mut col = 0usize;
            for ki in 0..f {
                let ii = (oi * stride + ki) as isize - pad as isize;
                for kj in 0..f {
                    let jj = (oj * stride + kj) as isize - pad as isize;
                    if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                        let src = ((ii as usize * w) + jj as usize) * c;
                        cols[row + col..row + col + c].copy_from_slice(&data[src..src + c]);
                    }
                    col += c;
                }
            }
        }
    }
    (cols, out_h, out_w)
}

/// Scatter-add of an im2col gradient back onto the input grid.
fn col2im(
    grad_cols: &[f64],
    h: usize,
    w: usize,
    c: usize,
    f: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f64> {
    let patch = f * f * c;
    let mut grad_x = vec![0.0; h * w * c];
    for oi in 0..out_h {
        for oj in 0..out_w {
            let row = (oi * out_w + oj) * patch;
            let mut col = 0usize;
            for ki in 0..f {
                let ii = (oi * stride + ki) as isize - pad as isize;
                for kj in 0..f {
                    let jj = (oj * stride + kj) as isize - pad as isize;
                    if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                        let dst = ((ii as usize * w) + jj as usize) * c;
                        for ci in 0..c {
                            grad_x[dst + ci] += grad_cols[row + col + ci];
                        }
                    }
                    col += c;
                }
            }
        }
    }
    grad_x
}

/// 3x3 same-padding convolution layer; weights [f, f, c_in, c_out].
#[derive(Debug, Clone)]
pub struct ConvLayer {
    pub weights: Tensor,
    pub bias: Tensor,
    pub padding: usize,
    pub stride: usize,
}

impl ConvLayer {
    pub fn f(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn c_in(&self) -> usize {
        self.weights.shape()[2]
    }

    pub fn c_out(&self) -> usize {
        self.weights.shape()[3]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let shape = x.shape();
        if shape.len() != 3 || shape[2] != self.c_in() {
            return Err(Error::Shape(format!(
                "conv expects [h, w, {}], got {shape:?}",
                self.c_in()
            )));
        }
        let f = self.f();
        let c_out = self.c_out();
        let (cols, out_h, out_w) = im2col(x, f, self.stride, self.padding);
        let patch = f * f * self.c_in();
        let mut out = vec![0.0; out_h * out_w * c_out];
        gemm(
            out_h * out_w,
            patch,
            c_out,
            &cols,
            patch as isize,
            1,
            self.weights.data(),
            c_out as isize,
            1,
            &mut out,
        );
        let bias = self.bias.data();
        for pos in 0..out_h * out_w {
            for o in 0..c_out {
                out[pos * c_out + o] += bias[o];
            }
        }
        Tensor::new(vec![out_h, out_w, c_out], out)
    }

    /// Gradients of a scalar loss w.r.t. input, weights, and bias, given
    /// the upstream gradient and the cached forward input.
    pub fn backward(&self, grad_out: &Tensor, x: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let (h, w, c_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let f = self.f();
        let c_out = self.c_out();
        let (cols, out_h, out_w) = im2col(x, f, self.stride, self.padding);
        if grad_out.shape() != [out_h, out_w, c_out] {
            return Err(Error::Shape(format!(
                "conv backward: grad shape {:?} != forward output [{out_h}, {out_w}, {c_out}]",
                grad_out.shape()
            )));
        }
        let patch = f * f * c_in;
        let m = out_h * out_w;
        let go = grad_out.data();

        let mut grad_b = vec![0.0; c_out];
        for pos in 0..m {
            for o in 0..c_out {
                grad_b[o] += go[pos * c_out + o];
            }
        }

        // grad_W [patch, c_out] = cols^T [patch, m] x grad_out [m, c_out]
        let mut grad_w = vec![0.0; patch * c_out];
        gemm(
            patch,
            m,
            c_out,
            &cols,
            1,
            patch as isize,
            go,
            c_out as isize,
            1,
            &mut grad_w,
        );

        // grad_cols [m, patch] = grad_out [m, c_out] x W^T [c_out, patch]
        let mut grad_cols = vec![0.0; m * patch];
        gemm(
            m,
            c_out,
            patch,
            go,
            c_out as isize,
            1,
            self.weights.data(),
            1,
            c_out as isize,
            &mut grad_cols,
        );
        let grad_x = col2im(&grad_cols, h, w, c_in, f, self.stride, self.padding, out_h, out_w);

        Ok((
            Tensor::new(vec![h, w, c_in], grad_x)?,
            Tensor::new(vec![f, f, c_in, c_out], grad_w)?,
            Tensor::new(vec![c_out], grad_b)?,
        ))
    }
}

/// Fully connected layer; weights [n_in, n_out].
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn n_in(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_out(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (n_in, n_out) = (self.n_in(), self.n_out());
        if x.len() != n_in {
            return Err(Error::Shape(format!(
                "dense expects {n_in} inputs, got {}",
                x.len()
            )));
        }
        let mut y = vec![0.0; n_out];
        gemm(1, n_in, n_out, x, n_in as isize, 1, self.weights.data(), n_out as isize, 1, &mut y);
        for (yo, b) in y.iter_mut().zip(self.bias.data()) {
            *yo += b;
        }
        Ok(y)
    }

    pub fn backward(&self, grad_out: &[f64], x: &[f64]) -> Result<(Vec<f64>, Tensor, Tensor)> {
        let (n_in, n_out) = (self.n_in(), self.n_out());
        if grad_out.len() != n_out || x.len() != n_in {
            return Err(Error::Shape("dense backward: length mismatch".into()));
        }
        let mut grad_w = vec![0.0; n_in * n_out];
        for i in 0..n_in {
            let xi = x[i];
            if xi != 0.0 {
                let row = &mut grad_w[i * n_out..(i + 1) * n_out];
                for (g, go) in row.iter_mut().zip(grad_out) {
                    *g = xi * go;
                }
            }
        }
        let mut grad_x = vec![0.0; n_in];
        // grad_x = W x grad_out
        gemm(
            n_in,
            n_out,
            1,
            self.weights.data(),
            n_out as isize,
            1,
            grad_out,
            1,
            1,
            &mut grad_x,
        );
        Ok((
            grad_x,
            Tensor::new(vec![n_in, n_out], grad_w)?,
            Tensor::new(vec![n_out], grad_out.to_vec())?,
        ))
    }
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    y
}

/// Gradient at exactly 0 is defined as 0.
pub fn relu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor> {
    if grad_out.shape() != x.shape() {
        return Err(Error::Shape("relu backward: shape mismatch".into()));
    }
    let mut g = grad_out.clone();
    for (gv, xv) in g.data_mut().iter_mut().zip(x.data()) {
        if *xv <= 0.0 {
            *gv = 0.0;
        }
    }
    Ok(g)
}

pub fn maxpool_forward(x: &Tensor, f: usize, s: usize) -> Result<(Tensor, Vec<usize>)> {
    maxpool2d(x, f, s)
}

/// Route each upstream gradient to the argmax input position. Overlapping
/// windows accumulate (cannot happen with f = s).
pub fn maxpool_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::State(format!(
            "stale argmax: {} entries for {} gradient cells",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut grad_x = Tensor::zeros(input_shape.to_vec());
    let n = grad_x.len();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        if idx >= n {
            return Err(Error::State("argmax index out of range".into()));
        }
        grad_x.data_mut()[idx] += g;
    }
    Ok(grad_x)
}

/// Max-shifted softmax plus clipped categorical cross-entropy.
pub fn softmax_xent_forward(logits: &[f64], one_hot: &[f64]) -> Result<(Vec<f64>, f64)> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|&e| e / sum).collect();
    let loss = -probs
        .iter()
        .zip(one_hot)
        .map(|(&p, &y)| y * (p + XENT_CLIP).ln())
        .sum::<f64>();
    Ok((probs, loss))
}

pub fn softmax_xent_backward(probs: &[f64], one_hot: &[f64]) -> Vec<f64> {
    probs.iter().zip(one_hot).map(|(&p, &y)| p - y).collect()
}

/// Architecture hyperparameters. `scale_divisor` shrinks every filter count
/// and the dense width for desk-scale runs without changing the structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub conv_filters: [usize; 4],
    pub kernel: usize,
    pub pool_f: usize,
    pub pool_s: usize,
    pub dense_units: usize,
    pub classes: usize,
    pub input_shape: (usize, usize, usize),
    pub scale_divisor: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            conv_filters: [128, 256, 512, 1024],
            kernel: 3,
            pool_f: 2,
            pool_s: 2,
            dense_units: 512,
            classes: 4,
            input_shape: (500, 18, 1),
            scale_divisor: 1,
        }
    }
}

impl ModelConfig {
    pub fn with_scale_divisor(divisor: usize) -> Self {
        ModelConfig {
            scale_divisor: divisor,
            ..Default::default()
        }
    }

    pub fn scaled_filters(&self) -> Result<[usize; 4]> {
        let mut out = [0usize; 4];
        for (o, &f) in out.iter_mut().zip(&self.conv_filters) {
            *o = f / self.scale_divisor;
            if *o < 1 {
                return Err(Error::Config(format!(
                    "scale_divisor {} reduces a filter count of {f} below 1",
                    self.scale_divisor
                )));
            }
        }
        Ok(out)
    }

    pub fn scaled_dense(&self) -> Result<usize> {
        let d = self.dense_units / self.scale_divisor;
        if d < 1 {
            return Err(Error::Config(format!(
                "scale_divisor {} reduces the dense width below 1",
                self.scale_divisor
            )));
        }
        Ok(d)
    }

    /// Spatial dimensions after each of the four pooling stages.
    pub fn pool_chain(&self) -> Result<Vec<(usize, usize)>> {
        let (mut h, mut w, _) = self.input_shape;
        let mut chain = Vec::with_capacity(4);
        for _ in 0..4 {
            let (oh, ow, _) = pool_output_shape(ShapeSpec {
                n_h: h,
                n_w: w,
                n_c: 1,
                f: self.pool_f,
                s: self.pool_s,
                p: 0,
            })?;
            h = oh;
            w = ow;
            chain.push((h, w));
        }
        Ok(chain)
    }

    pub fn flattened_len(&self) -> Result<usize> {
        let chain = self.pool_chain()?;
        let (h, w) = chain[3];
        Ok(h * w * self.scaled_filters()?[3])
    }
}

fn he_normal(rng: &mut ChaCha8Rng, shape: Vec<usize>, fan_in: usize) -> Tensor {
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    // Box-Muller on uniform draws from the seeded stream
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        data.push(r * theta.cos() * std);
        if data.len() < n {
            data.push(r * theta.sin() * std);
        }
    }
    Tensor::new(shape, data).unwrap()
}

#[derive(Debug, Clone, Default)]
struct ForwardCache {
    conv_inputs: Vec<Tensor>,
    conv_z: Vec<Tensor>,
    pool_in_shapes: Vec<Vec<usize>>,
    pool_argmax: Vec<Vec<usize>>,
    flat_shape: Vec<usize>,
    d1_in: Vec<f64>,
    d1_z: Vec<f64>,
    d1_a: Vec<f64>,
    probs: Vec<f64>,
}

/// The instantiated layer stack with its forward-activation cache.
#[derive(Debug, Clone)]
pub struct Network {
    pub config: ModelConfig,
    pub seed: u64,
    pub convs: Vec<ConvLayer>,
    pub dense_hidden: DenseLayer,
    pub dense_out: DenseLayer,
    cache: Option<ForwardCache>,
}

/// One gradient tensor per parameter tensor, in `Network::params` order.
#[derive(Debug, Clone)]
pub struct NetworkGrads {
    pub tensors: Vec<Tensor>,
}

impl NetworkGrads {
    pub fn zeros_like(net: &Network) -> Self {
        NetworkGrads {
            tensors: net
                .params()
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
    }

    pub fn add_assign(&mut self, other: &NetworkGrads) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (av, bv) in a.data_mut().iter_mut().zip(b.data()) {
                *av += bv;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }
}

impl Network {
    /// Seeded He-normal initialization, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Network> {
        let filters = config.scaled_filters()?;
        let dense_units = config.scaled_dense()?;
        let flat = config.flattened_len()?;
        let f = config.kernel;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::with_capacity(4);
        let mut c_in = config.input_shape.2;
        for &c_out in &filters {
            let fan_in = f * f * c_in;
            convs.push(ConvLayer {
                weights: he_normal(&mut rng, vec![f, f, c_in, c_out], fan_in),
                bias: Tensor::zeros(vec![c_out]),
                padding: (f - 1) / 2,
                stride: 1,
            });
            c_in = c_out;
        }
        let dense_hidden = DenseLayer {
            weights: he_normal(&mut rng, vec![flat, dense_units], flat),
            bias: Tensor::zeros(vec![dense_units]),
        };
        let dense_out = DenseLayer {
            weights: he_normal(&mut rng, vec![dense_units, config.classes], dense_units),
            bias: Tensor::zeros(vec![config.classes]),
        };
        Ok(Network {
            config,
            seed,
            convs,
            dense_hidden,
            dense_out,
            cache: None,
        })
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::with_capacity(self.convs.len() * 2 + 4);
        for c in &self.convs {
            out.push(&c.weights);
            out.push(&c.bias);
        }
        out.push(&self.dense_hidden.weights);
        out.push(&self.dense_hidden.bias);
        out.push(&self.dense_out.weights);
        out.push(&self.dense_out.bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::with_capacity(self.convs.len() * 2 + 4);
        for c in &mut self.convs {
            out.push(&mut c.weights);
            out.push(&mut c.bias);
        }
        out.push(&mut self.dense_hidden.weights);
        out.push(&mut self.dense_hidden.bias);
        out.push(&mut self.dense_out.weights);
        out.push(&mut self.dense_out.bias);
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.convs.len() {
            out.push(format!("conv{}.weights", i + 1));
            out.push(format!("conv{}.bias", i + 1));
        }
        out.push("dense_hidden.weights".into());
        out.push("dense_hidden.bias".into());
        out.push("dense_out.weights".into());
        out.push("dense_out.bias".into());
        out
    }

    /// Forward pass over one h x w x 1 window; caches activations for
    /// `backward`. Returns class probabilities.
    pub fn forward(&mut self, x: &Tensor) -> Result<Vec<f64>> {
        let x = if x.rank() == 2 {
            x.clone().reshape(vec![x.shape()[0], x.shape()[1], 1])?
        } else {
            x.clone()
        };
        let mut cache = ForwardCache::default();
        let mut cur = x;
        for (i, conv) in self.convs.iter().enumerate() {
            cache.conv_inputs.push(cur.clone());
            let z = conv.forward(&cur)?;
            let a = relu_forward(&z);
            cache.conv_z.push(z);
            cache.pool_in_shapes.push(a.shape().to_vec());
            let (pooled, argmax) = maxpool_forward(&a, self.config.pool_f, self.config.pool_s)?;
            cache.pool_argmax.push(argmax);
            cur = pooled;
            let _ = i;
        }
        cache.flat_shape = cur.shape().to_vec();
        cache.d1_in = cur.into_data();
        cache.d1_z = self.dense_hidden.forward(&cache.d1_in)?;
        cache.d1_a = cache.d1_z.iter().map(|&v| v.max(0.0)).collect();
        let logits = self.dense_out.forward(&cache.d1_a)?;
        let uniform = vec![0.0; self.config.classes];
        let (probs, _) = softmax_xent_forward(&logits, &uniform)?;
        cache.probs = probs.clone();
        self.cache = Some(cache);
        Ok(probs)
    }

    /// Loss of the cached forward pass against a one-hot target.
    pub fn loss(&self, one_hot: &[f64]) -> Result<f64> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("loss requires a forward pass".into()))?;
        Ok(cross_entropy(&cache.probs, one_hot))
    }

    /// Backward pass from a one-hot target through the cached activations.
    pub fn backward(&mut self, one_hot: &[f64]) -> Result<NetworkGrads> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward requires a cached forward pass".into()))?;
        let grad_logits = softmax_xent_backward(&cache.probs, one_hot);
        let (grad_d1a, g_w_out, g_b_out) = self.dense_out.backward(&grad_logits, &cache.d1_a)?;
        let grad_d1z: Vec<f64> = grad_d1a
            .iter()
            .zip(&cache.d1_z)
            .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
            .collect();
        let (grad_flat, g_w_hid, g_b_hid) = self.dense_hidden.backward(&grad_d1z, &cache.d1_in)?;
        let mut grad = Tensor::new(cache.flat_shape.clone(), grad_flat)?;

        let mut conv_w_grads = vec![None; self.convs.len()];
        let mut conv_b_grads = vec![None; self.convs.len()];
        for i in (0..self.convs.len()).rev() {
            let grad_relu_out =
                maxpool_backward(&grad, &cache.pool_argmax[i], &cache.pool_in_shapes[i])?;
            let grad_z = relu_backward(&grad_relu_out, &cache.conv_z[i])?;
            let (grad_x, g_w, g_b) = self.convs[i].backward(&grad_z, &cache.conv_inputs[i])?;
            conv_w_grads[i] = Some(g_w);
            conv_b_grads[i] = Some(g_b);
            grad = grad_x;
        }

        let mut tensors = Vec::with_capacity(self.convs.len() * 2 + 4);
        for (w, b) in conv_w_grads.into_iter().zip(conv_b_grads) {
            tensors.push(w.unwrap());
            tensors.push(b.unwrap());
        }
        tensors.push(g_w_hid);
        tensors.push(g_b_hid);
        tensors.push(g_w_out);
        tensors.push(g_b_out);
        Ok(NetworkGrads { tensors })
    }
}

pub fn cross_entropy(probs: &[f64], one_hot: &[f64]) -> f64 {
    -probs
        .iter()
        .zip(one_hot)
        .map(|(&p, &y)| y * (p + XENT_CLIP).ln())
        .sum::<f64>()
}

// --- checkpoint file -------------------------------------------------------
//
// Layout: 8-byte magic "GRFWGT\0\0", version byte 0x01, u64 seed, config
// (4 x u32 filters, u32 kernel, u32 pool_f, u32 pool_s, u32 dense, u32
// classes, 3 x u32 input shape, u32 scale_divisor), u32 tensor count, then
// per tensor: u8 rank, rank x u32 dims, f64 little-endian data.

const CHECKPOINT_MAGIC: &[u8; 8] = b"GRFWGT\0\0";
const CHECKPOINT_VERSION: u8 = 1;

pub fn write_checkpoint(net: &Network, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.push(CHECKPOINT_VERSION);
    buf.extend_from_slice(&net.seed.to_le_bytes());
    let c = &net.config;
    for &f in &c.conv_filters {
        buf.extend_from_slice(&(f as u32).to_le_bytes());
    }
    for v in [
        c.kernel,
        c.pool_f,
        c.pool_s,
        c.dense_units,
        c.classes,
        c.input_shape.0,
        c.input_shape.1,
        c.input_shape.2,
        c.scale_divisor,
    ] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let params = net.params();
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for t in params {
        buf.push(t.rank() as u8);
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Network> {
    let buf = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > buf.len() {
            return Err(Error::Data(format!("{name}: truncated checkpoint")));
        }
        let s = &buf[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 8)? != CHECKPOINT_MAGIC {
        return Err(Error::Data(format!("{name}: not a checkpoint (bad magic)")));
    }
    let version = take(&mut pos, 1)?[0];
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "{name}: unsupported checkpoint version {version}"
        )));
    }
    let seed = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let mut u32s = Vec::with_capacity(13);
    for _ in 0..13 {
        u32s.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
    }
    let config = ModelConfig {
        conv_filters: [u32s[0], u32s[1], u32s[2], u32s[3]],
        kernel: u32s[4],
        pool_f: u32s[5],
        pool_s: u32s[6],
        dense_units: u32s[7],
        classes: u32s[8],
        input_shape: (u32s[9], u32s[10], u32s[11]),
        scale_divisor: u32s[12],
    };
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = take(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
        }
        let n: usize = shape.iter().product();
        let raw = take(&mut pos, n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor::new(shape, data)?);
    }
    let mut net = Network::init(config, seed)?;
    let slots = net.params_mut();
    if slots.len() != tensors.len() {
        return Err(Error::Data(format!(
            "{name}: checkpoint holds {} tensors, model expects {}",
            tensors.len(),
            slots.len()
        )));
    }
    for (slot, t) in slots.into_iter().zip(tensors) {
        if slot.shape() != t.shape() {
            return Err(Error::Data(format!(
                "{name}: tensor shape {:?} does not match model {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t;
    }
    Ok(net)
}
