//! Dense row-major f64 tensor plus the convolution and pooling arithmetic
//! the network layers are built from.
//!
//! `cross_correlate2d` is the straightforward sliding-window product-sum
//! (no kernel flip) used as the reference path; `convolve2d_eq1` is the
//! textbook discrete convolution with the flipped kernel. The two agree up
//! to a 180-degree kernel flip, which the tests pin down.

use crate::error::{Error, Result};

/// Dense multi-dimensional array of f64 in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!(
                "zero-sized dimension in shape {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} implies {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    /// 2-D tensor from nested rows. Rows must be equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let h = rows.len();
        let w = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != w) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Tensor::new(vec![h, w], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row-major flat index of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut flat = 0;
        for (i, &d) in idx.iter().zip(&self.shape) {
            debug_assert!(*i < d);
            flat = flat * d + i;
        }
        flat
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let flat = self.flat_index(idx);
        self.data[flat] = v;
    }

    /// Reshape without copying element order. Element count must match.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Parameters of the pooled-shape formula: input height/width/channels,
/// filter size, stride, padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeSpec {
    pub n_h: usize,
    pub n_w: usize,
    pub n_c: usize,
    pub f: usize,
    pub s: usize,
    pub p: usize,
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_h < 1 || self.n_w < 1 || self.n_c < 1 || self.f < 1 || self.s < 1 {
            return Err(Error::Shape(format!("non-positive dimension in {self:?}")));
        }
        if self.f > self.n_h + 2 * self.p || self.f > self.n_w + 2 * self.p {
            return Err(Error::Shape(format!(
                "filter {} does not fit padded input {}x{} (p={})",
                self.f, self.n_h, self.n_w, self.p
            )));
        }
        Ok(())
    }
}

/// Output dimensions of a pooling/convolution window sweep:
/// floor((n + 2p - f)/s) + 1 per spatial axis, channels unchanged.
pub fn pool_output_shape(spec: ShapeSpec) -> Result<(usize, usize, usize)> {
    spec.validate()?;
    let out_h = (spec.n_h + 2 * spec.p - spec.f) / spec.s + 1;
    let out_w = (spec.n_w + 2 * spec.p - spec.f) / spec.s + 1;
    if out_h < 1 || out_w < 1 {
        return Err(Error::Shape(format!("degenerate output for {spec:?}")));
    }
    Ok((out_h, out_w, spec.n_c))
}

fn require_2d(t: &Tensor, name: &str) -> Result<(usize, usize)> {
    match t.shape() {
        [h, w] => Ok((*h, *w)),
        other => Err(Error::Shape(format!(
            "{name} must be rank-2, got shape {other:?}"
        ))),
    }
}

/// True discrete convolution (flipped kernel):
/// S(i,j) = sum_m sum_n I(m,n) * K(i-m, j-n) over the zero-padded input.
pub fn convolve2d_eq1(input: &Tensor, kernel: &Tensor, padding: usize) -> Result<Tensor> {
    let (_, _) = require_2d(input, "input")?;
    let (_, _) = require_2d(kernel, "kernel")?;
    cross_correlate2d(input, &flip180(kernel)?, padding, 1)
}

/// 180-degree rotation of a 2-D kernel.
pub fn flip180(kernel: &Tensor) -> Result<Tensor> {
    let (kh, kw) = require_2d(kernel, "kernel")?;
    let mut out = Tensor::zeros(vec![kh, kw]);
    for i in 0..kh {
        for j in 0..kw {
            out.set(&[i, j], kernel.at(&[kh - 1 - i, kw - 1 - j]));
        }
    }
    Ok(out)
}

/// Sliding-window elementwise product-sum without kernel flip, zero padding.
pub fn cross_correlate2d(
    input: &Tensor,
    kernel: &Tensor,
    padding: usize,
    stride: usize,
) -> Result<Tensor> {
    let (h, w) = require_2d(input, "input")?;
    let (kh, kw) = require_2d(kernel, "kernel")?;
    if kh > h + 2 * padding || kw > w + 2 * padding {
        return Err(Error::Shape(format!(
            "kernel {kh}x{kw} does not fit padded input {h}x{w} (p={padding})"
        )));
    }
    if stride < 1 {
        return Err(Error::Shape("stride must be >= 1".into()));
    }
    let out_h = (h + 2 * padding - kh) / stride + 1;
    let out_w = (w + 2 * padding - kw) / stride + 1;
    let mut out = Tensor::zeros(vec![out_h, out_w]);
    for oi in 0..out_h {
        for oj in 0..out_w {
            let mut acc = 0.0;
            for ki in 0..kh {
                for kj in 0..kw {
                    let ii = (oi * stride + ki) as isize - padding as isize;
                    let jj = (oj * stride + kj) as isize - padding as isize;
                    if ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < w {
                        acc += input.at(&[ii as usize, jj as usize]) * kernel.at(&[ki, kj]);
                    }
                }
            }
            out.set(&[oi, oj], acc);
        }
    }
    Ok(out)
}

/// Max pooling over an h x w x c tensor. Returns the pooled tensor plus,
/// per output cell, the flat index of the winning input element.
/// Ties go to the lowest flat index so backward routing is deterministic.
pub fn maxpool2d(x: &Tensor, f: usize, s: usize) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = match x.shape() {
        [h, w, c] => (*h, *w, *c),
        other => {
            return Err(Error::Shape(format!(
                "maxpool input must be rank-3, got {other:?}"
            )))
        }
    };
    let (out_h, out_w, out_c) = pool_output_shape(ShapeSpec {
        n_h: h,
        n_w: w,
        n_c: c,
        f,
        s,
        p: 0,
    })?;
    let mut y = Tensor::zeros(vec![out_h, out_w, out_c]);
    let mut argmax = vec![0usize; out_h * out_w * out_c];
    for oi in 0..out_h {
        for oj in 0..out_w {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0usize;
                for ki in 0..f {
                    for kj in 0..f {
                        let ii = oi * s + ki;
                        let jj = oj * s + kj;
                        let flat = (ii * w + jj) * c + ch;
                        let v = x.data()[flat];
                        if v > best {
                            best = v;
                            best_idx = flat;
                        }
                    }
                }
                let out_flat = (oi * out_w + oj) * out_c + ch;
                y.data_mut()[out_flat] = best;
                argmax[out_flat] = best_idx;
            }
        }
    }
    Ok((y, argmax))
}

/// Flatten to rank-1, row-major order preserved.
pub fn flatten(x: &Tensor) -> Tensor {
    Tensor {
        shape: vec![x.len()],
        data: x.data.clone(),
    }
}
