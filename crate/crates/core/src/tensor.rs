//! Dense row-major `f64` arrays.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Dense row-major array of 64-bit reals.
///
/// Most of the crate works with rank-2 tensors (a batch of rows), but the
/// type itself carries an arbitrary shape so bias vectors and checkpointed
/// tensors share one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            bail!(Dimension, "shape {:?} has a zero dimension", shape);
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            bail!(Dimension, "shape {:?} needs {} values, got {}", shape, n, data.len());
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; n] }
    }

    /// Builds an `rows × cols` matrix from a flat buffer.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            bail!(Dimension, "no rows");
        }
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                bail!(Dimension, "ragged rows: {} vs {}", r.len(), cols);
            }
            data.extend_from_slice(r);
        }
        Self::matrix(rows.len(), cols, data)
    }

    /// One-hot rows for `labels` over `classes` columns.
    pub fn one_hot(labels: &[usize], classes: usize) -> Result<Self> {
        if labels.is_empty() || classes == 0 {
            bail!(Dimension, "no labels");
        }
        let mut t = Self::zeros(&[labels.len(), classes]);
        for (i, &y) in labels.iter().enumerate() {
            if y >= classes {
                bail!(Validation, "label {} out of range for {} classes", y, classes);
            }
            t.data[i * classes + y] = 1.0;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Row count of a rank-2 tensor (1 for vectors).
    pub fn rows(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[0]
        } else {
            1
        }
    }

    /// Column count of a rank-2 tensor (length for vectors).
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols().max(1))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let c = self.cols();
        self.data[i * c + j] = v;
    }

    /// Gathers the listed rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let c = self.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { shape: vec![idx.len(), c], data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            bail!(Dimension, "shape mismatch {:?} vs {:?}", self.shape, other.shape);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Index of the first maximal entry of each row.
    pub fn argmax_rows(&self) -> Vec<usize> {
        self.iter_rows().map(argmax).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Index of the first maximal entry.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// `out += x · w` for `x: n×k` (row-major), `w: k×m`, `out: n×m`.
///
/// Zero entries of `x` are skipped, which pays off after rectifiers.
pub(crate) fn matmul_acc(x: &[f64], w: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let xr = &x[i * k..(i + 1) * k];
        let or = &mut out[i * m..(i + 1) * m];
        for (kk, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wr = &w[kk * m..(kk + 1) * m];
            for (o, &wv) in or.iter_mut().zip(wr) {
                *o += xv * wv;
            }
        }
    }
}

/// `out = g · wᵀ` for `g: n×m`, `w: k×m`, `out: n×k`.
pub(crate) fn matmul_bt(g: &[f64], w: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let gr = &g[i * m..(i + 1) * m];
        let or = &mut out[i * k..(i + 1) * k];
        // Four outputs at a time; each sum still runs left to right.
        let mut kk = 0;
        while kk + 4 <= k {
            let (w0, w1, w2, w3) =
                (&w[kk * m..(kk + 1) * m], &w[(kk + 1) * m..(kk + 2) * m], &w[(kk + 2) * m..(kk + 3) * m], &w[(kk + 3) * m..(kk + 4) * m]);
            let mut s = [0.0f64; 4];
            for j in 0..m {
                let gv = gr[j];
                s[0] += gv * w0[j];
                s[1] += gv * w1[j];
                s[2] += gv * w2[j];
                s[3] += gv * w3[j];
            }
            or[kk..kk + 4].copy_from_slice(&s);
            kk += 4;
        }
        for (kk, o) in or.iter_mut().enumerate().skip(kk) {
            let wr = &w[kk * m..(kk + 1) * m];
            *o = gr.iter().zip(wr).map(|(a, b)| a * b).sum();
        }
    }
}

/// `out += xᵀ · g` for `x: n×k`, `g: n×m`, `out: k×m`.
pub(crate) fn matmul_at_acc(x: &[f64], g: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let xr = &x[i * k..(i + 1) * k];
        let gr = &g[i * m..(i + 1) * m];
        for (kk, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let or = &mut out[kk * m..(kk + 1) * m];
            for (o, &gv) in or.iter_mut().zip(gr) {
                *o += xv * gv;
            }
        }
    }
}
