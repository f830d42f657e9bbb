//! Softmax with temperature and the soft-target divergences built on it.
//!
//! These work on plain probability rows; the differentiable counterparts used
//! during training live in [`crate::graph`].

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::tensor::Tensor;
use crate::EPS_CLIP;

/// Row-sum tolerance for inputs that must be probability rows.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Clamped natural log used inside every entropy term.
#[inline]
pub fn clog(p: f64) -> f64 {
    libm::log(p.max(EPS_CLIP))
}

/// Rowwise `exp(z_i / T) / Σ_j exp(z_j / T)`.
pub fn softmax_t(z: &Tensor, temperature: f64) -> Result<Tensor> {
    check_temperature(temperature)?;
    let mut out = z.clone();
    for row in out.as_mut_slice().chunks_exact_mut(z.cols()) {
        softmax_row_in_place(row, temperature);
    }
    Ok(out)
}

pub fn log_softmax_t(z: &Tensor, temperature: f64) -> Result<Tensor> {
    check_temperature(temperature)?;
    let mut out = z.clone();
    for row in out.as_mut_slice().chunks_exact_mut(z.cols()) {
        log_softmax_row_in_place(row, temperature);
    }
    Ok(out)
}

pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        bail!(Parameter, "temperature must be positive, got {}", t);
    }
    Ok(())
}

pub(crate) fn softmax_row_in_place(row: &mut [f64], t: f64) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp((*v - m) / t);
        s += *v;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
}

pub(crate) fn log_softmax_row_in_place(row: &mut [f64], t: f64) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = row.iter().map(|&v| libm::exp((v - m) / t)).sum();
    let lse = libm::log(s);
    for v in row.iter_mut() {
        *v = (*v - m) / t - lse;
    }
}

/// Fails unless every row is nonnegative and sums to one within [`SIMPLEX_TOL`].
pub fn validate_simplex(p: &Tensor) -> Result<()> {
    if p.rank() != 2 {
        bail!(Dimension, "probability rows must be rank 2, got shape {:?}", p.shape());
    }
    for (i, row) in p.iter_rows().enumerate() {
        if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            bail!(Validation, "row {} has a negative or non-finite entry", i);
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            bail!(Validation, "row {} sums to {} (not a distribution)", i, s);
        }
    }
    Ok(())
}

fn validate_pair(a: &Tensor, b: &Tensor) -> Result<()> {
    a.ensure_same_shape(b)?;
    validate_simplex(a)?;
    validate_simplex(b)
}

/// Per-row cross entropy `H(q, p) = −Σ q log p` with `p` clamped at `EPS_CLIP`.
pub fn cross_entropy_rows(target: &Tensor, probs: &Tensor) -> Result<Vec<f64>> {
    validate_pair(target, probs)?;
    Ok(target.iter_rows().zip(probs.iter_rows()).map(|(q, p)| row_cross_entropy(q, p)).collect())
}

/// Mean soft-target cross entropy over rows.
pub fn cross_entropy_soft(target: &Tensor, probs: &Tensor) -> Result<f64> {
    Ok(mean(&cross_entropy_rows(target, probs)?))
}

/// Mean `KL(p‖q)` over rows, with `0·log 0 = 0`.
pub fn kl_div(p: &Tensor, q: &Tensor) -> Result<f64> {
    validate_pair(p, q)?;
    Ok(mean(&p.iter_rows().zip(q.iter_rows()).map(|(a, b)| row_kl(a, b)).collect::<Vec<_>>()))
}

/// Mean Shannon entropy of the rows.
pub fn mean_entropy(p: &Tensor) -> Result<f64> {
    validate_simplex(p)?;
    Ok(mean(&p.iter_rows().map(row_entropy).collect::<Vec<_>>()))
}

pub fn row_cross_entropy(q: &[f64], p: &[f64]) -> f64 {
    -q.iter().zip(p).filter(|(&qi, _)| qi != 0.0).map(|(&qi, &pi)| qi * clog(pi)).sum::<f64>()
}

pub fn row_entropy(p: &[f64]) -> f64 {
    row_cross_entropy(p, p)
}

pub fn row_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&pi, _)| pi != 0.0).map(|(&pi, &qi)| pi * (clog(pi) - clog(qi))).sum()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}
