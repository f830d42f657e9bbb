//! Calibration, confidence, information-in-weights and sharpness diagnostics.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::graph::GradMode;
use crate::mlp::Mlp;
use crate::tensor::{argmax, Tensor};

pub const DEFAULT_ECE_BINS: usize = 15;

/// Largest probability in each row.
pub fn confidence(probs: &Tensor) -> Vec<f64> {
    probs.iter_rows().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence of the bin (0 when empty).
    pub mean_conf: f64,
    /// Empirical accuracy of the bin (0 when empty).
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub ece: f64,
    pub bins: Vec<CalibrationBin>,
    /// `None` when no prediction is correct.
    pub mean_conf_correct: Option<f64>,
    /// `None` when every prediction is correct.
    pub mean_conf_incorrect: Option<f64>,
}

impl CalibrationReport {
    /// ECE rebuilt from the bin table alone.
    pub fn ece_from_bins(&self) -> f64 {
        let n: usize = self.bins.iter().map(|b| b.count).sum();
        if n == 0 {
            return 0.0;
        }
        self.bins.iter().map(|b| b.count as f64 / n as f64 * (b.acc - b.mean_conf).abs()).sum()
    }
}

/// Equal-width confidence-binned calibration error.
///
/// A confidence `c` lands in bin `min(⌊c·B⌋, B − 1)`; the predicted class is
/// the row argmax.
pub fn ece_binned(probs: &Tensor, labels: &[usize], bins: usize) -> Result<CalibrationReport> {
    if bins == 0 {
        bail!(Parameter, "need at least one bin");
    }
    if probs.rows() != labels.len() {
        bail!(Dimension, "{} probability rows for {} labels", probs.rows(), labels.len());
    }
    let mut count = alloc::vec![0usize; bins];
    let mut conf_sum = alloc::vec![0.0; bins];
    let mut hit_sum = alloc::vec![0usize; bins];
    let (mut cc, mut nc, mut ci, mut ni) = (0.0, 0usize, 0.0, 0usize);
    for (row, &y) in probs.iter_rows().zip(labels) {
        let pred = argmax(row);
        let c = row[pred];
        let b = ((c * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf_sum[b] += c;
        if pred == y {
            hit_sum[b] += 1;
            cc += c;
            nc += 1;
        } else {
            ci += c;
            ni += 1;
        }
    }
    let n = labels.len().max(1) as f64;
    let mut ece = 0.0;
    let table = (0..bins)
        .map(|b| {
            let (mean_conf, acc) =
                if count[b] > 0 { (conf_sum[b] / count[b] as f64, hit_sum[b] as f64 / count[b] as f64) } else { (0.0, 0.0) };
            ece += count[b] as f64 / n * (acc - mean_conf).abs();
            CalibrationBin { lo: b as f64 / bins as f64, hi: (b + 1) as f64 / bins as f64, count: count[b], mean_conf, acc }
        })
        .collect();
    Ok(CalibrationReport {
        ece,
        bins: table,
        mean_conf_correct: (nc > 0).then(|| cc / nc as f64),
        mean_conf_incorrect: (ni > 0).then(|| ci / ni as f64),
    })
}

/// Histogram over `[0,1]` of the probability each row puts on its label.
pub fn prediction_density(probs: &Tensor, labels: &[usize], bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        bail!(Parameter, "need at least one bin");
    }
    if probs.rows() != labels.len() {
        bail!(Dimension, "{} probability rows for {} labels", probs.rows(), labels.len());
    }
    let mut hist = alloc::vec![0usize; bins];
    for (row, &y) in probs.iter_rows().zip(labels) {
        let Some(&p) = row.get(y) else {
            bail!(Validation, "label {} out of range", y);
        };
        hist[((p * bins as f64) as usize).min(bins - 1)] += 1;
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IiwConfig {
    /// Prior standard deviation `σ_P`.
    pub prior_sd: f64,
    /// Snapshots kept for the variance estimate.
    pub window: usize,
    /// Lower bound on the posterior variance.
    pub var_floor: f64,
    /// Fixed posterior variance, bypassing the windowed estimate.
    pub posterior_var: Option<f64>,
}

impl Default for IiwConfig {
    fn default() -> Self {
        Self { prior_sd: 0.1, window: 5, var_floor: 1e-10, posterior_var: None }
    }
}

/// `KL(N(μ_q, v_q·I) ‖ N(μ_p, v_p·I))` in nats.
pub fn gaussian_kl_isotropic(mu_q: &[f64], mu_p: &[f64], var_q: f64, var_p: f64) -> Result<f64> {
    if mu_q.len() != mu_p.len() {
        bail!(Dimension, "means have {} and {} entries", mu_q.len(), mu_p.len());
    }
    if !(var_q > 0.0 && var_p > 0.0) {
        bail!(Parameter, "variances must be positive");
    }
    let d = mu_q.len() as f64;
    let sq: f64 = mu_q.iter().zip(mu_p).map(|(a, b)| (a - b) * (a - b)).sum();
    let kl = 0.5 * (d * (var_q / var_p - 1.0 + libm::log(var_p / var_q)) + sq / var_p);
    Ok(kl.max(0.0))
}

/// Mean over coordinates of the per-coordinate population variance.
pub fn window_variance(window: &[Vec<f64>]) -> Result<f64> {
    if window.len() < 2 {
        bail!(State, "variance window needs at least 2 snapshots, got {}", window.len());
    }
    let d = window[0].len();
    if window.iter().any(|w| w.len() != d) {
        bail!(Dimension, "snapshots differ in length");
    }
    if d == 0 {
        return Ok(0.0);
    }
    let m = window.len() as f64;
    let mut total = 0.0;
    for j in 0..d {
        let mean = window.iter().map(|w| w[j]).sum::<f64>() / m;
        total += window.iter().map(|w| (w[j] - mean) * (w[j] - mean)).sum::<f64>() / m;
    }
    Ok(total / d as f64)
}

/// Gaussian information-in-weights proxy.
///
/// The posterior is centred at the newest snapshot with the windowed
/// variance (floored); the prior is centred at `init` with variance `σ_P²`.
pub fn estimate_iiw(window: &[Vec<f64>], init: &[f64], cfg: &IiwConfig) -> Result<f64> {
    let var_q = match cfg.posterior_var {
        Some(v) => {
            if window.is_empty() {
                bail!(State, "no weight snapshots");
            }
            v
        }
        None => window_variance(window)?.max(cfg.var_floor),
    };
    let current = window.last().expect("non-empty window");
    gaussian_kl_isotropic(current, init, var_q, cfg.prior_sd * cfg.prior_sd)
}

/// Rolling buffer of flattened weight snapshots for [`estimate_iiw`].
#[derive(Debug, Clone)]
pub struct WeightTrace {
    pub config: IiwConfig,
    init: Vec<f64>,
    snapshots: VecDeque<Vec<f64>>,
}

impl WeightTrace {
    /// Starts the window with the initial weights.
    pub fn new(init: Vec<f64>, config: IiwConfig) -> Self {
        let mut snapshots = VecDeque::with_capacity(config.window.max(1));
        snapshots.push_back(init.clone());
        Self { config, init, snapshots }
    }

    pub fn push(&mut self, weights: Vec<f64>) {
        if self.snapshots.len() == self.config.window.max(1) {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(weights);
    }

    pub fn estimate(&self) -> Result<f64> {
        let w: Vec<Vec<f64>> = self.snapshots.iter().cloned().collect();
        estimate_iiw(&w, &self.init, &self.config)
    }
}

pub const HVP_STEP: f64 = 1e-4;

/// Hutchinson trace estimate `mean_v vᵀHv` over Rademacher probes `v`, with
/// `Hv ≈ (∇f(w + hv) − ∇f(w − hv)) / 2h`.
pub fn hessian_trace<F, R>(mut grad: F, w: &[f64], probes: usize, step: f64, rng: &mut R) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    R: Rng,
{
    if probes == 0 {
        bail!(Parameter, "need at least one probe");
    }
    if !(step > 0.0) {
        bail!(Parameter, "finite-difference step must be positive");
    }
    let d = w.len();
    let mut v = alloc::vec![0.0; d];
    let mut wp = alloc::vec![0.0; d];
    let mut wm = alloc::vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..probes {
        for j in 0..d {
            v[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            wp[j] = w[j] + step * v[j];
            wm[j] = w[j] - step * v[j];
        }
        let gp = grad(&wp)?;
        let gm = grad(&wm)?;
        if gp.len() != d || gm.len() != d {
            bail!(Dimension, "gradient has {} entries, expected {}", gp.len(), d);
        }
        total += (0..d).map(|j| v[j] * (gp[j] - gm[j])).sum::<f64>() / (2.0 * step);
    }
    Ok(total / probes as f64)
}

/// Hessian trace of the soft-target cross entropy of `model` on `(x, target)`
/// with respect to all weights.
pub fn model_hessian_trace<R: Rng>(model: &Mlp, x: &Tensor, target: &Tensor, probes: usize, rng: &mut R) -> Result<f64> {
    let w = model.params.flat_values();
    let mut probe = model.clone();
    hessian_trace(
        |wv| {
            probe.params.set_flat_values(wv)?;
            let (_, g) = probe.ce_loss_grad(x, target, GradMode::PARAMS)?;
            Ok(g.params.iter().flat_map(|t| t.as_slice().iter().copied()).collect())
        },
        &w,
        probes,
        HVP_STEP,
        rng,
    )
}
