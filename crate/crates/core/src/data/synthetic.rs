use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{bail, Result};
use crate::rng::rng_from;
use crate::tensor::Tensor;

/// Isotropic unit-variance Gaussian classes.
///
/// With `K ≤ dim` the class means sit on a regular simplex (scaled basis
/// vectors) so every pair of means is `separation` apart; with `K > dim` they
/// are spread on a circle in the first two coordinates with adjacent means
/// `separation` apart. All entries are then min-max rescaled, jointly, into
/// `[0,1]`, which keeps the geometry isotropic.
pub fn gen_gaussian_mixture(classes: usize, n_per_class: usize, dim: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || dim < 2 || n_per_class == 0 {
        bail!(Parameter, "need classes ≥ 2, dim ≥ 2 and n_per_class ≥ 1");
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        bail!(Parameter, "separation must be a finite nonnegative number");
    }
    let mut means = alloc::vec![0.0; classes * dim];
    if classes <= dim {
        let s = separation / core::f64::consts::SQRT_2;
        for k in 0..classes {
            means[k * dim + k] = s;
        }
    } else {
        let step = 2.0 * core::f64::consts::PI / classes as f64;
        let radius = separation / (2.0 * libm::sin(step / 2.0));
        for k in 0..classes {
            means[k * dim] = radius * libm::cos(step * k as f64);
            means[k * dim + 1] = radius * libm::sin(step * k as f64);
        }
    }

    let mut rng = rng_from(seed);
    let n = classes * n_per_class;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for k in 0..classes {
        for _ in 0..n_per_class {
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(means[k * dim + j] + z);
            }
            labels.push(k);
        }
    }
    min_max_in_place(&mut data);
    Dataset::new(Tensor::matrix(n, dim, data)?, labels, classes)
}

/// Two interleaved half circles with Gaussian jitter, labels 0 and 1.
pub fn gen_two_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        bail!(Parameter, "need at least 2 points");
    }
    if !(noise_sd >= 0.0) {
        bail!(Parameter, "noise_sd must be nonnegative");
    }
    let mut rng = rng_from(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let n_outer = n / 2;
    for i in 0..n {
        let (x, y, label) = if i < n_outer {
            let t = core::f64::consts::PI * rng.random::<f64>();
            (libm::cos(t), libm::sin(t), 0)
        } else {
            let t = core::f64::consts::PI * rng.random::<f64>();
            (1.0 - libm::cos(t), 0.5 - libm::sin(t), 1)
        };
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        data.push(x + noise_sd * dx);
        data.push(y + noise_sd * dy);
        labels.push(label);
    }
    min_max_in_place(&mut data);
    Dataset::new(Tensor::matrix(n, 2, data)?, labels, 2)
}

fn min_max_in_place(data: &mut [f64]) {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in data.iter_mut() {
        *v = if span > 0.0 { ((*v - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
    }
}
