//! SGD with momentum and decoupled weight decay, plus learning-rate schedules.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::params::ParamSet;

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// Multiply by `factor` after each milestone epoch.
    Piecewise {
        milestones: Vec<usize>,
        factor: f64,
    },
    /// Half-cosine from the initial rate down to `lr_min` at the last epoch.
    Cosine {
        lr_min: f64,
    },
    Constant,
}

/// Learning rate for the 1-based `epoch` of a `total`-epoch run.
///
/// Piecewise: epochs strictly after a milestone use the decayed rate, so
/// milestones `[10, 15]` give `lr0` for epochs 1–10, `lr0·f` for 11–15 and
/// `lr0·f²` afterwards.
pub fn lr_at(schedule: &Schedule, lr0: f64, epoch: usize, total: usize) -> f64 {
    match schedule {
        Schedule::Piecewise { milestones, factor } => {
            let passed = milestones.iter().filter(|&&m| epoch > m).count();
            lr0 * libm::pow(*factor, passed as f64)
        }
        Schedule::Cosine { lr_min } => {
            if total <= 1 {
                return lr0;
            }
            let t = (epoch.clamp(1, total) - 1) as f64 / (total - 1) as f64;
            lr_min + 0.5 * (lr0 - lr_min) * (1.0 + libm::cos(core::f64::consts::PI * t))
        }
        Schedule::Constant => lr0,
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schedule::Piecewise { factor, .. } if !(*factor > 0.0 && *factor <= 1.0) => {
                bail!(Validation, "decay factor must be in (0,1]")
            }
            Schedule::Cosine { lr_min } if !(*lr_min >= 0.0) => bail!(Validation, "lr_min must be ≥ 0"),
            _ => Ok(()),
        }
    }

    /// First epoch whose rate differs from the initial one, if any.
    pub fn first_decay_epoch(&self) -> Option<usize> {
        match self {
            Schedule::Piecewise { milestones, .. } => milestones.iter().min().map(|m| m + 1),
            _ => None,
        }
    }
}

/// Heavy-ball SGD: `v ← μ·v + g`, `w ← w − lr·v`, then `w ← (1 − lr·wd)·w`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Self { momentum, weight_decay, velocity: Vec::new() }
    }

    /// Applies one step using the gradients stored in `params`.
    pub fn step(&mut self, params: &mut ParamSet, lr: f64) {
        if self.velocity.len() != params.numel() {
            self.velocity = alloc::vec![0.0; params.numel()];
        }
        let shrink = 1.0 - lr * self.weight_decay;
        let mut off = 0;
        for p in params.iter_mut() {
            let n = p.value.len();
            let vel = &mut self.velocity[off..off + n];
            for ((w, &g), v) in p.value.as_mut_slice().iter_mut().zip(p.grad.as_slice()).zip(vel) {
                *v = self.momentum * *v + g;
                *w -= lr * *v;
                *w *= shrink;
            }
            off += n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use alloc::vec;

    #[test]
    fn piecewise_and_cosine() {
        let pw = Schedule::Piecewise { milestones: vec![10, 15], factor: 0.1 };
        assert_eq!(lr_at(&pw, 0.1, 1, 20), 0.1);
        assert_eq!(lr_at(&pw, 0.1, 10, 20), 0.1);
        assert!((lr_at(&pw, 0.1, 12, 20) - 0.01).abs() < 1e-15);
        assert!((lr_at(&pw, 0.1, 16, 20) - 0.001).abs() < 1e-15);
        let cos = Schedule::Cosine { lr_min: 0.0 };
        assert_eq!(lr_at(&cos, 0.1, 1, 20), 0.1);
        assert!(lr_at(&cos, 0.1, 20, 20).abs() < 1e-17);
        assert_eq!(pw.first_decay_epoch(), Some(11));
    }

    fn one_param(w: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.push("w", Tensor::new(vec![1], vec![w]).unwrap()).unwrap();
        ps
    }

    #[test]
    fn momentum_two_step_recursion() {
        // f(w) = a/2 · w², g = a·w.
        let (a, lr, mu, w0) = (3.0, 0.1, 0.9, 2.0);
        let mut ps = one_param(w0);
        let mut opt = Sgd::new(mu, 0.0);
        for _ in 0..2 {
            let w = ps.value(0).as_slice()[0];
            ps.set_grads(vec![Tensor::new(vec![1], vec![a * w]).unwrap()]).unwrap();
            opt.step(&mut ps, lr);
        }
        let v1 = a * w0;
        let w1 = w0 - lr * v1;
        let v2 = mu * v1 + a * w1;
        let w2 = w1 - lr * v2;
        assert!((ps.value(0).as_slice()[0] - w2).abs() < 1e-15);
    }

    #[test]
    fn decay_contracts_by_exact_factor() {
        let mut ps = one_param(0.0);
        ps.get_mut(0).value = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        ps.get_mut(0).grad = Tensor::zeros(&[3]);
        let mut opt = Sgd::new(0.9, 5e-4);
        let norm = |ps: &ParamSet| libm::sqrt(ps.flat_values().iter().map(|v| v * v).sum::<f64>());
        for _ in 0..5 {
            let before = norm(&ps);
            opt.step(&mut ps, 0.1);
            assert!((norm(&ps) / before - (1.0 - 0.1 * 5e-4)).abs() < 1e-14);
        }
    }
}
