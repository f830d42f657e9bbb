//! ℓ∞ adversaries: FGSM, PGD on a soft-target cross entropy, the KL-maximising
//! PGD used by TRADES, and black-box transfer evaluation.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{sequential_batches, Dataset};
use crate::error::{bail, Result};
use crate::graph::{GradMode, Graph};
use crate::mlp::{forward_graph, Mlp};
use crate::rng::{indexed_seed, rng_from};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    /// ℓ∞ radius in feature units.
    pub epsilon: f64,
    pub step_size: f64,
    pub iters: usize,
    pub random_start: bool,
    /// Clamp box for every feature.
    pub domain: (f64, f64),
}

impl AttackConfig {
    /// `iters`-step PGD with step `ε/4` on the unit box.
    pub fn pgd(epsilon: f64, iters: usize, random_start: bool) -> Self {
        Self { epsilon, step_size: epsilon / 4.0, iters, random_start, domain: (0.0, 1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            bail!(Validation, "epsilon must be finite and ≥ 0, got {}", self.epsilon);
        }
        if self.iters > 0 && self.epsilon > 0.0 && !(self.step_size > 0.0) {
            bail!(Validation, "step size must be positive when iters > 0");
        }
        if !(self.domain.0 < self.domain.1) {
            bail!(Validation, "empty clamp domain {:?}", self.domain);
        }
        Ok(())
    }
}

/// A scalar loss of an input batch together with its input gradient.
pub trait AttackObjective {
    fn loss_grad(&self, x: &Tensor) -> Result<(f64, Tensor)>;
}

/// Soft-target cross entropy of a model's logits.
pub struct CrossEntropyObjective<'a> {
    pub model: &'a Mlp,
    pub target: &'a Tensor,
}

impl AttackObjective for CrossEntropyObjective<'_> {
    fn loss_grad(&self, x: &Tensor) -> Result<(f64, Tensor)> {
        let (loss, g) = self.model.ce_loss_grad(x, self.target, GradMode::INPUT)?;
        Ok((loss, g.input.expect("input gradient requested")))
    }
}

/// `KL(f(x′) ‖ f(x))` with the clean distribution held fixed.
pub struct KlObjective<'a> {
    pub model: &'a Mlp,
    pub clean_logp: Tensor,
}

impl<'a> KlObjective<'a> {
    pub fn new(model: &'a Mlp, x: &Tensor) -> Result<Self> {
        let clean_logp = crate::loss::log_softmax_t(&model.logits(x)?, 1.0)?;
        Ok(Self { model, clean_logp })
    }
}

impl AttackObjective for KlObjective<'_> {
    fn loss_grad(&self, x: &Tensor) -> Result<(f64, Tensor)> {
        let mut g = Graph::new(&self.model.params, GradMode::INPUT);
        let xi = g.input(x.clone());
        let z = forward_graph(&mut g, &self.model.spec, xi)?;
        let lp = g.log_softmax(z, 1.0)?;
        let lq = g.constant(self.clean_logp.clone());
        let loss = g.kl(lp, lq)?;
        let grads = g.backward(loss)?;
        Ok((g.scalar(loss), grads.input.expect("input gradient requested")))
    }
}

/// Projects `x_adv` onto the ε-ball around `x` intersected with the domain box.
pub fn project(x_adv: &mut Tensor, x: &Tensor, cfg: &AttackConfig) {
    let (lo, hi) = cfg.domain;
    for (a, &o) in x_adv.as_mut_slice().iter_mut().zip(x.as_slice()) {
        let d = (*a - o).clamp(-cfg.epsilon, cfg.epsilon);
        *a = (o + d).clamp(lo, hi);
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Signed-gradient ascent with projection after every step.
///
/// Starts from a uniform point in the ε-ball when `random_start` is set.
pub fn pgd_ascent<O: AttackObjective, R: Rng>(objective: &O, x: &Tensor, cfg: &AttackConfig, rng: &mut R) -> Result<Tensor> {
    cfg.validate()?;
    let mut adv = x.clone();
    if cfg.epsilon == 0.0 {
        return Ok(adv);
    }
    if cfg.random_start {
        for v in adv.as_mut_slice() {
            *v += rng.random_range(-cfg.epsilon..=cfg.epsilon);
        }
        project(&mut adv, x, cfg);
    }
    for _ in 0..cfg.iters {
        let (_, g) = objective.loss_grad(&adv)?;
        for (a, &gv) in adv.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *a += cfg.step_size * sign(gv);
        }
        project(&mut adv, x, cfg);
    }
    Ok(adv)
}

/// Like [`pgd_ascent`], also returning the objective value before each step
/// and at the end.
pub fn pgd_trace<O: AttackObjective, R: Rng>(objective: &O, x: &Tensor, cfg: &AttackConfig, rng: &mut R) -> Result<(Tensor, Vec<f64>)> {
    let mut trace = Vec::with_capacity(cfg.iters + 1);
    let mut step = *cfg;
    step.iters = 1;
    step.random_start = false;
    let mut adv = if cfg.random_start {
        let mut s = *cfg;
        s.iters = 0;
        pgd_ascent(objective, x, &s, rng)?
    } else {
        x.clone()
    };
    for _ in 0..cfg.iters {
        let (loss, g) = objective.loss_grad(&adv)?;
        trace.push(loss);
        for (a, &gv) in adv.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *a += step.step_size * sign(gv);
        }
        project(&mut adv, x, cfg);
    }
    trace.push(objective.loss_grad(&adv)?.0);
    Ok((adv, trace))
}

/// `clamp(x + ε · sign(∇ₓ ℓ))`.
pub fn fgsm(model: &Mlp, x: &Tensor, target: &Tensor, cfg: &AttackConfig) -> Result<Tensor> {
    cfg.validate()?;
    let (_, g) = CrossEntropyObjective { model, target }.loss_grad(x)?;
    let mut adv = x.clone();
    for (a, &gv) in adv.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *a += cfg.epsilon * sign(gv);
    }
    project(&mut adv, x, cfg);
    Ok(adv)
}

/// PGD against soft target rows (hard labels are one-hot rows).
pub fn pgd<R: Rng>(model: &Mlp, x: &Tensor, target: &Tensor, cfg: &AttackConfig, rng: &mut R) -> Result<Tensor> {
    pgd_ascent(&CrossEntropyObjective { model, target }, x, cfg, rng)
}

/// PGD maximising `KL(f(x′) ‖ f(x))`.
///
/// The KL gradient vanishes at `x′ = x`, so without a random start the
/// search begins from `x + 0.001·N(0, I)` (projected).
pub fn pgd_kl<R: Rng>(model: &Mlp, x: &Tensor, cfg: &AttackConfig, rng: &mut R) -> Result<Tensor> {
    cfg.validate()?;
    let objective = KlObjective::new(model, x)?;
    if cfg.random_start || cfg.epsilon == 0.0 {
        return pgd_ascent(&objective, x, cfg, rng);
    }
    let mut start = x.clone();
    for v in start.as_mut_slice() {
        let z: f64 = StandardNormal.sample(rng);
        *v += 0.001 * z;
    }
    project(&mut start, x, cfg);
    let mut adv = start;
    for _ in 0..cfg.iters {
        let (_, g) = objective.loss_grad(&adv)?;
        for (a, &gv) in adv.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *a += cfg.step_size * sign(gv);
        }
        project(&mut adv, x, cfg);
    }
    Ok(adv)
}

/// Largest absolute coordinate difference.
pub fn linf_distance(a: &Tensor, b: &Tensor) -> f64 {
    a.max_abs_diff(b)
}

/// Robust accuracy of `target` on examples crafted from `source` gradients
/// only, against the hard labels of `ds`.
pub fn transfer_eval(source: &Mlp, target: &Mlp, ds: &Dataset, cfg: &AttackConfig, seed: u64) -> Result<f64> {
    if source.spec.input_dim != target.spec.input_dim || source.classes() != target.classes() {
        bail!(Dimension, "source and target models disagree on input or class count");
    }
    let mut correct = 0usize;
    for (b, batch) in sequential_batches(ds, 256).into_iter().enumerate() {
        let y = Tensor::one_hot(&batch.y, source.classes())?;
        let mut rng = rng_from(indexed_seed(seed, &[b as u64]));
        let adv = pgd(source, &batch.x, &y, cfg, &mut rng)?;
        let pred = target.predict(&adv)?;
        correct += pred.iter().zip(&batch.y).filter(|(p, y)| p == y).count();
    }
    Ok(correct as f64 / ds.len() as f64)
}
