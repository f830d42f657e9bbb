//! Label assignment: hard labels, uniform label smoothing, and self-guided
//! label refinement (SGLR).
//!
//! SGLR keeps one soft-label row per training example. Each time an example
//! is visited, the model's temperature-softened predictions on the clean and
//! adversarial input are interpolated,
//!
//! ```text
//! f̃ = λ · f(x) + (1 − λ) · f(x′)
//! ```
//!
//! folded into the example's running average,
//!
//! ```text
//! p̃ ← α · p̃ + (1 − α) · f̃
//! ```
//!
//! and the training target is `y = r · p̃ + (1 − r) · y_hard`.
//! The buffer is updated from detached probabilities; no gradient reaches it.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::loss::softmax_t;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Hard,
    UniformLs,
    Sglr,
}

/// How the soft-label buffer starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmaInit {
    /// `p̃₀ = y_hard`.
    Hard,
    /// `p̃₀ = 1/K`.
    Uniform,
    /// `p̃₀ = 0`, read through the bias correction `p̃ / (1 − α^t)` so the
    /// effective rows are distributions after the first visit.
    ZeroRenormalized,
}

/// Which logits and target the SGLR loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossForm {
    /// Composed target `r · p̃ + (1 − r) · y_hard` against adversarial logits.
    Composed,
    /// Raw buffer `p̃` against clean logits.
    Alg1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub strategy: Strategy,
    /// Smoothing level `r`.
    pub r: f64,
    /// EMA coefficient `α`.
    pub alpha: f64,
    /// Clean/adversarial interpolation `λ`.
    pub lambda: f64,
    pub temperature: f64,
    pub ema_init: EmaInit,
    pub loss_form: LossForm,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Hard,
            r: 0.0,
            alpha: 0.9,
            lambda: 0.5,
            temperature: 1.0,
            ema_init: EmaInit::Hard,
            loss_form: LossForm::Composed,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("alpha", self.alpha), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                bail!(Validation, "{} = {} must be in [0,1]", name, v);
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            bail!(Validation, "temperature must be positive");
        }
        if self.ema_init == EmaInit::ZeroRenormalized && self.alpha >= 1.0 {
            bail!(Validation, "zero-renormalized buffers need alpha < 1");
        }
        Ok(())
    }
}

/// `r/K · 1 + (1 − r) · y_hard`.
pub fn uniform_ls(y_hard: &Tensor, r: f64) -> Result<Tensor> {
    check_unit("r", r)?;
    let k = y_hard.cols() as f64;
    Ok(y_hard.map(|h| r / k + (1.0 - r) * h))
}

/// `r · probs_adv + (1 − r) · y_hard`.
pub fn self_refine(y_hard: &Tensor, probs_adv: &Tensor, r: f64) -> Result<Tensor> {
    check_unit("r", r)?;
    blend(probs_adv, y_hard, r)
}

/// `λ · probs_clean + (1 − λ) · probs_adv`.
pub fn blend_clean_adv(probs_clean: &Tensor, probs_adv: &Tensor, lambda: f64) -> Result<Tensor> {
    check_unit("lambda", lambda)?;
    blend(probs_clean, probs_adv, lambda)
}

/// `w · a + (1 − w) · b`, with the endpoints returned exactly.
fn blend(a: &Tensor, b: &Tensor, w: f64) -> Result<Tensor> {
    if w == 1.0 {
        a.ensure_same_shape(b)?;
        return Ok(a.clone());
    }
    if w == 0.0 {
        a.ensure_same_shape(b)?;
        return Ok(b.clone());
    }
    a.zip_map(b, |x, y| w * x + (1.0 - w) * y)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        bail!(Parameter, "{} = {} must be in [0,1]", name, v);
    }
    Ok(())
}

/// Per-example soft-label buffer plus the hyperparameters that drive it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    pub config: LabelConfig,
    classes: usize,
    buffer: Tensor,
    /// Updates applied to each row (used by the zero-init bias correction).
    visits: Vec<u32>,
}

impl LabelState {
    /// Buffer for examples with the given hard labels, indexed by id `0..N`.
    pub fn new(config: LabelConfig, hard_labels: &[usize], classes: usize) -> Result<Self> {
        config.validate()?;
        let buffer = match config.ema_init {
            EmaInit::Hard => Tensor::one_hot(hard_labels, classes)?,
            EmaInit::Uniform => Tensor::filled(&[hard_labels.len(), classes], 1.0 / classes as f64),
            EmaInit::ZeroRenormalized => {
                Tensor::one_hot(hard_labels, classes)?;
                Tensor::zeros(&[hard_labels.len(), classes])
            }
        };
        Ok(Self { config, classes, buffer, visits: alloc::vec![0; hard_labels.len()] })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.len()) {
            bail!(Validation, "example id {} out of range for {} buffer rows", bad, self.len());
        }
        Ok(())
    }

    /// Effective buffer row for example `id`.
    pub fn row(&self, id: usize) -> Vec<f64> {
        let raw = self.buffer.row(id);
        if self.config.ema_init == EmaInit::ZeroRenormalized {
            let t = self.visits[id];
            if t == 0 {
                return alloc::vec![1.0 / self.classes as f64; self.classes];
            }
            let correction = 1.0 - libm::pow(self.config.alpha, t as f64);
            return raw.iter().map(|v| v / correction).collect();
        }
        raw.to_vec()
    }

    /// Effective rows for `ids`.
    pub fn rows(&self, ids: &[usize]) -> Result<Tensor> {
        self.check_ids(ids)?;
        let rows: Vec<Vec<f64>> = ids.iter().map(|&i| self.row(i)).collect();
        Tensor::from_rows(&rows)
    }

    /// Snapshot of every effective row, in id order.
    pub fn snapshot(&self) -> Tensor {
        let ids: Vec<usize> = (0..self.len()).collect();
        self.rows(&ids).expect("ids in range")
    }

    /// `p̃[id] ← α · p̃[id] + (1 − α) · f̃[row]` for every listed id.
    pub fn ema_update(&mut self, ids: &[usize], f_tilde: &Tensor) -> Result<()> {
        self.check_ids(ids)?;
        if f_tilde.rows() != ids.len() || f_tilde.cols() != self.classes {
            bail!(Dimension, "f̃ shape {:?} does not match {} ids × {} classes", f_tilde.shape(), ids.len(), self.classes);
        }
        crate::loss::validate_simplex(f_tilde)?;
        let a = self.config.alpha;
        for (k, &id) in ids.iter().enumerate() {
            let src = f_tilde.row(k);
            let dst = self.buffer.row_mut(id);
            if a == 0.0 {
                dst.copy_from_slice(src);
            } else if a < 1.0 {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = a * *d + (1.0 - a) * s;
                }
            }
            self.visits[id] = self.visits[id].saturating_add(1);
        }
        Ok(())
    }

    /// `r · p̃[ids] + (1 − r) · y_hard`.
    pub fn compose_target(&self, ids: &[usize], y_hard: &Tensor) -> Result<Tensor> {
        let p = self.rows(ids)?;
        blend(&p, y_hard, self.config.r)
    }
}

/// Inputs available when assigning targets to one batch.
pub struct AssignContext<'a> {
    pub ids: &'a [usize],
    pub y_hard: &'a Tensor,
    /// Logits on clean inputs (needed by SGLR).
    pub logits_clean: Option<&'a Tensor>,
    /// Logits on adversarial inputs (needed by SGLR).
    pub logits_adv: Option<&'a Tensor>,
}

/// Training-target rows for one batch under the configured strategy.
///
/// For SGLR this also advances the visited buffer rows by one EMA step,
/// after which the target is composed from the updated rows. Under
/// [`LossForm::Alg1`] the raw updated buffer rows are returned instead.
pub fn assign(state: &mut LabelState, ctx: &AssignContext<'_>) -> Result<Tensor> {
    let cfg = state.config;
    match cfg.strategy {
        Strategy::Hard => Ok(ctx.y_hard.clone()),
        Strategy::UniformLs => uniform_ls(ctx.y_hard, cfg.r),
        Strategy::Sglr => {
            let (Some(zc), Some(za)) = (ctx.logits_clean, ctx.logits_adv) else {
                bail!(State, "SGLR needs clean and adversarial logits");
            };
            let pc = softmax_t(zc, cfg.temperature)?;
            let pa = softmax_t(za, cfg.temperature)?;
            let f_tilde = blend_clean_adv(&pc, &pa, cfg.lambda)?;
            state.ema_update(ctx.ids, &f_tilde)?;
            match cfg.loss_form {
                LossForm::Composed => state.compose_target(ctx.ids, ctx.y_hard),
                LossForm::Alg1 => state.rows(ctx.ids),
            }
        }
    }
}

/// Targets for a batch without touching the buffer (read-only diagnostics).
pub fn peek_targets(state: &LabelState, ids: &[usize], y_hard: &Tensor) -> Result<Tensor> {
    match state.config.strategy {
        Strategy::Hard => Ok(y_hard.clone()),
        Strategy::UniformLs => uniform_ls(y_hard, state.config.r),
        Strategy::Sglr => match state.config.loss_form {
            LossForm::Composed => state.compose_target(ids, y_hard),
            LossForm::Alg1 => state.rows(ids),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hot(ys: &[usize], k: usize) -> Tensor {
        Tensor::one_hot(ys, k).unwrap()
    }

    #[test]
    fn uniform_ls_cases() {
        let y = hot(&[3], 10);
        assert_eq!(uniform_ls(&y, 0.0).unwrap(), y);
        let u = uniform_ls(&y, 1.0).unwrap();
        assert!(u.as_slice().iter().all(|&v| (v - 0.1).abs() < 1e-15));
        let s = uniform_ls(&y, 0.2).unwrap();
        for (j, &v) in s.row(0).iter().enumerate() {
            let e = if j == 3 { 0.82 } else { 0.02 };
            assert!((v - e).abs() < 1e-15);
        }
        assert!(uniform_ls(&y, 1.5).is_err());
    }

    #[test]
    fn self_refine_cases() {
        let y = hot(&[0], 2);
        let p = Tensor::from_rows(&[[0.6, 0.4]]).unwrap();
        assert_eq!(self_refine(&y, &p, 0.0).unwrap(), y);
        assert_eq!(self_refine(&y, &y, 0.7).unwrap(), y);
        let out = self_refine(&y, &p, 0.5).unwrap();
        assert!((out.get(0, 0) - 0.8).abs() < 1e-15 && (out.get(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn blend_endpoints() {
        let a = Tensor::from_rows(&[[0.3, 0.7]]).unwrap();
        let b = Tensor::from_rows(&[[0.9, 0.1]]).unwrap();
        assert_eq!(blend_clean_adv(&a, &b, 1.0).unwrap(), a);
        assert_eq!(blend_clean_adv(&a, &b, 0.0).unwrap(), b);
    }

    #[test]
    fn ema_extremes_and_geometric_closed_form() {
        let cfg = LabelConfig { strategy: Strategy::Sglr, alpha: 1.0, ..Default::default() };
        let mut st = LabelState::new(cfg, &[0, 1], 3).unwrap();
        let f = Tensor::from_rows(&[[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]]).unwrap();
        let before = st.snapshot();
        st.ema_update(&[0, 1], &f).unwrap();
        assert_eq!(st.snapshot(), before);

        let mut st = LabelState::new(LabelConfig { alpha: 0.0, ..cfg }, &[0, 1], 3).unwrap();
        st.ema_update(&[1, 0], &f).unwrap();
        assert_eq!(st.row(1), f.row(0));
        assert_eq!(st.row(0), f.row(1));

        let mut st = LabelState::new(LabelConfig { alpha: 0.9, ..cfg }, &[2], 3).unwrap();
        let c = Tensor::from_rows(&[[0.5, 0.25, 0.25]]).unwrap();
        let p0 = [0.0, 0.0, 1.0];
        for t in 1..=25 {
            st.ema_update(&[0], &c).unwrap();
            let w = libm::pow(0.9, t as f64);
            for (j, &start) in p0.iter().enumerate() {
                let expect = w * start + (1.0 - w) * c.get(0, j);
                assert!((st.row(0)[j] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_init_is_bias_corrected() {
        let cfg = LabelConfig { strategy: Strategy::Sglr, alpha: 0.9, ema_init: EmaInit::ZeroRenormalized, ..Default::default() };
        let mut st = LabelState::new(cfg, &[0], 2).unwrap();
        let f = Tensor::from_rows(&[[0.3, 0.7]]).unwrap();
        st.ema_update(&[0], &f).unwrap();
        let r = st.row(0);
        assert!((r[0] - 0.3).abs() < 1e-12 && (r[1] - 0.7).abs() < 1e-12);
        assert!(LabelState::new(LabelConfig { alpha: 1.0, ..cfg }, &[0], 2).is_err());
    }

    #[test]
    fn sglr_with_zero_r_is_hard() {
        let cfg = LabelConfig { strategy: Strategy::Sglr, r: 0.0, ..Default::default() };
        let mut st = LabelState::new(cfg, &[0, 1, 2], 3).unwrap();
        let y = hot(&[2, 0], 3);
        let zc = Tensor::from_rows(&[[0.3, 1.0, -2.0], [0.0, 0.5, 0.1]]).unwrap();
        let za = Tensor::from_rows(&[[1.3, 0.0, -0.2], [2.0, -0.5, 0.1]]).unwrap();
        let ctx = AssignContext { ids: &[2, 0], y_hard: &y, logits_clean: Some(&zc), logits_adv: Some(&za) };
        assert_eq!(assign(&mut st, &ctx).unwrap(), y);
    }

    #[test]
    fn bad_ids_and_shapes() {
        let cfg = LabelConfig { strategy: Strategy::Sglr, ..Default::default() };
        let mut st = LabelState::new(cfg, &[0, 1], 2).unwrap();
        let f = Tensor::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!(st.ema_update(&[5], &f).is_err());
        assert!(st.ema_update(&[0, 1], &f).is_err());
        let bad = Tensor::from_rows(&[[0.9, 0.9]]).unwrap();
        assert!(st.ema_update(&[0], &bad).is_err());
        let y = hot(&[0], 2);
        let ctx = AssignContext { ids: &[0], y_hard: &y, logits_clean: None, logits_adv: None };
        assert!(assign(&mut st, &ctx).is_err());
    }
}
