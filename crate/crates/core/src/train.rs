//! Adversarial training loops with pluggable label assignment.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::attack::{pgd, pgd_kl, AttackConfig};
use crate::data::{batches, sequential_batches, Dataset};
use crate::error::{bail, Error, Result};
use crate::graph::{GradMode, Graph};
use crate::labels::{assign, AssignContext, LabelConfig, LabelState, LossForm, Strategy};
use crate::loss::softmax_t;
use crate::metrics::{ece_binned, CalibrationReport, IiwConfig, WeightTrace, DEFAULT_ECE_BINS};
use crate::mlp::{forward, forward_graph, Mlp, MlpSpec};
use crate::optim::{lr_at, Schedule, Sgd};
use crate::params::grad_norm;
use crate::rng::{indexed_seed, rng_from, sub_seed};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Cross entropy on PGD examples.
    PgdAt,
    /// `CE(f(x), y) + β·KL(f(x′) ‖ f(x))` with KL-maximising PGD.
    Trades { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    pub objective: Objective,
    pub attack: AttackConfig,
    pub labels: LabelConfig,
    pub iiw: IiwConfig,
    pub ece_bins: usize,
    /// Train on globally standardised inputs (see [`InputNorm`]).
    pub standardize: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 128,
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 5e-4,
            schedule: Schedule::Piecewise { milestones: alloc::vec![30, 45], factor: 0.1 },
            objective: Objective::PgdAt,
            attack: AttackConfig::pgd(0.1, 10, true),
            labels: LabelConfig::default(),
            iiw: IiwConfig::default(),
            ece_bins: DEFAULT_ECE_BINS,
            standardize: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            bail!(Validation, "epochs must be ≥ 1");
        }
        if self.batch_size == 0 {
            bail!(Validation, "batch size must be ≥ 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bail!(Validation, "learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            bail!(Validation, "momentum must be in [0,1)");
        }
        if !(self.weight_decay >= 0.0 && self.lr * self.weight_decay < 1.0) {
            bail!(Validation, "weight decay must be ≥ 0 with lr·wd < 1");
        }
        if let Objective::Trades { beta } = self.objective {
            if !(beta >= 0.0 && beta.is_finite()) {
                bail!(Validation, "TRADES beta must be ≥ 0");
            }
        }
        if self.ece_bins == 0 {
            bail!(Validation, "need at least one ECE bin");
        }
        if self.iiw.window < 2 {
            bail!(Validation, "IIW window must hold at least 2 snapshots");
        }
        self.schedule.validate()?;
        self.attack.validate()?;
        self.labels.validate()
    }

    /// The evaluation adversary: the training attack without a random start.
    pub fn eval_attack(&self) -> AttackConfig {
        AttackConfig { random_start: false, ..self.attack }
    }
}

/// Global affine input map `x̃ = (x − shift) / scale` used as a
/// preconditioner during training.
///
/// The network trains on `x̃` and the adversary works in the mapped box with
/// radius `ε / scale`; sign steps and box projections commute with the map,
/// so every crafted example is the image of one crafted in the original
/// domain. Weights are folded back into the first layer on the way out, so
/// callers only ever see plain networks on the original inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputNorm {
    pub shift: f64,
    pub scale: f64,
}

impl InputNorm {
    pub const IDENTITY: Self = Self { shift: 0.0, scale: 1.0 };

    /// Mean and standard deviation over every feature entry.
    pub fn fit(ds: &Dataset) -> Self {
        let v = ds.features.as_slice();
        if v.is_empty() {
            return Self::IDENTITY;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let sd = libm::sqrt(var);
        Self { shift: mean, scale: if sd > 0.0 { sd } else { 1.0 } }
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for v in out.features.as_mut_slice() {
            *v = (*v - self.shift) / self.scale;
        }
        out
    }

    pub fn attack(&self, cfg: &AttackConfig) -> AttackConfig {
        let (lo, hi) = cfg.domain;
        AttackConfig {
            epsilon: cfg.epsilon / self.scale,
            step_size: cfg.step_size / self.scale,
            domain: ((lo - self.shift) / self.scale, (hi - self.shift) / self.scale),
            ..*cfg
        }
    }

    /// Weights acting on `x` → equivalent weights acting on `x̃`.
    pub fn unfold(&self, model: &Mlp) -> Mlp {
        self.remap(model, self.scale, self.shift)
    }

    /// Weights acting on `x̃` → equivalent weights acting on `x`.
    pub fn fold(&self, model: &Mlp) -> Mlp {
        self.remap(model, 1.0 / self.scale, -self.shift / self.scale)
    }

    /// `W ← c·W`, `b ← b + d·colsum(W)` on the first layer.
    fn remap(&self, model: &Mlp, c: f64, d: f64) -> Mlp {
        let mut out = model.clone();
        if *self == Self::IDENTITY {
            return out;
        }
        let w = model.params.value(0);
        let (rows, cols) = (w.rows(), w.cols());
        let mut colsum = alloc::vec![0.0; cols];
        for i in 0..rows {
            for (s, &v) in colsum.iter_mut().zip(w.row(i)) {
                *s += v;
            }
        }
        for v in out.params.get_mut(0).value.as_mut_slice() {
            *v *= c;
        }
        for (b, s) in out.params.get_mut(1).value.as_mut_slice().iter_mut().zip(colsum) {
            *b += d * s;
        }
        out
    }
}

/// One row of the run history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Clean accuracy on the (possibly noisy) training labels after the epoch.
    pub train_clean_acc: f64,
    /// Accuracy on the adversarial examples crafted during the epoch.
    pub train_robust_acc: f64,
    pub test_clean_acc: f64,
    pub test_robust_acc: f64,
    /// Mean over batches of the training-loss gradient norm.
    pub grad_norm: f64,
    pub ece_clean: f64,
    pub ece_adv: f64,
    pub iiw_est: f64,
    pub mean_conf_correct: Option<f64>,
    pub mean_conf_incorrect: Option<f64>,
    pub mean_conf_correct_adv: Option<f64>,
    pub mean_conf_incorrect_adv: Option<f64>,
    /// Clean train accuracy on examples whose label was not corrupted.
    pub train_acc_untouched: Option<f64>,
    /// Clean train accuracy (against the noisy label) on corrupted examples.
    pub train_acc_corrupted: Option<f64>,
}

/// Per-epoch metric selectors for best/final reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TrainCleanAcc,
    TrainRobustAcc,
    TestCleanAcc,
    TestRobustAcc,
    GradNorm,
    EceClean,
    EceAdv,
    IiwEst,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::TrainCleanAcc,
        Metric::TrainRobustAcc,
        Metric::TestCleanAcc,
        Metric::TestRobustAcc,
        Metric::GradNorm,
        Metric::EceClean,
        Metric::EceAdv,
        Metric::IiwEst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TrainCleanAcc => "train_clean_acc",
            Metric::TrainRobustAcc => "train_robust_acc",
            Metric::TestCleanAcc => "test_clean_acc",
            Metric::TestRobustAcc => "test_robust_acc",
            Metric::GradNorm => "grad_norm",
            Metric::EceClean => "ece_clean",
            Metric::EceAdv => "ece_adv",
            Metric::IiwEst => "iiw_est",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn value(self, r: &EpochRecord) -> f64 {
        match self {
            Metric::TrainCleanAcc => r.train_clean_acc,
            Metric::TrainRobustAcc => r.train_robust_acc,
            Metric::TestCleanAcc => r.test_clean_acc,
            Metric::TestRobustAcc => r.test_robust_acc,
            Metric::GradNorm => r.grad_norm,
            Metric::EceClean => r.ece_clean,
            Metric::EceAdv => r.ece_adv,
            Metric::IiwEst => r.iiw_est,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub best: f64,
    pub best_epoch: usize,
    pub last: f64,
    /// `best − last`
    pub diff: f64,
}

/// Highest value of `metric` over the history (earliest epoch on ties), the
/// final value and their difference.
pub fn best_final_gap(history: &[EpochRecord], metric: Metric) -> Result<Gap> {
    let Some(last) = history.last() else {
        bail!(State, "empty history");
    };
    let mut best = &history[0];
    for r in history {
        if metric.value(r) > metric.value(best) {
            best = r;
        }
    }
    let (b, f) = (metric.value(best), metric.value(last));
    Ok(Gap { best: b, best_epoch: best.epoch, last: f, diff: b - f })
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights at the epoch with the highest test robust accuracy.
    pub best: Mlp,
    pub best_epoch: usize,
    pub final_model: Mlp,
    pub history: Vec<EpochRecord>,
    pub labels: LabelState,
}

/// A run that stopped early, with everything recorded up to that point.
#[derive(Debug, Clone)]
pub struct TrainFailure {
    pub error: Error,
    pub history: Vec<EpochRecord>,
}

impl From<Error> for TrainFailure {
    fn from(error: Error) -> Self {
        Self { error, history: Vec::new() }
    }
}

impl core::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} (after {} completed epochs)", self.error, self.history.len())
    }
}

/// `CE(f(x), y) + β·KL(f(x′) ‖ f(x))` and its parameter gradients.
pub fn trades_loss(model: &Mlp, x: &Tensor, x_adv: &Tensor, y: &Tensor, beta: f64) -> Result<(f64, Vec<Tensor>)> {
    let mut g = Graph::new(&model.params, GradMode::PARAMS);
    let xc = g.constant(x.clone());
    let xa = g.constant(x_adv.clone());
    let zc = forward_graph(&mut g, &model.spec, xc)?;
    let za = forward_graph(&mut g, &model.spec, xa)?;
    let lc = g.log_softmax(zc, 1.0)?;
    let la = g.log_softmax(za, 1.0)?;
    let ce = g.soft_ce(lc, y.clone())?;
    let kl = g.kl(la, lc)?;
    let kl = g.scale(kl, beta);
    let loss = g.add(ce, kl)?;
    let grads = g.backward(loss)?;
    Ok((g.scalar(loss), grads.params))
}

/// Clean and adversarial accuracy plus calibration of a model on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub clean_acc: f64,
    pub robust_acc: f64,
    pub clean: CalibrationReport,
    pub adv: CalibrationReport,
    pub probs_clean: Tensor,
    pub probs_adv: Tensor,
}

pub const EVAL_BATCH: usize = 500;

/// Evaluates against the labels of `ds` under cross-entropy PGD with `attack`.
pub fn evaluate(model: &Mlp, ds: &Dataset, attack: &AttackConfig, seed: u64, bins: usize) -> Result<EvalReport> {
    let k = model.classes();
    let mut pc = Vec::with_capacity(ds.len() * k);
    let mut pa = Vec::with_capacity(ds.len() * k);
    for (b, batch) in sequential_batches(ds, EVAL_BATCH).into_iter().enumerate() {
        let y = Tensor::one_hot(&batch.y, k)?;
        let mut rng = rng_from(indexed_seed(seed, &[b as u64]));
        let adv = pgd(model, &batch.x, &y, attack, &mut rng)?;
        pc.extend_from_slice(model.probs(&batch.x, 1.0)?.as_slice());
        pa.extend_from_slice(model.probs(&adv, 1.0)?.as_slice());
    }
    let probs_clean = Tensor::matrix(ds.len(), k, pc)?;
    let probs_adv = Tensor::matrix(ds.len(), k, pa)?;
    let acc = |p: &Tensor| p.argmax_rows().iter().zip(&ds.labels).filter(|(a, b)| a == b).count() as f64 / ds.len() as f64;
    Ok(EvalReport {
        clean_acc: acc(&probs_clean),
        robust_acc: acc(&probs_adv),
        clean: ece_binned(&probs_clean, &ds.labels, bins)?,
        adv: ece_binned(&probs_adv, &ds.labels, bins)?,
        probs_clean,
        probs_adv,
    })
}

struct TrainAccuracy {
    all: f64,
    untouched: Option<f64>,
    corrupted: Option<f64>,
}

fn train_accuracy(model: &Mlp, ds: &Dataset) -> Result<TrainAccuracy> {
    let (mut hit, mut hu, mut nu, mut hc, mut nc) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for batch in sequential_batches(ds, EVAL_BATCH) {
        let pred = model.predict(&batch.x)?;
        for ((p, &y), &id) in pred.iter().zip(&batch.y).zip(&batch.ids) {
            let ok = *p == y;
            hit += ok as usize;
            if ds.is_corrupted(id) {
                hc += ok as usize;
                nc += 1;
            } else {
                hu += ok as usize;
                nu += 1;
            }
        }
    }
    let noisy = nc > 0;
    Ok(TrainAccuracy {
        all: hit as f64 / ds.len() as f64,
        untouched: (noisy && nu > 0).then(|| hu as f64 / nu as f64),
        corrupted: noisy.then(|| hc as f64 / nc as f64),
    })
}

fn check_ids(ds: &Dataset) -> Result<()> {
    if ds.ids.iter().enumerate().any(|(i, &id)| i != id) {
        bail!(Validation, "training ids must be 0..N in order");
    }
    Ok(())
}

/// Trains from a fresh initialisation drawn from the `"init"` sub-seed.
pub fn train(
    config: &TrainConfig,
    spec: &MlpSpec,
    train_ds: &Dataset,
    test_ds: &Dataset,
    observer: &mut dyn FnMut(&EpochRecord, &Mlp, &LabelState),
) -> Result<TrainOutcome, TrainFailure> {
    config.validate()?;
    spec.validate()?;
    let model = Mlp::init(spec.clone(), &mut rng_from(sub_seed(config.seed, "init")))?;
    train_from(config, model, train_ds, test_ds, observer)
}

/// Trains starting from the given weights.
pub fn train_from(
    config: &TrainConfig,
    model: Mlp,
    train_ds: &Dataset,
    test_ds: &Dataset,
    observer: &mut dyn FnMut(&EpochRecord, &Mlp, &LabelState),
) -> Result<TrainOutcome, TrainFailure> {
    config.validate()?;
    for ds in [train_ds, test_ds] {
        ds.validate()?;
        if ds.dim() != model.spec.input_dim || ds.classes != model.classes() {
            return Err(Error::Dimension("dataset does not match the model layout".to_string()).into());
        }
    }
    check_ids(train_ds)?;
    let norm = if config.standardize { InputNorm::fit(train_ds) } else { InputNorm::IDENTITY };
    let (train_ds, test_ds) = (&norm.apply(train_ds), &norm.apply(test_ds));
    let train_attack = norm.attack(&config.attack);
    let mut model = norm.unfold(&model);
    let k = model.classes();
    let mut labels = LabelState::new(config.labels, &train_ds.labels, k)?;
    let mut opt = Sgd::new(config.momentum, config.weight_decay);
    let mut trace = WeightTrace::new(model.params.flat_values(), config.iiw);
    let eval_attack = norm.attack(&config.eval_attack());
    let (shuffle_seed, attack_seed, eval_seed) =
        (sub_seed(config.seed, "shuffle"), sub_seed(config.seed, "attack"), sub_seed(config.seed, "eval"));

    let mut history: Vec<EpochRecord> = Vec::with_capacity(config.epochs);
    let mut best: Option<(Mlp, usize, f64)> = None;
    for epoch in 1..=config.epochs {
        let lr = lr_at(&config.schedule, config.lr, epoch, config.epochs);
        let step = (|| -> Result<(f64, f64, f64)> {
            let (mut loss_sum, mut norm_sum, mut robust_hits) = (0.0, 0.0, 0usize);
            let list = batches(train_ds, config.batch_size, indexed_seed(shuffle_seed, &[epoch as u64]))?;
            let n_batches = list.len();
            for (b, batch) in list.into_iter().enumerate() {
                let y_hard = Tensor::one_hot(&batch.y, k)?;
                let mut rng = rng_from(indexed_seed(attack_seed, &[epoch as u64, b as u64]));
                let x_adv = match config.objective {
                    Objective::PgdAt => pgd(&model, &batch.x, &y_hard, &train_attack, &mut rng)?,
                    Objective::Trades { .. } => pgd_kl(&model, &batch.x, &train_attack, &mut rng)?,
                };
                let z_adv = forward(&model.params, &model.spec, &x_adv)?;
                if !z_adv.is_finite() {
                    bail!(Divergence, "non-finite logits at epoch {} batch {}", epoch, b);
                }
                robust_hits += z_adv.argmax_rows().iter().zip(&batch.y).filter(|(p, y)| p == y).count();
                let needs_clean = config.labels.strategy == Strategy::Sglr;
                let z_clean = if needs_clean { Some(forward(&model.params, &model.spec, &batch.x)?) } else { None };
                let target = assign(
                    &mut labels,
                    &AssignContext { ids: &batch.ids, y_hard: &y_hard, logits_clean: z_clean.as_ref(), logits_adv: Some(&z_adv) },
                )?;
                let (loss, grads) = match config.objective {
                    Objective::PgdAt => {
                        let on_clean = config.labels.strategy == Strategy::Sglr && config.labels.loss_form == LossForm::Alg1;
                        let x_in = if on_clean { &batch.x } else { &x_adv };
                        let (l, g) = model.ce_loss_grad(x_in, &target, GradMode::PARAMS)?;
                        (l, g.params)
                    }
                    Objective::Trades { beta } => trades_loss(&model, &batch.x, &x_adv, &target, beta)?,
                };
                if !loss.is_finite() {
                    bail!(Divergence, "non-finite training loss at epoch {} batch {}", epoch, b);
                }
                model.params.set_grads(grads)?;
                norm_sum += grad_norm(&model.params);
                loss_sum += loss * batch.ids.len() as f64;
                opt.step(&mut model.params, lr);
            }
            if model.params.iter().any(|p| !p.value.is_finite()) {
                bail!(Divergence, "non-finite weights after epoch {}", epoch);
            }
            Ok((loss_sum / train_ds.len() as f64, norm_sum / n_batches as f64, robust_hits as f64 / train_ds.len() as f64))
        })();
        let (train_loss, mean_norm, train_robust_acc) = match step {
            Ok(v) => v,
            Err(error) => return Err(TrainFailure { error, history }),
        };
        let summary = (|| -> Result<EpochRecord> {
            let tr = train_accuracy(&model, train_ds)?;
            let ev = evaluate(&model, test_ds, &eval_attack, indexed_seed(eval_seed, &[epoch as u64]), config.ece_bins)?;
            trace.push(model.params.flat_values());
            Ok(EpochRecord {
                epoch,
                lr,
                train_loss,
                train_clean_acc: tr.all,
                train_robust_acc,
                test_clean_acc: ev.clean_acc,
                test_robust_acc: ev.robust_acc,
                grad_norm: mean_norm,
                ece_clean: ev.clean.ece,
                ece_adv: ev.adv.ece,
                iiw_est: trace.estimate()?,
                mean_conf_correct: ev.clean.mean_conf_correct,
                mean_conf_incorrect: ev.clean.mean_conf_incorrect,
                mean_conf_correct_adv: ev.adv.mean_conf_correct,
                mean_conf_incorrect_adv: ev.adv.mean_conf_incorrect,
                train_acc_untouched: tr.untouched,
                train_acc_corrupted: tr.corrupted,
            })
        })();
        let record = match summary {
            Ok(r) => r,
            Err(error) => return Err(TrainFailure { error, history }),
        };
        let plain = norm.fold(&model);
        observer(&record, &plain, &labels);
        if best.as_ref().is_none_or(|(_, _, acc)| record.test_robust_acc > *acc) {
            best = Some((plain, epoch, record.test_robust_acc));
        }
        history.push(record);
    }
    let (best_model, best_epoch, _) = best.expect("at least one epoch");
    Ok(TrainOutcome { best: best_model, best_epoch, final_model: norm.fold(&model), history, labels })
}

/// Probabilities of `model` at temperature `t` on the whole dataset.
pub fn dataset_probs(model: &Mlp, ds: &Dataset, t: f64) -> Result<Tensor> {
    let mut out = Vec::with_capacity(ds.len() * model.classes());
    for batch in sequential_batches(ds, EVAL_BATCH) {
        out.extend_from_slice(softmax_t(&model.logits(&batch.x)?, t)?.as_slice());
    }
    Tensor::matrix(ds.len(), model.classes(), out)
}
