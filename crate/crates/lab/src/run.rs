//! Experiment pipelines behind the subcommands.
//!
//! Every pipeline is a pure function of its configuration and seed: data,
//! splits, noise, initialisation, shuffling and attacks each draw from a
//! named sub-seed of the top-level seed, and nothing time-dependent is
//! written to disk.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sglr_core::attack::{pgd, transfer_eval, AttackConfig};
use sglr_core::data::{corrupt_inputs, decode_idx, gen_gaussian_mixture, gen_two_moons, inject_label_noise, sequential_batches, Dataset};
use sglr_core::labels::{LabelState, Strategy};
use sglr_core::metrics::{model_hessian_trace, prediction_density, CalibrationReport};
use sglr_core::rng::{indexed_seed, rng_from, sub_seed};
use sglr_core::theory;
use sglr_core::train::{best_final_gap, dataset_probs, evaluate, train, EpochRecord, Gap, Metric, EVAL_BATCH};
use sglr_core::{Mlp, Tensor};

use crate::config::{noise_mode_name, strategy_name, DatasetKind, ExperimentConfig};
use crate::error::{LabError, LabResult};
use crate::io::{self, fmt_f64, fmt_opt};

/// Names of every sub-seed stream used by a run.
pub const STREAMS: [&str; 9] = ["data", "split", "noise", "corrupt", "init", "shuffle", "attack", "eval", "hessian"];

/// Training and test sets exactly as a run sees them.
#[derive(Debug, Clone)]
pub struct RunData {
    pub train: Dataset,
    pub test: Dataset,
    /// Fraction of training labels changed by noise injection, if any.
    pub corrupted_fraction: Option<f64>,
}

pub fn build_data(cfg: &ExperimentConfig) -> LabResult<RunData> {
    let seed = cfg.seed;
    let total = cfg.n + cfg.n_test;
    let pool = match cfg.dataset_kind {
        DatasetKind::Gaussian => {
            let per_class = total.div_ceil(cfg.k);
            gen_gaussian_mixture(cfg.k, per_class, cfg.dim, cfg.separation, sub_seed(seed, "data"))?
        }
        DatasetKind::Moons => gen_two_moons(total, cfg.moon_noise, sub_seed(seed, "data"))?,
        DatasetKind::Idx => {
            let images = cfg.idx_images.as_deref().ok_or_else(|| LabError::Validation("dataset.idx_images unset".into()))?;
            let labels = cfg.idx_labels.as_deref().ok_or_else(|| LabError::Validation("dataset.idx_labels unset".into()))?;
            let read = |p: &Path| {
                if p.exists() {
                    io::read_bytes(p)
                } else {
                    Err(LabError::MissingInput(format!("no IDX file at {}", p.display())))
                }
            };
            decode_idx(&read(images)?, &read(labels)?, Some(total))?
        }
    };
    if pool.len() < total {
        return Err(LabError::Validation(format!("dataset has {} examples, need {}", pool.len(), total)));
    }
    let (train, rest) = pool.split(cfg.n, sub_seed(seed, "split"))?;
    let test = rest.subset(&(0..cfg.n_test).collect::<Vec<_>>())?;
    let (train, corrupted_fraction) = match cfg.noise_spec()? {
        Some(spec) => {
            let noisy = inject_label_noise(&train, &spec, sub_seed(seed, "noise"))?;
            let f = noisy.corrupted_fraction();
            (noisy, Some(f))
        }
        None => (train, None),
    };
    let train = match cfg.input_corruption {
        Some(kind) => corrupt_inputs(&train, kind, sub_seed(seed, "corrupt"))?,
        None => train,
    };
    Ok(RunData { train, test, corrupted_fraction })
}

/// Command-line changes to a run's evaluation attack.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AttackOverride {
    pub eps: Option<f64>,
    /// Defaults to `eps / 4` when only `eps` is overridden.
    pub step: Option<f64>,
    pub iters: Option<usize>,
}

impl AttackOverride {
    pub fn apply(&self, base: AttackConfig) -> AttackConfig {
        let epsilon = self.eps.unwrap_or(base.epsilon);
        let step_size = self.step.unwrap_or(if self.eps.is_some() { epsilon / 4.0 } else { base.step_size });
        AttackConfig { epsilon, step_size, iters: self.iters.unwrap_or(base.iters), ..base }
    }
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub robust_gap: Gap,
    pub last: EpochRecord,
    pub history: Vec<EpochRecord>,
    pub corrupted_fraction: Option<f64>,
}

fn manifest(cfg: &ExperimentConfig, data: &RunData, status: &str, epochs_done: usize, best_epoch: Option<usize>) -> Value {
    let streams: serde_json::Map<String, Value> =
        STREAMS.iter().map(|s| (s.to_string(), Value::from(sub_seed(cfg.seed, s).to_string()))).collect();
    json!({
        "seed": cfg.seed,
        "sub_seeds": streams,
        "status": status,
        "epochs_completed": epochs_done,
        "best_epoch": best_epoch,
        "train_size": data.train.len(),
        "test_size": data.test.len(),
        "classes": data.train.classes,
        "input_dim": data.train.dim(),
        "corrupted_fraction": data.corrupted_fraction,
        "files": ["config.json", "metrics.csv", "best.ckpt", "final.ckpt", "manifest.json"],
    })
}

/// Trains one configuration into `dir`.
///
/// On divergence the partial metrics and a manifest with status `diverged`
/// are still written before the error is returned.
pub fn run_train(cfg: &ExperimentConfig, dir: &Path, log: bool) -> LabResult<RunSummary> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.out_dir = dir.to_path_buf();
    io::ensure_dir(dir)?;
    io::write_bytes(&dir.join("config.json"), cfg.to_json_string().as_bytes())?;
    let data = build_data(&cfg)?;
    let spec = cfg.model_spec(data.train.dim(), data.train.classes)?;
    let tc = cfg.train_config();
    let buffer_dir = dir.join("buffers");
    if cfg.export_buffer {
        io::ensure_dir(&buffer_dir)?;
    }
    let mut observer_err: Option<LabError> = None;
    let mut observe = |r: &EpochRecord, _: &Mlp, labels: &LabelState| {
        if log {
            eprintln!(
                "epoch {:>3}  lr {:.4}  loss {:.4}  train {:.4}/{:.4}  test {:.4}/{:.4}  |g| {:.4}",
                r.epoch, r.lr, r.train_loss, r.train_clean_acc, r.train_robust_acc, r.test_clean_acc, r.test_robust_acc, r.grad_norm
            );
        }
        if cfg.export_buffer && observer_err.is_none() {
            let path = buffer_dir.join(format!("epoch_{:03}.csv", r.epoch));
            if let Err(e) = io::write_buffer(&path, &labels.snapshot()) {
                observer_err = Some(e);
            }
        }
    };
    let outcome = train(&tc, &spec, &data.train, &data.test, &mut observe);
    if let Some(e) = observer_err {
        return Err(e);
    }
    let metrics_path = dir.join("metrics.csv");
    match outcome {
        Ok(out) => {
            io::write_metrics(&metrics_path, &out.history, data.corrupted_fraction)?;
            io::save_model(&dir.join("best.ckpt"), &out.best)?;
            io::save_model(&dir.join("final.ckpt"), &out.final_model)?;
            io::write_json(&dir.join("manifest.json"), &manifest(&cfg, &data, "completed", out.history.len(), Some(out.best_epoch)))?;
            Ok(RunSummary {
                dir: dir.to_path_buf(),
                robust_gap: best_final_gap(&out.history, Metric::TestRobustAcc)?,
                last: out.history.last().expect("epochs ≥ 1").clone(),
                history: out.history,
                corrupted_fraction: data.corrupted_fraction,
            })
        }
        Err(failure) => {
            if !failure.history.is_empty() {
                io::write_metrics(&metrics_path, &failure.history, data.corrupted_fraction)?;
            }
            io::write_json(&dir.join("manifest.json"), &manifest(&cfg, &data, "diverged", failure.history.len(), None))?;
            match failure.error {
                sglr_core::Error::Divergence(m) => Err(LabError::Divergence { message: m, epochs_completed: failure.history.len() }),
                other => Err(other.into()),
            }
        }
    }
}

/// Writes the train and test sets of a configuration as CSV.
pub fn run_gen_data(cfg: &ExperimentConfig, dir: &Path) -> LabResult<RunData> {
    cfg.validate()?;
    io::ensure_dir(dir)?;
    let data = build_data(cfg)?;
    io::write_dataset(&dir.join("train.csv"), &data.train)?;
    io::write_dataset(&dir.join("test.csv"), &data.test)?;
    Ok(data)
}

/// A completed run reloaded from disk.
pub struct LoadedRun {
    pub config: ExperimentConfig,
    pub model: Mlp,
    pub data: RunData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Best,
    Final,
}

impl Which {
    pub fn file(self) -> &'static str {
        match self {
            Which::Best => "best.ckpt",
            Which::Final => "final.ckpt",
        }
    }
}

pub fn load_config(dir: &Path) -> LabResult<ExperimentConfig> {
    let p = dir.join("config.json");
    if !p.exists() {
        return Err(LabError::MissingInput(format!("no config.json in {}", dir.display())));
    }
    ExperimentConfig::load(&p)
}

pub fn load_run(dir: &Path, which: Which) -> LabResult<LoadedRun> {
    let config = load_config(dir)?;
    let model = io::load_model(&dir.join(which.file()))?;
    let data = build_data(&config)?;
    if model.spec.input_dim != data.train.dim() || model.classes() != data.train.classes {
        return Err(LabError::Validation("checkpoint does not match the run's data".into()));
    }
    Ok(LoadedRun { config, model, data })
}

fn calibration_json(c: &CalibrationReport) -> Value {
    json!({
        "ece": c.ece,
        "mean_conf_correct": c.mean_conf_correct,
        "mean_conf_incorrect": c.mean_conf_incorrect,
    })
}

/// Clean/robust accuracy, calibration and Hessian trace of a saved model.
pub fn run_eval(dir: &Path, which: Which, attack: &AttackOverride, probes: usize) -> LabResult<Value> {
    let run = load_run(dir, which)?;
    let cfg = &run.config;
    let attack = attack.apply(cfg.train_config().eval_attack());
    attack.validate()?;
    let ev = evaluate(&run.model, &run.data.test, &attack, sub_seed(cfg.seed, "eval"), cfg.ece_bins)?;
    let train_pred = dataset_probs(&run.model, &run.data.train, 1.0)?.argmax_rows();
    let train_acc = train_pred.iter().zip(&run.data.train.labels).filter(|(p, y)| p == y).count() as f64 / run.data.train.len() as f64;
    let hessian = if probes > 0 {
        let m = run.data.train.len().min(EVAL_BATCH);
        let idx: Vec<usize> = (0..m).collect();
        let sub = run.data.train.subset(&idx)?;
        let y = Tensor::one_hot(&sub.labels, sub.classes)?;
        let mut rng = rng_from(sub_seed(cfg.seed, "hessian"));
        Some(model_hessian_trace(&run.model, &sub.features, &y, probes, &mut rng)?)
    } else {
        None
    };
    Ok(json!({
        "checkpoint": which.file(),
        "epsilon": attack.epsilon,
        "iters": attack.iters,
        "test_clean_acc": ev.clean_acc,
        "test_robust_acc": ev.robust_acc,
        "train_clean_acc": train_acc,
        "calibration_clean": calibration_json(&ev.clean),
        "calibration_adv": calibration_json(&ev.adv),
        "hessian_trace": hessian,
        "hessian_probes": probes,
    }))
}

/// Crafts adversarial test examples against a saved model and writes them as
/// a dataset CSV.
pub fn run_attack(dir: &Path, which: Which, attack: &AttackOverride, out: &Path) -> LabResult<Value> {
    let run = load_run(dir, which)?;
    let cfg = &run.config;
    let attack = attack.apply(cfg.train_config().eval_attack());
    attack.validate()?;
    let ds = &run.data.test;
    let k = run.model.classes();
    let seed = sub_seed(cfg.seed, "eval");
    let mut data = Vec::with_capacity(ds.len() * ds.dim());
    for (b, batch) in sequential_batches(ds, EVAL_BATCH).into_iter().enumerate() {
        let y = Tensor::one_hot(&batch.y, k)?;
        let adv = pgd(&run.model, &batch.x, &y, &attack, &mut rng_from(indexed_seed(seed, &[b as u64])))?;
        data.extend_from_slice(adv.as_slice());
    }
    let mut adv = ds.clone();
    adv.features = Tensor::matrix(ds.len(), ds.dim(), data)?;
    let max_dist = sglr_core::attack::linf_distance(&adv.features, &ds.features);
    let pred = dataset_probs(&run.model, &adv, 1.0)?.argmax_rows();
    let acc = pred.iter().zip(&adv.labels).filter(|(p, y)| p == y).count() as f64 / adv.len() as f64;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        io::ensure_dir(parent)?;
    }
    io::write_dataset(out, &adv)?;
    Ok(json!({
        "checkpoint": which.file(),
        "examples": adv.len(),
        "epsilon": attack.epsilon,
        "iters": attack.iters,
        "max_linf_distance": max_dist,
        "robust_acc": acc,
        "output": out.display().to_string(),
    }))
}

/// Black-box transfer: examples crafted on the source model, scored on the
/// target model over the target run's test set.
pub fn run_transfer(source: &Path, target: &Path, which: Which, attack: &AttackOverride) -> LabResult<Value> {
    let src = load_run(source, which)?;
    let tgt = load_run(target, which)?;
    let attack = attack.apply(tgt.config.train_config().eval_attack());
    attack.validate()?;
    let seed = sub_seed(tgt.config.seed, "eval");
    let transfer = transfer_eval(&src.model, &tgt.model, &tgt.data.test, &attack, seed)?;
    let white = evaluate(&tgt.model, &tgt.data.test, &attack, seed, tgt.config.ece_bins)?;
    Ok(json!({
        "source": source.display().to_string(),
        "target": target.display().to_string(),
        "checkpoint": which.file(),
        "epsilon": attack.epsilon,
        "iters": attack.iters,
        "target_clean_acc": white.clean_acc,
        "transfer_robust_acc": transfer,
        "whitebox_robust_acc": white.robust_acc,
    }))
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    s.replace('.', "p")
}

/// r × T grid; summary columns `T,r,standard_acc,robust_acc` use the final
/// epoch of each cell.
pub fn run_ablate(cfg: &ExperimentConfig, rs: &[f64], ts: &[f64], dir: &Path, log: bool) -> LabResult<Vec<(f64, f64, RunSummary)>> {
    if cfg.labels.strategy == Strategy::Hard {
        return Err(LabError::Validation("ablation needs labels.strategy sglr or uniform_ls".into()));
    }
    let mut cells = Vec::new();
    for &t in ts {
        for &r in rs {
            let mut c = cfg.clone();
            c.labels.temperature = t;
            c.labels.r = r;
            c.validate()?;
            cells.push((t, r, c));
        }
    }
    io::ensure_dir(dir)?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (t, r, c) in cells {
        let cell_dir = dir.join(format!("T{}_r{}", fmt_num(t), fmt_num(r)));
        if log {
            eprintln!("cell T={t} r={r}");
        }
        let s = run_train(&c, &cell_dir, false)?;
        rows.push(vec![fmt_f64(t), fmt_f64(r), fmt_f64(s.last.test_clean_acc), fmt_f64(s.last.test_robust_acc)]);
        out.push((t, r, s));
    }
    io::write_table(&dir.join("summary.csv"), &["T", "r", "standard_acc", "robust_acc"], &rows)?;
    Ok(out)
}

pub const NOISE_SUMMARY_HEADER: [&str; 11] = [
    "strategy",
    "noise_rate",
    "corrupted_fraction",
    "untouched_fraction",
    "train_acc",
    "train_acc_untouched",
    "train_acc_corrupted",
    "test_clean_acc",
    "test_robust_acc",
    "best_robust_acc",
    "robust_diff",
];

/// Label strategy × noise-rate grid; final-epoch values per cell.
pub fn run_noise_sweep(
    cfg: &ExperimentConfig,
    rates: &[f64],
    strategies: &[Strategy],
    dir: &Path,
    log: bool,
) -> LabResult<Vec<(Strategy, f64, RunSummary)>> {
    let mut cells = Vec::new();
    for &s in strategies {
        for &eta in rates {
            let mut c = cfg.clone();
            c.labels.strategy = s;
            c.noise_rate = eta;
            c.validate()?;
            cells.push((s, eta, c));
        }
    }
    io::ensure_dir(dir)?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (s, eta, c) in cells {
        let cell_dir = dir.join(format!("{}_eta{}", strategy_name(s), fmt_num(eta)));
        if log {
            eprintln!("cell {} eta={} ({})", strategy_name(s), eta, noise_mode_name(c.noise_mode));
        }
        let sum = run_train(&c, &cell_dir, false)?;
        let cf = sum.corrupted_fraction.unwrap_or(0.0);
        let l = &sum.last;
        rows.push(vec![
            strategy_name(s).to_string(),
            fmt_f64(eta),
            fmt_f64(cf),
            fmt_f64(1.0 - cf),
            fmt_f64(l.train_clean_acc),
            fmt_opt(l.train_acc_untouched),
            fmt_opt(l.train_acc_corrupted),
            fmt_f64(l.test_clean_acc),
            fmt_f64(l.test_robust_acc),
            fmt_f64(sum.robust_gap.best),
            fmt_f64(sum.robust_gap.diff),
        ]);
        out.push((s, eta, sum));
    }
    io::write_table(&dir.join("summary.csv"), &NOISE_SUMMARY_HEADER, &rows)?;
    Ok(out)
}

pub const THEORY_CHECKS: [&str; 8] =
    ["self_mix", "target_mix", "noise_symmetric", "noise_asymmetric", "xent_decomposition", "log_sum", "iiw_reduction", "all"];

fn summary_json(s: &theory::TrialSummary) -> Value {
    json!({
        "check": s.check,
        "trials": s.trials,
        "passed": s.passed,
        "max_residual": s.max_residual,
        "tolerance": s.tolerance,
        "pass": s.all_pass(),
    })
}

/// One JSON report per selected check; `trials = None` uses each check's
/// standard trial count.
pub fn run_theory(check: &str, trials: Option<usize>, seed: u64) -> LabResult<Vec<Value>> {
    if !THEORY_CHECKS.contains(&check) {
        return Err(LabError::Validation(format!("unknown check {check:?}; expected one of {}", THEORY_CHECKS.join(", "))));
    }
    let want = |name: &str| check == "all" || check == name;
    let n = |default: usize| trials.unwrap_or(default);
    let mut out = Vec::new();
    if want("self_mix") {
        let mut v = summary_json(&theory::self_mix_trials(n(1000), seed)?);
        let q = [0.2, 0.5, 0.3];
        let p = [0.6, 0.1, 0.3];
        let exact = theory::check_self_mix(&q, &p, 0.5)?;
        v["example"] = json!({
            "q": q, "p": p, "alpha": 0.5,
            "lhs": exact.lhs,
            "minus_kl_form": exact.rhs,
            "plus_kl_form": theory::self_mix_plus_form(&q, &p, 0.5),
        });
        out.push(v);
    }
    if want("target_mix") {
        out.push(summary_json(&theory::target_mix_trials(n(1000), seed)?));
    }
    if want("noise_symmetric") {
        out.push(summary_json(&theory::noise_symmetric_trials(n(200), seed)?));
    }
    if want("noise_asymmetric") {
        out.push(summary_json(&theory::noise_asymmetric_trials(n(50), seed)?));
    }
    if want("xent_decomposition") {
        let mut v = summary_json(&theory::xent_decomposition_trials(n(100), seed)?);
        let d = theory::decompose_xent_discrete(&theory::DiscreteWorld::random(4, 3, 8, seed)?)?;
        v["example"] = json!({
            "expected_xent": d.expected_xent,
            "cond_entropy": d.cond_entropy,
            "expected_kl": d.expected_kl,
            "mutual_info": d.mutual_info,
            "expected_kl_marginal": d.expected_kl_marginal,
            "residual": d.identity.residual,
        });
        out.push(v);
    }
    if want("log_sum") {
        out.push(summary_json(&theory::log_sum_trials(n(10_000), seed)?));
    }
    if want("iiw_reduction") {
        let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let seeds: Vec<u64> = (0..n(20) as u64).map(|i| indexed_seed(seed, &[i])).collect();
        let r = theory::iiw_reduction_experiment(&lambdas, &seeds, 4, 3, 8)?;
        out.push(json!({
            "check": "iiw_reduction",
            "trials": seeds.len(),
            "lambdas": r.lambdas,
            "mean_mi": (0..r.lambdas.len())
                .map(|j| r.values.iter().map(|row| row[j]).sum::<f64>() / r.values.len() as f64)
                .collect::<Vec<_>>(),
            "reduction_found": r.reduction_found,
            "hard_endpoint_exact": r.hard_endpoint_exact,
            "uniform_endpoint_zero": r.uniform_endpoint_zero,
            "pass": r.reduction_found && r.hard_endpoint_exact && r.uniform_endpoint_zero,
        }));
    }
    Ok(out)
}

/// Header plus pre-formatted rows.
type Table = (Vec<String>, Vec<Vec<String>>);

pub const PLOT_FILES: [&str; 7] =
    ["learning_curves.csv", "grad_norm.csv", "ece.csv", "confidence.csv", "noise_split.csv", "calibration.csv", "density.csv"];

/// Plot-ready CSVs for one run directory.
///
/// The per-epoch families come from `metrics.csv`; the reliability table and
/// the density histogram evaluate `final.ckpt` on the run's data.
pub fn export_plots(dir: &Path, out: &Path) -> LabResult<Vec<PathBuf>> {
    let history = io::read_metrics(&dir.join("metrics.csv"))?;
    let run = load_run(dir, Which::Final)?;
    io::ensure_dir(out)?;
    let per_epoch = |cols: &[&str], f: &dyn Fn(&EpochRecord) -> Vec<String>| -> (Vec<String>, Vec<Vec<String>>) {
        let header = std::iter::once("epoch").chain(cols.iter().copied()).map(String::from).collect();
        let rows = history.iter().map(|r| std::iter::once(r.epoch.to_string()).chain(f(r)).collect()).collect();
        (header, rows)
    };
    let families: Vec<(&str, Table)> = vec![
        (
            PLOT_FILES[0],
            per_epoch(&["train_clean_acc", "train_robust_acc", "test_clean_acc", "test_robust_acc"], &|r| {
                vec![fmt_f64(r.train_clean_acc), fmt_f64(r.train_robust_acc), fmt_f64(r.test_clean_acc), fmt_f64(r.test_robust_acc)]
            }),
        ),
        (
            PLOT_FILES[1],
            per_epoch(&["lr", "grad_norm", "iiw_est", "train_loss"], &|r| {
                vec![fmt_f64(r.lr), fmt_f64(r.grad_norm), fmt_f64(r.iiw_est), fmt_f64(r.train_loss)]
            }),
        ),
        (PLOT_FILES[2], per_epoch(&["ece_clean", "ece_adv"], &|r| vec![fmt_f64(r.ece_clean), fmt_f64(r.ece_adv)])),
        (
            PLOT_FILES[3],
            per_epoch(&["mean_conf_correct", "mean_conf_incorrect", "mean_conf_correct_adv", "mean_conf_incorrect_adv"], &|r| {
                vec![
                    fmt_opt(r.mean_conf_correct),
                    fmt_opt(r.mean_conf_incorrect),
                    fmt_opt(r.mean_conf_correct_adv),
                    fmt_opt(r.mean_conf_incorrect_adv),
                ]
            }),
        ),
        (
            PLOT_FILES[4],
            per_epoch(&["train_clean_acc", "train_acc_untouched", "train_acc_corrupted"], &|r| {
                vec![fmt_f64(r.train_clean_acc), fmt_opt(r.train_acc_untouched), fmt_opt(r.train_acc_corrupted)]
            }),
        ),
    ];
    let mut written = Vec::new();
    for (name, (header, rows)) in families {
        let path = out.join(name);
        let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        io::write_table(&path, &header, &rows)?;
        written.push(path);
    }

    let cfg = &run.config;
    let ev = evaluate(&run.model, &run.data.test, &cfg.train_config().eval_attack(), sub_seed(cfg.seed, "eval"), cfg.ece_bins)?;
    let rows: Vec<Vec<String>> = ev
        .clean
        .bins
        .iter()
        .zip(&ev.adv.bins)
        .map(|(c, a)| {
            vec![
                fmt_f64(c.lo),
                fmt_f64(c.hi),
                c.count.to_string(),
                fmt_f64(c.mean_conf),
                fmt_f64(c.acc),
                a.count.to_string(),
                fmt_f64(a.mean_conf),
                fmt_f64(a.acc),
            ]
        })
        .collect();
    let path = out.join(PLOT_FILES[5]);
    io::write_table(&path, &["bin_lo", "bin_hi", "count_clean", "conf_clean", "acc_clean", "count_adv", "conf_adv", "acc_adv"], &rows)?;
    written.push(path);

    let clean = prediction_density(&ev.probs_clean, &run.data.test.labels, cfg.ece_bins)?;
    let adv = prediction_density(&ev.probs_adv, &run.data.test.labels, cfg.ece_bins)?;
    let b = cfg.ece_bins as f64;
    let rows: Vec<Vec<String>> = (0..cfg.ece_bins)
        .map(|i| vec![fmt_f64(i as f64 / b), fmt_f64((i + 1) as f64 / b), clean[i].to_string(), adv[i].to_string()])
        .collect();
    let path = out.join(PLOT_FILES[6]);
    io::write_table(&path, &["bin_lo", "bin_hi", "count_clean", "count_adv"], &rows)?;
    written.push(path);
    Ok(written)
}
