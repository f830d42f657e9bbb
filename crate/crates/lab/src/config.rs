//! Flat experiment configuration.
//!
//! Accepted as `key = value` lines (blank lines and `#` comments ignored) or
//! as one flat JSON object with the same keys. The effective configuration is
//! always written back as JSON with every key resolved.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;
use sglr_core::attack::AttackConfig;
use sglr_core::data::{validate_transition, InputCorruption, NoiseMode, NoiseSpec};
use sglr_core::labels::{EmaInit, LabelConfig, LossForm, Strategy};
use sglr_core::metrics::IiwConfig;
use sglr_core::optim::Schedule;
use sglr_core::train::{Objective, TrainConfig};
use sglr_core::{MlpSpec, Tensor};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Gaussian,
    Moons,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Piecewise,
    Cosine,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    PgdAt,
    Trades,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_kind: DatasetKind,
    pub n: usize,
    pub n_test: usize,
    pub k: usize,
    pub dim: usize,
    pub separation: f64,
    pub moon_noise: f64,
    pub noise_rate: f64,
    pub noise_mode: NoiseMode,
    /// Rows separated by `;`, entries by `,`.
    pub transition: Option<Vec<Vec<f64>>>,
    pub input_corruption: Option<InputCorruption>,
    pub idx_images: Option<PathBuf>,
    pub idx_labels: Option<PathBuf>,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub schedule: ScheduleKind,
    pub milestones: Vec<usize>,
    pub decay_factor: f64,
    pub lr_min: f64,
    pub objective: ObjectiveKind,
    pub beta: f64,
    pub standardize: bool,
    pub eps: f64,
    /// `None` means `eps / 4`.
    pub step: Option<f64>,
    pub iters: usize,
    pub random_start: bool,
    pub labels: LabelConfig,
    pub ece_bins: usize,
    pub iiw_window: usize,
    pub prior_sd: f64,
    pub export_buffer: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    /// The desk-scale reference task.
    fn default() -> Self {
        Self {
            dataset_kind: DatasetKind::Gaussian,
            n: 4000,
            n_test: 2000,
            k: 4,
            dim: 20,
            separation: 2.5,
            moon_noise: 0.1,
            noise_rate: 0.0,
            noise_mode: NoiseMode::SymmetricAll,
            transition: None,
            input_corruption: None,
            idx_images: None,
            idx_labels: None,
            hidden: vec![1024],
            epochs: 60,
            batch: 32,
            lr: 0.05,
            momentum: 0.9,
            weight_decay: 0.0,
            schedule: ScheduleKind::Piecewise,
            milestones: vec![30, 45],
            decay_factor: 0.1,
            lr_min: 0.0,
            objective: ObjectiveKind::PgdAt,
            beta: 6.0,
            standardize: true,
            eps: 0.02,
            step: None,
            iters: 10,
            random_start: true,
            labels: LabelConfig::default(),
            ece_bins: sglr_core::metrics::DEFAULT_ECE_BINS,
            iiw_window: IiwConfig::default().window,
            prior_sd: IiwConfig::default().prior_sd,
            export_buffer: false,
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "attack.eps",
    "attack.iters",
    "attack.random_start",
    "attack.step",
    "dataset.dim",
    "dataset.idx_images",
    "dataset.idx_labels",
    "dataset.input_corruption",
    "dataset.k",
    "dataset.kind",
    "dataset.moon_noise",
    "dataset.n",
    "dataset.n_test",
    "dataset.noise_mode",
    "dataset.noise_rate",
    "dataset.separation",
    "dataset.transition",
    "labels.alpha",
    "labels.ema_init",
    "labels.export_buffer",
    "labels.lambda",
    "labels.loss_form",
    "labels.r",
    "labels.strategy",
    "labels.temperature",
    "metrics.ece_bins",
    "metrics.iiw_prior_sd",
    "metrics.iiw_window",
    "model.hidden",
    "out_dir",
    "seed",
    "train.batch",
    "train.beta",
    "train.decay_factor",
    "train.epochs",
    "train.lr",
    "train.lr_min",
    "train.milestones",
    "train.momentum",
    "train.objective",
    "train.schedule",
    "train.standardize",
    "train.weight_decay",
];

fn invalid(key: &str, raw: &str, why: impl Display) -> LabError {
    LabError::Validation(format!("{key} = {raw:?}: {why}"))
}

fn num<T: FromStr>(key: &str, raw: &str) -> LabResult<T>
where
    T::Err: Display,
{
    raw.trim().parse().map_err(|e| invalid(key, raw, e))
}

fn flag(key: &str, raw: &str) -> LabResult<bool> {
    match raw.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(key, raw, "expected true or false")),
    }
}

fn list<T: FromStr>(key: &str, raw: &str) -> LabResult<Vec<T>>
where
    T::Err: Display,
{
    let raw = raw.trim().trim_start_matches('[').trim_end_matches(']');
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|s| num(key, s)).collect()
}

fn join<T: Display>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn opt_path(raw: &str) -> Option<PathBuf> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| PathBuf::from(raw))
}

pub fn noise_mode_name(m: NoiseMode) -> &'static str {
    match m {
        NoiseMode::SymmetricAll => "symmetric_all",
        NoiseMode::SymmetricWrong => "symmetric_wrong",
        NoiseMode::Asymmetric => "asymmetric",
    }
}

pub fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Hard => "hard",
        Strategy::UniformLs => "uniform_ls",
        Strategy::Sglr => "sglr",
    }
}

pub fn parse_strategy(raw: &str) -> LabResult<Strategy> {
    match raw.trim() {
        "hard" => Ok(Strategy::Hard),
        "uniform_ls" | "ls" => Ok(Strategy::UniformLs),
        "sglr" => Ok(Strategy::Sglr),
        _ => Err(invalid("labels.strategy", raw, "expected hard, uniform_ls or sglr")),
    }
}

fn corruption_name(c: Option<InputCorruption>) -> String {
    match c {
        None => "none".into(),
        Some(InputCorruption::Gaussian(sd)) => format!("gaussian:{sd}"),
        Some(InputCorruption::RandomPixels(f)) => format!("random_pixels:{f}"),
    }
}

impl ExperimentConfig {
    /// Sets one key from its textual value. Unknown keys are errors.
    pub fn set(&mut self, key: &str, raw: &str) -> LabResult<()> {
        let v = raw.trim();
        match key {
            "dataset.kind" => {
                self.dataset_kind = match v {
                    "gaussian" => DatasetKind::Gaussian,
                    "moons" => DatasetKind::Moons,
                    "idx" => DatasetKind::Idx,
                    _ => return Err(invalid(key, raw, "expected gaussian, moons or idx")),
                }
            }
            "dataset.n" => self.n = num(key, v)?,
            "dataset.n_test" => self.n_test = num(key, v)?,
            "dataset.k" => self.k = num(key, v)?,
            "dataset.dim" => self.dim = num(key, v)?,
            "dataset.separation" => self.separation = num(key, v)?,
            "dataset.moon_noise" => self.moon_noise = num(key, v)?,
            "dataset.noise_rate" => self.noise_rate = num(key, v)?,
            "dataset.noise_mode" => {
                self.noise_mode = match v {
                    "symmetric_all" => NoiseMode::SymmetricAll,
                    "symmetric_wrong" => NoiseMode::SymmetricWrong,
                    "asymmetric" => NoiseMode::Asymmetric,
                    _ => return Err(invalid(key, raw, "expected symmetric_all, symmetric_wrong or asymmetric")),
                }
            }
            "dataset.transition" => {
                self.transition =
                    if v.is_empty() || v == "none" { None } else { Some(v.split(';').map(|row| list(key, row)).collect::<LabResult<_>>()?) }
            }
            "dataset.input_corruption" => {
                self.input_corruption = match v.split_once(':') {
                    None if v == "none" || v.is_empty() => None,
                    Some(("gaussian", sd)) => Some(InputCorruption::Gaussian(num(key, sd)?)),
                    Some(("random_pixels", f)) => Some(InputCorruption::RandomPixels(num(key, f)?)),
                    _ => return Err(invalid(key, raw, "expected none, gaussian:<sd> or random_pixels:<fraction>")),
                }
            }
            "dataset.idx_images" => self.idx_images = opt_path(v),
            "dataset.idx_labels" => self.idx_labels = opt_path(v),
            "model.hidden" => self.hidden = list(key, v)?,
            "train.epochs" => self.epochs = num(key, v)?,
            "train.batch" => self.batch = num(key, v)?,
            "train.lr" => self.lr = num(key, v)?,
            "train.momentum" => self.momentum = num(key, v)?,
            "train.weight_decay" => self.weight_decay = num(key, v)?,
            "train.schedule" => {
                self.schedule = match v {
                    "piecewise" => ScheduleKind::Piecewise,
                    "cosine" => ScheduleKind::Cosine,
                    "constant" => ScheduleKind::Constant,
                    _ => return Err(invalid(key, raw, "expected piecewise, cosine or constant")),
                }
            }
            "train.milestones" => self.milestones = list(key, v)?,
            "train.decay_factor" => self.decay_factor = num(key, v)?,
            "train.lr_min" => self.lr_min = num(key, v)?,
            "train.objective" => {
                self.objective = match v {
                    "pgd_at" => ObjectiveKind::PgdAt,
                    "trades" => ObjectiveKind::Trades,
                    _ => return Err(invalid(key, raw, "expected pgd_at or trades")),
                }
            }
            "train.beta" => self.beta = num(key, v)?,
            "train.standardize" => self.standardize = flag(key, v)?,
            "attack.eps" => self.eps = num(key, v)?,
            "attack.step" => self.step = if v == "auto" || v.is_empty() { None } else { Some(num(key, v)?) },
            "attack.iters" => self.iters = num(key, v)?,
            "attack.random_start" => self.random_start = flag(key, v)?,
            "labels.strategy" => self.labels.strategy = parse_strategy(v)?,
            "labels.r" => self.labels.r = num(key, v)?,
            "labels.alpha" => self.labels.alpha = num(key, v)?,
            "labels.lambda" => self.labels.lambda = num(key, v)?,
            "labels.temperature" => self.labels.temperature = num(key, v)?,
            "labels.ema_init" => {
                self.labels.ema_init = match v {
                    "hard" => EmaInit::Hard,
                    "uniform" => EmaInit::Uniform,
                    "zero" => EmaInit::ZeroRenormalized,
                    _ => return Err(invalid(key, raw, "expected hard, uniform or zero")),
                }
            }
            "labels.loss_form" => {
                self.labels.loss_form = match v {
                    "composed" => LossForm::Composed,
                    "alg1" => LossForm::Alg1,
                    _ => return Err(invalid(key, raw, "expected composed or alg1")),
                }
            }
            "labels.export_buffer" => self.export_buffer = flag(key, v)?,
            "metrics.ece_bins" => self.ece_bins = num(key, v)?,
            "metrics.iiw_window" => self.iiw_window = num(key, v)?,
            "metrics.iiw_prior_sd" => self.prior_sd = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(LabError::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` text or a flat JSON object over the defaults.
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> LabResult<()> {
        if text.trim_start().starts_with('{') {
            let map: BTreeMap<String, Value> = serde_json::from_str(text).map_err(|e| LabError::Validation(format!("config JSON: {e}")))?;
            for (k, v) in map {
                let raw = match v {
                    Value::String(s) => s,
                    Value::Null => String::new(),
                    Value::Array(items) => items
                        .iter()
                        .map(|x| match x {
                            Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                self.set(&k, &raw)?;
            }
        } else {
            for (no, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(LabError::Validation(format!("line {}: expected key = value", no + 1)));
                };
                self.set(k.trim(), v)?;
            }
        }
        Ok(())
    }

    /// Applies `key=value` command-line overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> LabResult<()> {
        for o in overrides {
            let Some((k, v)) = o.split_once('=') else {
                return Err(LabError::Validation(format!("override {o:?}: expected key=value")));
            };
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    /// Every key with its resolved value, in key order.
    pub fn to_json(&self) -> Value {
        let l = &self.labels;
        let mut m = serde_json::Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("attack.eps", self.eps.into());
        put("attack.iters", self.iters.into());
        put("attack.random_start", self.random_start.into());
        put("attack.step", self.step.map_or(Value::from("auto"), Value::from));
        put("dataset.dim", self.dim.into());
        let path_value = |p: &Option<PathBuf>| p.as_ref().map_or(Value::from(""), |p| p.display().to_string().into());
        put("dataset.idx_images", path_value(&self.idx_images));
        put("dataset.idx_labels", path_value(&self.idx_labels));
        put("dataset.input_corruption", corruption_name(self.input_corruption).into());
        put("dataset.k", self.k.into());
        put(
            "dataset.kind",
            match self.dataset_kind {
                DatasetKind::Gaussian => "gaussian",
                DatasetKind::Moons => "moons",
                DatasetKind::Idx => "idx",
            }
            .into(),
        );
        put("dataset.moon_noise", self.moon_noise.into());
        put("dataset.n", self.n.into());
        put("dataset.n_test", self.n_test.into());
        put("dataset.noise_mode", noise_mode_name(self.noise_mode).into());
        put("dataset.noise_rate", self.noise_rate.into());
        put("dataset.separation", self.separation.into());
        let transition =
            self.transition.as_ref().map_or("none".to_string(), |rows| rows.iter().map(|r| join(r, ",")).collect::<Vec<_>>().join(";"));
        put("dataset.transition", transition.into());
        put("labels.alpha", l.alpha.into());
        put(
            "labels.ema_init",
            match l.ema_init {
                EmaInit::Hard => "hard",
                EmaInit::Uniform => "uniform",
                EmaInit::ZeroRenormalized => "zero",
            }
            .into(),
        );
        put("labels.export_buffer", self.export_buffer.into());
        put("labels.lambda", l.lambda.into());
        put(
            "labels.loss_form",
            match l.loss_form {
                LossForm::Composed => "composed",
                LossForm::Alg1 => "alg1",
            }
            .into(),
        );
        put("labels.r", l.r.into());
        put("labels.strategy", strategy_name(l.strategy).into());
        put("labels.temperature", l.temperature.into());
        put("metrics.ece_bins", self.ece_bins.into());
        put("metrics.iiw_prior_sd", self.prior_sd.into());
        put("metrics.iiw_window", self.iiw_window.into());
        put("model.hidden", join(&self.hidden, ",").into());
        put("out_dir", self.out_dir.display().to_string().into());
        put("seed", self.seed.into());
        put("train.batch", self.batch.into());
        put("train.beta", self.beta.into());
        put("train.decay_factor", self.decay_factor.into());
        put("train.epochs", self.epochs.into());
        put("train.lr", self.lr.into());
        put("train.lr_min", self.lr_min.into());
        put("train.milestones", join(&self.milestones, ",").into());
        put("train.momentum", self.momentum.into());
        put(
            "train.objective",
            match self.objective {
                ObjectiveKind::PgdAt => "pgd_at",
                ObjectiveKind::Trades => "trades",
            }
            .into(),
        );
        put(
            "train.schedule",
            match self.schedule {
                ScheduleKind::Piecewise => "piecewise",
                ScheduleKind::Cosine => "cosine",
                ScheduleKind::Constant => "constant",
            }
            .into(),
        );
        put("train.standardize", self.standardize.into());
        put("train.weight_decay", self.weight_decay.into());
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn attack(&self) -> AttackConfig {
        AttackConfig { step_size: self.step.unwrap_or(self.eps / 4.0), ..AttackConfig::pgd(self.eps, self.iters, self.random_start) }
    }

    pub fn schedule(&self) -> Schedule {
        match self.schedule {
            ScheduleKind::Piecewise => Schedule::Piecewise { milestones: self.milestones.clone(), factor: self.decay_factor },
            ScheduleKind::Cosine => Schedule::Cosine { lr_min: self.lr_min },
            ScheduleKind::Constant => Schedule::Constant,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            lr: self.lr,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            schedule: self.schedule(),
            objective: match self.objective {
                ObjectiveKind::PgdAt => Objective::PgdAt,
                ObjectiveKind::Trades => Objective::Trades { beta: self.beta },
            },
            attack: self.attack(),
            labels: self.labels,
            iiw: IiwConfig { prior_sd: self.prior_sd, window: self.iiw_window, ..IiwConfig::default() },
            ece_bins: self.ece_bins,
            standardize: self.standardize,
            seed: self.seed,
        }
    }

    pub fn noise_spec(&self) -> LabResult<Option<NoiseSpec>> {
        Ok(match self.noise_mode {
            NoiseMode::Asymmetric => {
                let Some(rows) = &self.transition else {
                    return Err(LabError::Validation("asymmetric noise needs dataset.transition".into()));
                };
                let t = Tensor::from_rows(rows).map_err(|e| LabError::Validation(format!("dataset.transition: {e}")))?;
                Some(NoiseSpec::asymmetric(t))
            }
            _ if self.noise_rate == 0.0 => None,
            NoiseMode::SymmetricAll => Some(NoiseSpec::symmetric_all(self.noise_rate)),
            NoiseMode::SymmetricWrong => Some(NoiseSpec::symmetric_wrong(self.noise_rate)),
        })
    }

    /// Model shape for a dataset with the given input width and class count.
    pub fn model_spec(&self, input_dim: usize, classes: usize) -> LabResult<MlpSpec> {
        Ok(MlpSpec::new(input_dim, self.hidden.clone(), classes)?)
    }

    /// Checks everything that can be checked without touching the data.
    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Validation(m));
        match self.dataset_kind {
            DatasetKind::Gaussian => {
                if self.k < 2 || self.dim < 2 {
                    return bad("gaussian data needs dataset.k ≥ 2 and dataset.dim ≥ 2".into());
                }
                if !(self.separation >= 0.0 && self.separation.is_finite()) {
                    return bad("dataset.separation must be ≥ 0".into());
                }
            }
            DatasetKind::Moons => {
                if self.k != 2 || self.dim != 2 {
                    return bad("moons data has dataset.k = 2 and dataset.dim = 2".into());
                }
                if self.moon_noise.is_nan() || self.moon_noise < 0.0 {
                    return bad("dataset.moon_noise must be ≥ 0".into());
                }
            }
            DatasetKind::Idx => {
                if self.idx_images.is_none() || self.idx_labels.is_none() {
                    return bad("idx data needs dataset.idx_images and dataset.idx_labels".into());
                }
            }
        }
        if self.n == 0 || self.n_test == 0 {
            return bad("dataset.n and dataset.n_test must be ≥ 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("model.hidden widths must be ≥ 1".into());
        }
        if let Some(spec) = self.noise_spec()? {
            if self.dataset_kind != DatasetKind::Idx {
                spec.validate(self.k)?;
            } else if let Some(t) = &spec.transition {
                validate_transition(t, t.rows())?;
            } else {
                spec.validate(2)?;
            }
        }
        match self.input_corruption {
            Some(InputCorruption::Gaussian(sd)) if !(sd >= 0.0 && sd.is_finite()) => {
                return bad("gaussian input corruption needs a finite sd ≥ 0".into())
            }
            Some(InputCorruption::RandomPixels(f)) if !(0.0..=1.0).contains(&f) => {
                return bad("random_pixels fraction must be in [0,1]".into())
            }
            _ => {}
        }
        if self.prior_sd.is_nan() || self.prior_sd <= 0.0 {
            return bad("metrics.iiw_prior_sd must be positive".into());
        }
        self.train_config().validate()?;
        Ok(())
    }
}

/// Splits a comma list such as `0,0.2,0.4` for grid subcommands.
pub fn parse_list<T: FromStr>(what: &str, raw: &str) -> LabResult<Vec<T>>
where
    T::Err: Display,
{
    let v = list(what, raw)?;
    if v.is_empty() {
        return Err(LabError::Validation(format!("{what}: empty list")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_match_emitted_json() {
        let j = ExperimentConfig::default().to_json();
        let emitted: Vec<&str> = j.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(emitted, KEYS);
    }

    #[test]
    fn text_and_json_agree() {
        let text = "# comment\ndataset.k = 3\nmodel.hidden = 8,8\nlabels.strategy = sglr   # trailing note\nlabels.r=0.3\n";
        let a = ExperimentConfig::parse(text).unwrap();
        let json = r#"{"dataset.k": 3, "model.hidden": [8, 8], "labels.strategy": "sglr", "labels.r": 0.3}"#;
        let b = ExperimentConfig::parse(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hidden, vec![8, 8]);
        assert_eq!(a.labels.strategy, Strategy::Sglr);
    }

    #[test]
    fn effective_config_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides(&[
            "dataset.noise_mode=asymmetric".into(),
            "dataset.transition=0.8,0.2;0.3,0.7".into(),
            "dataset.k=2".into(),
            "dataset.input_corruption=gaussian:0.1".into(),
            "attack.step=0.004".into(),
            "train.schedule=cosine".into(),
            "labels.ema_init=zero".into(),
        ])
        .unwrap();
        let back = ExperimentConfig::parse(&cfg.to_json_string()).unwrap();
        assert_eq!(back, cfg);
        assert!(back.validate().is_ok());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(ExperimentConfig::parse("dataset.size = 3"), Err(LabError::Validation(_))));
        assert!(matches!(ExperimentConfig::parse("train.lr = fast"), Err(LabError::Validation(_))));
        assert!(matches!(ExperimentConfig::parse("just words"), Err(LabError::Validation(_))));
        assert!(matches!(ExperimentConfig::parse(r#"{"bogus": 1}"#), Err(LabError::Validation(_))));
    }

    #[test]
    fn validation_catches_bad_values() {
        for o in ["train.lr=0", "labels.r=1.5", "dataset.noise_rate=1", "train.epochs=0", "attack.eps=-1", "model.hidden=0"] {
            let mut cfg = ExperimentConfig::default();
            cfg.apply_overrides(&[o.to_string()]).unwrap();
            assert!(cfg.validate().is_err(), "{o}");
        }
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
