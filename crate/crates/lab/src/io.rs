//! On-disk formats: metrics and dataset CSVs, label-buffer snapshots,
//! checkpoints and JSON documents.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64` exactly. Missing optional values are empty cells.

use std::fs;
use std::path::Path;

use serde_json::Value;
use sglr_core::data::Dataset;
use sglr_core::train::EpochRecord;
use sglr_core::{Mlp, Tensor};

use crate::error::{LabError, LabResult};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const METRICS_HEADER: [&str; 19] = [
    "epoch",
    "lr",
    "train_loss",
    "train_clean_acc",
    "train_robust_acc",
    "test_clean_acc",
    "test_robust_acc",
    "grad_norm",
    "ece_clean",
    "ece_adv",
    "iiw_est",
    "mean_conf_correct",
    "mean_conf_incorrect",
    "mean_conf_correct_adv",
    "mean_conf_incorrect_adv",
    "train_acc_untouched",
    "train_acc_corrupted",
    "noise_active",
    "corrupted_fraction",
];

pub fn ensure_dir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> LabResult<()> {
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

pub fn read_bytes(path: &Path) -> LabResult<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::io(path, e))
}

pub fn write_json(path: &Path, v: &Value) -> LabResult<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn read_json(path: &Path) -> LabResult<Value> {
    let bytes = read_bytes(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Writes a header plus rows of pre-formatted cells.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|c| c.as_ref()))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// `corrupted_fraction` is `None` when no label noise was injected.
pub fn write_metrics(path: &Path, history: &[EpochRecord], corrupted_fraction: Option<f64>) -> LabResult<()> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                fmt_f64(r.lr),
                fmt_f64(r.train_loss),
                fmt_f64(r.train_clean_acc),
                fmt_f64(r.train_robust_acc),
                fmt_f64(r.test_clean_acc),
                fmt_f64(r.test_robust_acc),
                fmt_f64(r.grad_norm),
                fmt_f64(r.ece_clean),
                fmt_f64(r.ece_adv),
                fmt_f64(r.iiw_est),
                fmt_opt(r.mean_conf_correct),
                fmt_opt(r.mean_conf_incorrect),
                fmt_opt(r.mean_conf_correct_adv),
                fmt_opt(r.mean_conf_incorrect_adv),
                fmt_opt(r.train_acc_untouched),
                fmt_opt(r.train_acc_corrupted),
                corrupted_fraction.is_some().to_string(),
                fmt_opt(corrupted_fraction),
            ]
        })
        .collect();
    write_table(path, &METRICS_HEADER, &rows)
}

fn cell<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> LabResult<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| LabError::Validation(format!("{}: bad value in column {}", path.display(), METRICS_HEADER[i])))
}

fn opt_cell(rec: &csv::StringRecord, i: usize, path: &Path) -> LabResult<Option<f64>> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => cell(rec, i, path).map(Some),
    }
}

pub fn read_metrics(path: &Path) -> LabResult<Vec<EpochRecord>> {
    if !path.exists() {
        return Err(LabError::MissingInput(format!("no metrics found at {}", path.display())));
    }
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != METRICS_HEADER {
        return Err(LabError::Validation(format!("{}: unexpected metrics header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(EpochRecord {
            epoch: cell(&rec, 0, path)?,
            lr: cell(&rec, 1, path)?,
            train_loss: cell(&rec, 2, path)?,
            train_clean_acc: cell(&rec, 3, path)?,
            train_robust_acc: cell(&rec, 4, path)?,
            test_clean_acc: cell(&rec, 5, path)?,
            test_robust_acc: cell(&rec, 6, path)?,
            grad_norm: cell(&rec, 7, path)?,
            ece_clean: cell(&rec, 8, path)?,
            ece_adv: cell(&rec, 9, path)?,
            iiw_est: cell(&rec, 10, path)?,
            mean_conf_correct: opt_cell(&rec, 11, path)?,
            mean_conf_incorrect: opt_cell(&rec, 12, path)?,
            mean_conf_correct_adv: opt_cell(&rec, 13, path)?,
            mean_conf_incorrect_adv: opt_cell(&rec, 14, path)?,
            train_acc_untouched: opt_cell(&rec, 15, path)?,
            train_acc_corrupted: opt_cell(&rec, 16, path)?,
        });
    }
    if out.is_empty() {
        return Err(LabError::MissingInput(format!("no metrics found in {}", path.display())));
    }
    Ok(out)
}

/// `id,label,pristine_label,x0..x{d-1}`.
pub fn write_dataset(path: &Path, ds: &Dataset) -> LabResult<()> {
    let mut header = vec!["id".to_string(), "label".into(), "pristine_label".into()];
    header.extend((0..ds.dim()).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..ds.len())
        .map(|i| {
            let mut row = vec![ds.ids[i].to_string(), ds.labels[i].to_string(), ds.pristine_labels[i].to_string()];
            row.extend(ds.features.row(i).iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Reads a dataset CSV; `classes` defaults to `max(label) + 1`.
pub fn read_dataset(path: &Path, classes: Option<usize>) -> LabResult<Dataset> {
    if !path.exists() {
        return Err(LabError::MissingInput(format!("no dataset at {}", path.display())));
    }
    let bad = |m: &str| LabError::Validation(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path)?;
    let dim = r.headers()?.len().checked_sub(3).filter(|&d| d > 0).ok_or_else(|| bad("too few columns"))?;
    let (mut ids, mut labels, mut pristine, mut data) = (vec![], vec![], vec![], vec![]);
    for rec in r.records() {
        let rec = rec?;
        let int = |i: usize| rec.get(i).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad("bad integer cell"));
        ids.push(int(0)?);
        labels.push(int(1)?);
        pristine.push(int(2)?);
        for j in 0..dim {
            data.push(rec.get(3 + j).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad("bad feature cell"))?);
        }
    }
    if labels.is_empty() {
        return Err(bad("no rows"));
    }
    let k = classes.unwrap_or_else(|| labels.iter().chain(&pristine).copied().max().unwrap_or(0).max(1) + 1);
    let mut ds = Dataset::with_pristine(Tensor::matrix(labels.len(), dim, data)?, labels, pristine, k)?;
    ds.ids = ids;
    ds.validate()?;
    Ok(ds)
}

/// `id,p0..p{K-1}` rows of a label-buffer snapshot.
pub fn write_buffer(path: &Path, snapshot: &Tensor) -> LabResult<()> {
    let mut header = vec!["id".to_string()];
    header.extend((0..snapshot.cols()).map(|k| format!("p{k}")));
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = snapshot
        .iter_rows()
        .enumerate()
        .map(|(i, row)| std::iter::once(i.to_string()).chain(row.iter().map(|&v| fmt_f64(v))).collect())
        .collect();
    write_table(path, &header, &rows)
}

pub fn save_model(path: &Path, model: &Mlp) -> LabResult<()> {
    write_bytes(path, &model.to_bytes()?)
}

pub fn load_model(path: &Path) -> LabResult<Mlp> {
    if !path.exists() {
        return Err(LabError::MissingInput(format!("no checkpoint at {}", path.display())));
    }
    Ok(Mlp::from_bytes(&read_bytes(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sglr_core::data::gen_gaussian_mixture;

    #[test]
    fn float_format_is_exact() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e10, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = gen_gaussian_mixture(3, 4, 2, 1.0, 1).unwrap();
        ds.labels[0] = (ds.labels[0] + 1) % 3;
        let p = dir.path().join("d.csv");
        write_dataset(&p, &ds).unwrap();
        assert_eq!(read_dataset(&p, Some(3)).unwrap(), ds);
    }

    #[test]
    fn missing_metrics_is_missing_input() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_metrics(&dir.path().join("metrics.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
