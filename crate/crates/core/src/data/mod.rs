//! Datasets: synthetic generators, IDX decoding, label noise, input
//! corruption and deterministic batching.

mod idx;
mod noise;
mod synthetic;

pub use idx::{decode_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use noise::{corrupt_inputs, inject_label_noise, validate_transition, InputCorruption, NoiseMode, NoiseSpec};
pub use synthetic::{gen_gaussian_mixture, gen_two_moons};

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{bail, Result};
use crate::rng::rng_from;
use crate::tensor::Tensor;

/// Features in `[0,1]`, current (possibly noisy) labels, the labels before
/// any noise was injected, and per-example ids.
///
/// Ids are `0..N` in construction order; they index per-example state such as
/// the soft-label buffer and survive shuffling and batching unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub pristine_labels: Vec<usize>,
    pub ids: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let pristine = labels.clone();
        Self::with_pristine(features, labels, pristine, classes)
    }

    pub fn with_pristine(features: Tensor, labels: Vec<usize>, pristine_labels: Vec<usize>, classes: usize) -> Result<Self> {
        let n = features.rows();
        let ids = (0..n).collect();
        let ds = Self { features, labels, pristine_labels, ids, classes };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.features.rank() != 2 {
            bail!(Dimension, "features must be a matrix");
        }
        if self.classes < 2 {
            bail!(Validation, "need at least 2 classes");
        }
        if self.labels.len() != n || self.pristine_labels.len() != n || self.ids.len() != n {
            bail!(Dimension, "label/id count does not match {} feature rows", n);
        }
        if self.labels.iter().chain(&self.pristine_labels).any(|&y| y >= self.classes) {
            bail!(Validation, "label out of range for {} classes", self.classes);
        }
        if self.features.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            bail!(Validation, "feature outside [0,1]");
        }
        let mut seen = alloc::vec![false; n];
        for &id in &self.ids {
            if id >= n || core::mem::replace(&mut seen[id], true) {
                bail!(Validation, "ids must be a permutation of 0..{}", n);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Whether example `i` carries a label different from its pristine one.
    pub fn is_corrupted(&self, i: usize) -> bool {
        self.labels[i] != self.pristine_labels[i]
    }

    pub fn corrupted_fraction(&self) -> f64 {
        (0..self.len()).filter(|&i| self.is_corrupted(i)).count() as f64 / self.len() as f64
    }

    /// Rows at the given positions, re-numbered `0..idx.len()`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            bail!(Dimension, "empty subset");
        }
        Self::with_pristine(
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
            idx.iter().map(|&i| self.pristine_labels[i]).collect(),
            self.classes,
        )
    }

    /// Seeded shuffle-split into `(first, rest)` with `n_first` examples first.
    pub fn split(&self, n_first: usize, seed: u64) -> Result<(Self, Self)> {
        if n_first == 0 || n_first >= self.len() {
            bail!(Parameter, "split size {} must be in 1..{}", n_first, self.len());
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng_from(seed));
        Ok((self.subset(&order[..n_first])?, self.subset(&order[n_first..])?))
    }
}

/// One mini-batch, carrying example ids for per-example state lookups.
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Vec<usize>,
    pub x: Tensor,
    pub y: Vec<usize>,
}

/// Seeded permutation of `ds` chopped into batches of at most `batch_size`.
pub fn batches(ds: &Dataset, batch_size: usize, epoch_seed: u64) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        bail!(Parameter, "batch size must be positive");
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_from(epoch_seed));
    Ok(order
        .chunks(batch_size)
        .map(|chunk| Batch {
            ids: chunk.iter().map(|&i| ds.ids[i]).collect(),
            x: ds.features.select_rows(chunk),
            y: chunk.iter().map(|&i| ds.labels[i]).collect(),
        })
        .collect())
}

/// Batches in dataset order (no shuffling), for evaluation.
pub fn sequential_batches(ds: &Dataset, batch_size: usize) -> Vec<Batch> {
    let order: Vec<usize> = (0..ds.len()).collect();
    order
        .chunks(batch_size.max(1))
        .map(|chunk| Batch {
            ids: chunk.iter().map(|&i| ds.ids[i]).collect(),
            x: ds.features.select_rows(chunk),
            y: chunk.iter().map(|&i| ds.labels[i]).collect(),
        })
        .collect()
}
