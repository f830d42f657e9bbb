use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{bail, Result};
use crate::rng::rng_from;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// With probability η, resample uniformly over all K classes (the label
    /// may stay the same; expected corrupted fraction η(K−1)/K).
    SymmetricAll,
    /// With probability η, flip to a uniformly chosen wrong class.
    SymmetricWrong,
    /// Resample from row `y` of an explicit class-transition matrix.
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub rate: f64,
    /// `K × K` row-stochastic matrix, required for [`NoiseMode::Asymmetric`].
    pub transition: Option<Tensor>,
}

impl NoiseSpec {
    pub fn symmetric_all(rate: f64) -> Self {
        Self { mode: NoiseMode::SymmetricAll, rate, transition: None }
    }

    pub fn symmetric_wrong(rate: f64) -> Self {
        Self { mode: NoiseMode::SymmetricWrong, rate, transition: None }
    }

    pub fn asymmetric(transition: Tensor) -> Self {
        Self { mode: NoiseMode::Asymmetric, rate: 0.0, transition: Some(transition) }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            bail!(Validation, "noise rate {} must be in [0,1)", self.rate);
        }
        if self.mode == NoiseMode::Asymmetric {
            let Some(t) = &self.transition else {
                bail!(Validation, "asymmetric noise needs a transition matrix");
            };
            validate_transition(t, classes)?;
        }
        Ok(())
    }

    /// True when the rate breaks the `η < 1 − 1/K` tolerance condition.
    pub fn exceeds_tolerance_bound(&self, classes: usize) -> bool {
        self.mode != NoiseMode::Asymmetric && self.rate >= 1.0 - 1.0 / classes as f64
    }

    /// Expected fraction of labels that end up different from the pristine one.
    pub fn expected_corrupted_fraction(&self, classes: usize) -> f64 {
        match self.mode {
            NoiseMode::SymmetricAll => self.rate * (classes as f64 - 1.0) / classes as f64,
            NoiseMode::SymmetricWrong => self.rate,
            NoiseMode::Asymmetric => {
                let t = self.transition.as_ref().expect("validated");
                (0..classes).map(|y| 1.0 - t.get(y, y)).sum::<f64>() / classes as f64
            }
        }
    }
}

/// Row-stochastic, and every row's off-diagonal mass `η_{y,k}` stays below
/// its diagonal `1 − η_y`.
pub fn validate_transition(t: &Tensor, classes: usize) -> Result<()> {
    if t.shape() != [classes, classes] {
        bail!(Validation, "transition must be {}×{}, got {:?}", classes, classes, t.shape());
    }
    for y in 0..classes {
        let row = t.row(y);
        if row.iter().any(|&v| !(v >= 0.0)) {
            bail!(Validation, "transition row {} has a negative entry", y);
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            bail!(Validation, "transition row {} sums to {}", y, s);
        }
        let keep = row[y];
        if row.iter().enumerate().any(|(k, &v)| k != y && v >= keep) {
            bail!(Validation, "transition row {}: off-diagonal mass must stay below 1 − η_y = {}", y, keep);
        }
    }
    Ok(())
}

/// Returns a copy of `ds` with noisy `labels`; `pristine_labels` are kept.
pub fn inject_label_noise(ds: &Dataset, spec: &NoiseSpec, seed: u64) -> Result<Dataset> {
    spec.validate(ds.classes)?;
    let k = ds.classes;
    let mut rng = rng_from(seed);
    let labels: Vec<usize> = ds
        .pristine_labels
        .iter()
        .map(|&y| match spec.mode {
            NoiseMode::SymmetricAll => {
                if rng.random::<f64>() < spec.rate {
                    rng.random_range(0..k)
                } else {
                    y
                }
            }
            NoiseMode::SymmetricWrong => {
                if rng.random::<f64>() < spec.rate {
                    let j = rng.random_range(0..k - 1);
                    if j >= y {
                        j + 1
                    } else {
                        j
                    }
                } else {
                    y
                }
            }
            NoiseMode::Asymmetric => {
                let row = spec.transition.as_ref().expect("validated").row(y);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = k - 1;
                for (j, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = j;
                        break;
                    }
                }
                pick
            }
        })
        .collect();
    let mut out = ds.clone();
    out.labels = labels;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputCorruption {
    /// Add `N(0, σ²)` to every entry, then clamp to `[0,1]`.
    Gaussian(f64),
    /// Replace this fraction of entries with uniform `[0,1]` values.
    RandomPixels(f64),
}

pub fn corrupt_inputs(ds: &Dataset, kind: InputCorruption, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from(seed);
    let mut out = ds.clone();
    match kind {
        InputCorruption::Gaussian(sd) => {
            let normal = Normal::new(0.0, sd).map_err(|_| crate::Error::Parameter(alloc::format!("bad gaussian sd {}", sd)))?;
            for v in out.features.as_mut_slice() {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        InputCorruption::RandomPixels(frac) => {
            if !(0.0..=1.0).contains(&frac) {
                bail!(Parameter, "pixel fraction {} must be in [0,1]", frac);
            }
            for v in out.features.as_mut_slice() {
                if rng.random::<f64>() < frac {
                    *v = rng.random::<f64>();
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_gaussian_mixture;

    fn big(n_per_class: usize) -> Dataset {
        gen_gaussian_mixture(10, n_per_class, 10, 1.0, 1).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let ds = big(20);
        for spec in [NoiseSpec::symmetric_all(0.0), NoiseSpec::symmetric_wrong(0.0)] {
            assert_eq!(inject_label_noise(&ds, &spec, 3).unwrap().labels, ds.labels);
        }
    }

    #[test]
    fn corrupted_fractions_match_closed_forms() {
        // 10^5 examples: standard error of a 0.4 fraction is ~0.0015.
        let ds = big(10_000);
        let wrong = inject_label_noise(&ds, &NoiseSpec::symmetric_wrong(0.4), 7).unwrap();
        assert!((wrong.corrupted_fraction() - 0.4).abs() < 0.01);
        let all = inject_label_noise(&ds, &NoiseSpec::symmetric_all(0.4), 7).unwrap();
        assert!((all.corrupted_fraction() - 0.36).abs() < 0.01);
        assert_eq!(all.pristine_labels, ds.labels);
        assert_eq!(inject_label_noise(&ds, &NoiseSpec::symmetric_all(0.4), 7).unwrap(), all);
    }

    #[test]
    fn transition_validation() {
        let ok = Tensor::from_rows(&[[0.8, 0.2], [0.3, 0.7]]).unwrap();
        assert!(validate_transition(&ok, 2).is_ok());
        let flipped = Tensor::from_rows(&[[0.4, 0.6], [0.3, 0.7]]).unwrap();
        assert!(validate_transition(&flipped, 2).is_err());
        let sub = Tensor::from_rows(&[[0.8, 0.1], [0.3, 0.7]]).unwrap();
        assert!(validate_transition(&sub, 2).is_err());
        let ds = gen_gaussian_mixture(2, 10, 2, 1.0, 1).unwrap();
        assert!(inject_label_noise(&ds, &NoiseSpec::asymmetric(flipped), 1).is_err());
        let noisy = inject_label_noise(&ds, &NoiseSpec::asymmetric(ok), 1).unwrap();
        assert_eq!(noisy.pristine_labels, ds.labels);
    }

    #[test]
    fn corruption_keeps_domain() {
        let ds = big(5);
        let g = corrupt_inputs(&ds, InputCorruption::Gaussian(0.5), 1).unwrap();
        assert!(g.features.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(g.labels, ds.labels);
        let none = corrupt_inputs(&ds, InputCorruption::RandomPixels(0.0), 1).unwrap();
        assert_eq!(none.features, ds.features);
        let all = corrupt_inputs(&ds, InputCorruption::RandomPixels(1.0), 1).unwrap();
        assert!(all.features.as_slice().iter().zip(ds.features.as_slice()).all(|(a, b)| a != b));
    }
}
