//! Rectifier multilayer perceptron classifier.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::graph::{GradMode, Graph, Var};
use crate::params::ParamSet;
use crate::tensor::{matmul_acc, Tensor};

/// Layer layout of an MLP: `input_dim → hidden… → classes`, rectifiers between.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize) -> Result<Self> {
        let spec = Self { input_dim, hidden, classes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            bail!(Validation, "need at least 2 classes, got {}", self.classes);
        }
        if self.input_dim == 0 || self.hidden.contains(&0) {
            bail!(Validation, "layer widths must be positive");
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each affine layer.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.classes);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Zero-initialised parameters with the canonical names and shapes.
    pub fn zero_params(&self) -> Result<ParamSet> {
        self.validate()?;
        let mut ps = ParamSet::new();
        for (i, (fi, fo)) in self.layers().into_iter().enumerate() {
            ps.push(format!("fc{}.weight", i), Tensor::zeros(&[fi, fo]))?;
            ps.push(format!("fc{}.bias", i), Tensor::zeros(&[fo]))?;
        }
        Ok(ps)
    }

    /// Fan-in scaled uniform weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Result<ParamSet> {
        let mut ps = self.zero_params()?;
        for (i, (fi, _)) in self.layers().into_iter().enumerate() {
            let bound = libm::sqrt(6.0 / fi as f64);
            for w in ps.get_mut(2 * i).value.as_mut_slice() {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(ps)
    }

    /// Checks that `params` carries this spec's names and shapes.
    pub fn check_params(&self, params: &ParamSet) -> Result<()> {
        let expected = self.zero_params()?;
        if expected.len() != params.len() {
            bail!(Dimension, "expected {} parameter tensors, got {}", expected.len(), params.len());
        }
        for (e, p) in expected.iter().zip(params.iter()) {
            if e.name != p.name || e.value.shape() != p.value.shape() {
                bail!(Dimension, "parameter {} {:?} does not match expected {} {:?}", p.name, p.value.shape(), e.name, e.value.shape());
            }
        }
        Ok(())
    }
}

/// Records the forward pass of `spec` on the tape and returns the logits node.
pub fn forward_graph(g: &mut Graph<'_>, spec: &MlpSpec, x: Var) -> Result<Var> {
    let n_layers = spec.hidden.len() + 1;
    let mut h = x;
    for i in 0..n_layers {
        let w = g.param(2 * i);
        let b = g.param(2 * i + 1);
        h = g.affine(h, w, b)?;
        if i + 1 < n_layers {
            h = g.relu(h);
        }
    }
    Ok(h)
}

/// Logits of `spec` with `params` on the batch `x` (`N × input_dim`).
pub fn forward(params: &ParamSet, spec: &MlpSpec, x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || x.cols() != spec.input_dim {
        bail!(Dimension, "input shape {:?} does not match input_dim {}", x.shape(), spec.input_dim);
    }
    let n = x.rows();
    let mut h = x.as_slice().to_vec();
    let layers = spec.layers();
    for (i, &(fi, fo)) in layers.iter().enumerate() {
        let w = params.value(2 * i);
        let b = params.value(2 * i + 1);
        if w.shape() != [fi, fo] || b.shape() != [fo] {
            bail!(Dimension, "layer {} parameters have the wrong shape", i);
        }
        let mut out = Vec::with_capacity(n * fo);
        for _ in 0..n {
            out.extend_from_slice(b.as_slice());
        }
        matmul_acc(&h, w.as_slice(), &mut out, n, fi, fo);
        if i + 1 < layers.len() {
            for v in &mut out {
                *v = v.max(0.0);
            }
        }
        h = out;
    }
    Tensor::matrix(n, spec.classes, h)
}

/// A classifier: layout plus weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: ParamSet,
}

impl Mlp {
    pub fn new(spec: MlpSpec, params: ParamSet) -> Result<Self> {
        spec.check_params(&params)?;
        Ok(Self { spec, params })
    }

    pub fn init<R: Rng>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        let params = spec.init_params(rng)?;
        Ok(Self { spec, params })
    }

    pub fn classes(&self) -> usize {
        self.spec.classes
    }

    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        forward(&self.params, &self.spec, x)
    }

    pub fn probs(&self, x: &Tensor, temperature: f64) -> Result<Tensor> {
        crate::loss::softmax_t(&self.logits(x)?, temperature)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        Ok(self.logits(x)?.argmax_rows())
    }

    /// Soft-target cross entropy of the logits on `x`, with gradients as
    /// selected by `mode`.
    pub fn ce_loss_grad(&self, x: &Tensor, target: &Tensor, mode: GradMode) -> Result<(f64, crate::graph::Gradients)> {
        let mut g = Graph::new(&self.params, mode);
        let xi = g.input(x.clone());
        let z = forward_graph(&mut g, &self.spec, xi)?;
        let lp = g.log_softmax(z, 1.0)?;
        let loss = g.soft_ce(lp, target.clone())?;
        let grads = g.backward(loss)?;
        Ok((g.scalar(loss), grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_network_gives_zero_logits() {
        let spec = MlpSpec::new(3, vec![4], 2).unwrap();
        let ps = spec.zero_params().unwrap();
        let x = Tensor::from_rows(&[[0.1, 0.5, 0.9], [1.0, 0.0, 0.3]]).unwrap();
        assert!(forward(&ps, &spec, &x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_network() {
        let spec = MlpSpec::new(2, vec![], 2).unwrap();
        let mut ps = spec.zero_params().unwrap();
        ps.get_mut(0).value = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let z = forward(&ps, &spec, &Tensor::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(z.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn shape_errors() {
        let spec = MlpSpec::new(3, vec![4], 2).unwrap();
        let ps = spec.zero_params().unwrap();
        let x = Tensor::zeros(&[2, 4]);
        assert!(matches!(forward(&ps, &spec, &x), Err(crate::Error::Dimension(_))));
        assert!(MlpSpec::new(3, vec![4], 1).is_err());
        assert!(MlpSpec::new(3, vec![0], 2).is_err());
    }

    #[test]
    fn graph_and_plain_forward_agree() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let spec = MlpSpec::new(2, vec![16], 3).unwrap();
        let m = Mlp::init(spec, &mut rng).unwrap();
        let x = Tensor::from_rows(&[[0.2, 0.7], [0.9, 0.1]]).unwrap();
        let mut g = Graph::new(&m.params, GradMode::PARAMS);
        let xi = g.input(x.clone());
        let z = forward_graph(&mut g, &m.spec, xi).unwrap();
        assert_eq!(g.value(z), &m.logits(&x).unwrap());
    }
}
