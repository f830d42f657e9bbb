//! Named parameter tensors with matching gradient slots.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Ordered collection of named tensors; gradients are shape-matched one to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> Result<usize> {
        let name = name.into();
        if self.entries.iter().any(|p| p.name == name) {
            bail!(Validation, "duplicate parameter name {:?}", name);
        }
        let grad = Tensor::zeros(value.shape());
        self.entries.push(Param { name, value, grad });
        Ok(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.entries.iter_mut()
    }

    pub fn get(&self, i: usize) -> &Param {
        &self.entries[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Param {
        &mut self.entries[i]
    }

    pub fn value(&self, i: usize) -> &Tensor {
        &self.entries[i].value
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.entries.iter().find(|p| p.name == name)
    }

    /// Total scalar count across all tensors.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.grad.as_mut_slice().fill(0.0);
        }
    }

    /// Replaces every gradient slot; shapes must match the values.
    pub fn set_grads(&mut self, grads: Vec<Tensor>) -> Result<()> {
        if grads.len() != self.entries.len() {
            bail!(Dimension, "{} gradients for {} parameters", grads.len(), self.entries.len());
        }
        for (p, g) in self.entries.iter().zip(&grads) {
            p.value.ensure_same_shape(g)?;
        }
        for (p, g) in self.entries.iter_mut().zip(grads) {
            p.grad = g;
        }
        Ok(())
    }

    /// Values flattened in declaration order.
    pub fn flat_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.numel());
        for p in &self.entries {
            out.extend_from_slice(p.value.as_slice());
        }
        out
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.numel());
        for p in &self.entries {
            out.extend_from_slice(p.grad.as_slice());
        }
        out
    }

    pub fn set_flat_values(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.numel() {
            bail!(Dimension, "{} values for {} parameters", flat.len(), self.numel());
        }
        let mut off = 0;
        for p in &mut self.entries {
            let n = p.value.len();
            p.value.as_mut_slice().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

/// Euclidean norm of the flattened concatenation of all gradient tensors.
pub fn grad_norm(params: &ParamSet) -> f64 {
    libm::sqrt(params.iter().flat_map(|p| p.grad.as_slice().iter()).map(|g| g * g).sum::<f64>())
}
