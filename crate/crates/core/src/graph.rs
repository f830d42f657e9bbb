//! Reverse-mode differentiation over a recorded tape.
//!
//! The tape covers exactly the operations an MLP classifier and its losses
//! need: affine maps, rectifiers, temperature log-softmax, soft-target cross
//! entropy and KL between two logit rows. Values are computed eagerly while
//! the tape is recorded; [`Graph::backward`] replays it in reverse.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::loss::{check_temperature, log_softmax_row_in_place};
use crate::params::ParamSet;
use crate::tensor::{matmul_acc, matmul_at_acc, matmul_bt, Tensor};
use crate::EPS_CLIP;

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
pub struct GradMode {
    pub params: bool,
    pub input: bool,
}

impl GradMode {
    pub const PARAMS: Self = Self { params: true, input: false };
    pub const INPUT: Self = Self { params: false, input: true };
    pub const BOTH: Self = Self { params: true, input: true };
}

#[derive(Debug)]
enum Op {
    Input,
    Param(usize),
    Affine {
        x: Var,
        w: Var,
        b: Var,
    },
    Relu(Var),
    LogSoftmax {
        x: Var,
        temperature: f64,
    },
    /// `−mean_i Σ_k target_ik · max(logp_ik, log εclip)`
    SoftCe {
        logp: Var,
        target: Tensor,
    },
    /// `mean_i Σ_k p_ik (logp_ik − logq_ik)` with `p = exp(logp)`
    Kl {
        logp: Var,
        logq: Var,
    },
    Add(Var, Var),
    Scale(Var, f64),
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameters, whose values stay in the borrowed [`ParamSet`].
    value: Option<Tensor>,
    needs_grad: bool,
}

/// Gradients produced by one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// One tensor per parameter, in [`ParamSet`] order; empty when not requested.
    pub params: Vec<Tensor>,
    /// Gradient with respect to the (first) input node, when requested.
    pub input: Option<Tensor>,
}

pub struct Graph<'p> {
    params: &'p ParamSet,
    mode: GradMode,
    nodes: Vec<Node>,
    input: Option<Var>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet, mode: GradMode) -> Self {
        Self { params, mode, nodes: Vec::new(), input: None }
    }

    fn push(&mut self, op: Op, value: Option<Tensor>, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value, needs_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match (&self.nodes[v.0].value, &self.nodes[v.0].op) {
            (Some(t), _) => t,
            (None, Op::Param(i)) => self.params.value(*i),
            _ => unreachable!("node without value"),
        }
    }

    /// Scalar value of a loss node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).as_slice()[0]
    }

    /// Records an input batch. The first input is the one whose gradient
    /// [`Gradients::input`] reports.
    pub fn input(&mut self, x: Tensor) -> Var {
        let needs = self.mode.input && self.input.is_none();
        let v = self.push(Op::Input, Some(x), needs);
        if self.input.is_none() {
            self.input = Some(v);
        }
        v
    }

    /// Records a constant input that never receives a gradient.
    pub fn constant(&mut self, x: Tensor) -> Var {
        self.push(Op::Input, Some(x), false)
    }

    pub fn param(&mut self, index: usize) -> Var {
        let needs = self.mode.params;
        self.push(Op::Param(index), None, needs)
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 {
            bail!(Dimension, "affine expects matrix input, matrix weight and vector bias");
        }
        let (n, k, m) = (xv.rows(), xv.cols(), wv.cols());
        if wv.rows() != k || bv.len() != m {
            bail!(Dimension, "affine shapes x {:?}, w {:?}, b {:?} are incompatible", xv.shape(), wv.shape(), bv.shape());
        }
        let mut out = vec![0.0; n * m];
        for row in out.chunks_exact_mut(m) {
            row.copy_from_slice(bv.as_slice());
        }
        matmul_acc(xv.as_slice(), wv.as_slice(), &mut out, n, k, m);
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        let t = Tensor::matrix(n, m, out)?;
        Ok(self.push(Op::Affine { x, w, b }, Some(t), needs))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| v.max(0.0));
        let needs = self.needs(x);
        self.push(Op::Relu(x), Some(t), needs)
    }

    pub fn log_softmax(&mut self, x: Var, temperature: f64) -> Result<Var> {
        check_temperature(temperature)?;
        let mut t = self.value(x).clone();
        let c = t.cols();
        for row in t.as_mut_slice().chunks_exact_mut(c) {
            log_softmax_row_in_place(row, temperature);
        }
        let needs = self.needs(x);
        Ok(self.push(Op::LogSoftmax { x, temperature }, Some(t), needs))
    }

    /// Mean soft-target cross entropy against log-probabilities.
    pub fn soft_ce(&mut self, logp: Var, target: Tensor) -> Result<Var> {
        let lp = self.value(logp);
        lp.ensure_same_shape(&target)?;
        let floor = libm::log(EPS_CLIP);
        let n = lp.rows() as f64;
        let s: f64 = lp.as_slice().iter().zip(target.as_slice()).filter(|(_, &q)| q != 0.0).map(|(&l, &q)| q * l.max(floor)).sum();
        let needs = self.needs(logp);
        let t = Tensor::new(vec![1], vec![-s / n])?;
        Ok(self.push(Op::SoftCe { logp, target }, Some(t), needs))
    }

    /// Mean `KL(p‖q)` where both arguments are log-probability rows.
    pub fn kl(&mut self, logp: Var, logq: Var) -> Result<Var> {
        let (a, b) = (self.value(logp), self.value(logq));
        a.ensure_same_shape(b)?;
        let n = a.rows() as f64;
        let s: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(&la, &lb)| libm::exp(la) * (la - lb)).sum();
        let needs = self.needs(logp) || self.needs(logq);
        let t = Tensor::new(vec![1], vec![s / n])?;
        Ok(self.push(Op::Kl { logp, logq }, Some(t), needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b), Some(t), needs))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a).map(|x| c * x);
        let needs = self.needs(a);
        self.push(Op::Scale(a, c), Some(t), needs)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Differentiates the scalar node `loss` with respect to every parameter
    /// and the input batch, as selected by the graph's [`GradMode`].
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            bail!(State, "no recorded forward pass for this loss");
        }
        if self.value(loss).len() != 1 {
            bail!(State, "backward needs a scalar loss, got shape {:?}", self.value(loss).shape());
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(&[1], 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Input | Op::Param(_) => {
                    grads[idx] = Some(g);
                }
                Op::Affine { x, w, b } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let (n, k, m) = (xv.rows(), xv.cols(), wv.cols());
                    if self.needs(*x) {
                        let mut dx = vec![0.0; n * k];
                        matmul_bt(g.as_slice(), wv.as_slice(), &mut dx, n, k, m);
                        accumulate(&mut grads, *x, Tensor::matrix(n, k, dx)?)?;
                    }
                    if self.needs(*w) {
                        let mut dw = vec![0.0; k * m];
                        matmul_at_acc(xv.as_slice(), g.as_slice(), &mut dw, n, k, m);
                        accumulate(&mut grads, *w, Tensor::matrix(k, m, dw)?)?;
                    }
                    if self.needs(*b) {
                        let mut db = vec![0.0; m];
                        for row in g.iter_rows() {
                            for (d, &v) in db.iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads, *b, Tensor::new(vec![m], db)?)?;
                    }
                }
                Op::Relu(x) => {
                    let out = node.value.as_ref().expect("relu value");
                    let dx = g.zip_map(out, |gv, o| if o > 0.0 { gv } else { 0.0 })?;
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::LogSoftmax { x, temperature } => {
                    let out = node.value.as_ref().expect("log-softmax value");
                    let c = out.cols();
                    let mut dx = g.clone();
                    for (drow, orow) in dx.as_mut_slice().chunks_exact_mut(c).zip(out.as_slice().chunks_exact(c)) {
                        let gsum: f64 = drow.iter().sum();
                        for (d, &lo) in drow.iter_mut().zip(orow) {
                            *d = (*d - libm::exp(lo) * gsum) / temperature;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::SoftCe { logp, target } => {
                    let scale = g.as_slice()[0];
                    let lp = self.value(*logp);
                    let n = lp.rows() as f64;
                    let floor = libm::log(EPS_CLIP);
                    let d = lp.zip_map(target, |l, q| if l > floor { -scale * q / n } else { 0.0 })?;
                    accumulate(&mut grads, *logp, d)?;
                }
                Op::Kl { logp, logq } => {
                    let scale = g.as_slice()[0];
                    let (a, b) = (self.value(*logp), self.value(*logq));
                    let n = a.rows() as f64;
                    if self.needs(*logp) {
                        let d = a.zip_map(b, |la, lb| scale * libm::exp(la) * (la - lb + 1.0) / n)?;
                        accumulate(&mut grads, *logp, d)?;
                    }
                    if self.needs(*logq) {
                        let d = a.map(|la| -scale * libm::exp(la) / n);
                        accumulate(&mut grads, *logq, d)?;
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone())?;
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g)?;
                    }
                }
                Op::Scale(a, c) => {
                    accumulate(&mut grads, *a, g.map(|v| c * v))?;
                }
            }
        }

        let mut out = Gradients { params: Vec::new(), input: None };
        if self.mode.params {
            out.params = self.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            for (idx, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
                if let (Op::Param(i), Some(g)) = (&node.op, &grads[idx]) {
                    let dst = out.params[*i].as_mut_slice();
                    for (d, &v) in dst.iter_mut().zip(g.as_slice()) {
                        *d += v;
                    }
                }
            }
        }
        if self.mode.input {
            if let Some(v) = self.input {
                out.input = Some(match grads.get(v.0).and_then(|g| g.clone()) {
                    Some(g) => g,
                    None => Tensor::zeros(self.value(v).shape()),
                });
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => {
            existing.ensure_same_shape(&g)?;
            for (e, x) in existing.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(g),
    }
    Ok(())
}

/// Parameter gradients of a recorded loss.
pub fn backward_params(graph: &Graph<'_>, loss: Var) -> Result<Vec<Tensor>> {
    if !graph.mode.params {
        bail!(State, "graph was not recorded with parameter gradients enabled");
    }
    Ok(graph.backward(loss)?.params)
}

/// Input-batch gradient of a recorded loss.
pub fn backward_input(graph: &Graph<'_>, loss: Var) -> Result<Tensor> {
    if !graph.mode.input || graph.input.is_none() {
        bail!(State, "graph was not recorded with an input gradient");
    }
    graph.backward(loss)?.input.ok_or_else(|| crate::Error::State("missing input gradient".into()))
}
