//! Exact numerical checks of the identities behind soft-label training.
//!
//! Every check evaluates both sides of an identity (or an inequality) on
//! concrete numbers and reports the residual against a tolerance. Entropies
//! use the clamped logarithm [`crate::loss::clog`], applied identically on
//! both sides so the algebra stays exact.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::loss::{clog, row_cross_entropy, row_entropy, row_kl};
use crate::rng::{rng_from, LabRng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub trial: String,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64, tolerance: f64, trial: String) -> Self {
        let residual = (lhs - rhs).abs();
        Self { lhs, rhs, residual, tolerance, pass: residual <= tolerance, trial }
    }
}

pub const IDENTITY_TOL: f64 = 1e-12;
pub const RISK_TOL: f64 = 1e-10;
pub const LOG_SUM_SLACK: f64 = 1e-12;

fn check_row(p: &[f64], name: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > crate::loss::SIMPLEX_TOL {
        bail!(Validation, "{} is not a probability vector", name);
    }
    Ok(())
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        bail!(Dimension, "vectors of length {} and {}", a.len(), b.len());
    }
    Ok(())
}

fn mix(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
}

/// `H(q′,p) = (1−α)H(q,p) + αH(p,q) − α·KL(p‖q)` with `q′ = (1−α)q + αp`.
pub fn check_self_mix(q: &[f64], p: &[f64], alpha: f64) -> Result<IdentityReport> {
    check_same_len(q, p)?;
    check_row(q, "q")?;
    check_row(p, "p")?;
    let q1 = mix(q, p, alpha);
    let lhs = row_cross_entropy(&q1, p);
    let rhs = (1.0 - alpha) * row_cross_entropy(q, p) + alpha * row_cross_entropy(p, q) - alpha * row_kl(p, q);
    Ok(IdentityReport::new(lhs, rhs, IDENTITY_TOL, format!("K={} alpha={}", q.len(), alpha)))
}

/// Right-hand side of the first identity with the opposite sign on the KL term.
pub fn self_mix_plus_form(q: &[f64], p: &[f64], alpha: f64) -> f64 {
    (1.0 - alpha) * row_cross_entropy(q, p) + alpha * row_cross_entropy(p, q) + alpha * row_kl(p, q)
}

/// `H(q̃,p) = (1−α)H(q,p) + α[KL(p_t‖p) + H(p_t)]` with `q̃ = (1−α)q + α·p_t`.
pub fn check_target_mix(q: &[f64], p_t: &[f64], p: &[f64], alpha: f64) -> Result<IdentityReport> {
    check_same_len(q, p)?;
    check_same_len(p_t, p)?;
    check_row(q, "q")?;
    check_row(p_t, "p_t")?;
    check_row(p, "p")?;
    let qt = mix(q, p_t, alpha);
    let lhs = row_cross_entropy(&qt, p);
    let rhs = (1.0 - alpha) * row_cross_entropy(q, p) + alpha * (row_kl(p_t, p) + row_entropy(p_t));
    Ok(IdentityReport::new(lhs, rhs, IDENTITY_TOL, format!("K={} alpha={}", q.len(), alpha)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogSumReport {
    /// `Σ aᵢ log(aᵢ/bᵢ)`
    pub lhs: f64,
    /// `(Σa) log(Σa/Σb)`
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    /// All ratios `aᵢ/bᵢ` agree to relative `1e-12`.
    pub ratios_constant: bool,
    /// `|slack| ≤ 1e-12`.
    pub equality: bool,
}

/// Log-sum inequality with `0·log(0/b) = 0`; every `bᵢ` must be positive.
pub fn check_log_sum(a: &[f64], b: &[f64]) -> Result<LogSumReport> {
    check_same_len(a, b)?;
    if a.is_empty() || a.iter().any(|&v| !(v >= 0.0)) || b.iter().any(|&v| !(v > 0.0)) {
        bail!(Validation, "need a ≥ 0 and b > 0");
    }
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * libm::log(x / y) };
    let lhs: f64 = a.iter().zip(b).map(|(&x, &y)| term(x, y)).sum();
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let rhs = term(sa, sb);
    let slack = lhs - rhs;
    let r0 = a[0] / b[0];
    let ratios_constant = a.iter().zip(b).all(|(&x, &y)| (x / y - r0).abs() <= 1e-12 * r0.abs().max(1e-300));
    Ok(LogSumReport { lhs, rhs, slack, holds: slack >= -LOG_SUM_SLACK, ratios_constant, equality: slack.abs() <= LOG_SUM_SLACK })
}

/// Per-example loss `ℓ(f(x), k)` of a probability row against class `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLoss {
    /// `−log f_k`
    CrossEntropy,
    /// `‖f − e_k‖₁ = 2 − 2f_k`, a symmetric loss.
    Mae,
}

impl PointLoss {
    pub fn eval(self, row: &[f64], k: usize) -> f64 {
        match self {
            PointLoss::CrossEntropy => -clog(row[k]),
            PointLoss::Mae => row.iter().enumerate().map(|(j, &f)| (f - if j == k { 1.0 } else { 0.0 }).abs()).sum(),
        }
    }
}

/// `−(1/(N(K−1))) Σᵢ Σₖ fₖ(xᵢ) log fₖ(xᵢ)` with `0·log 0 = 0`.
pub fn g_term(probs: &Tensor) -> Result<f64> {
    let (n, k) = (probs.rows(), probs.cols());
    if n == 0 || k < 2 {
        bail!(Dimension, "need N ≥ 1 rows and K ≥ 2 classes");
    }
    let s: f64 = probs.as_slice().iter().map(|&f| if f > 0.0 { f * libm::log(f) } else { 0.0 }).sum();
    Ok(-s / (n as f64 * (k - 1) as f64))
}

/// The loss-generic functional `−(1/(N(K−1))) Σᵢ Σₖ ℓ(f(xᵢ), k)`.
pub fn g_loss(probs: &Tensor, loss: PointLoss) -> f64 {
    let (n, k) = (probs.rows(), probs.cols());
    let s: f64 = probs.iter_rows().map(|r| (0..k).map(|c| loss.eval(r, c)).sum::<f64>()).sum();
    -s / (n as f64 * (k - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricRiskReport {
    pub identity: IdentityReport,
    /// Clean empirical risk `R_S(f)`.
    pub clean_risk: f64,
    /// Functional that closes the identity.
    pub g_loss: f64,
    /// [`g_term`] of the same predictions.
    pub g_entropy: f64,
}

fn check_labels(probs: &Tensor, labels: &[usize]) -> Result<()> {
    if probs.rows() != labels.len() || probs.rows() == 0 {
        bail!(Dimension, "{} rows for {} labels", probs.rows(), labels.len());
    }
    if labels.iter().any(|&y| y >= probs.cols()) {
        bail!(Validation, "label out of range");
    }
    crate::loss::validate_simplex(probs)
}

/// Noisy risk under wrong-class-uniform noise at rate `η`, computed as an
/// exact expectation, against `R(1 − ηK/(K−1)) − η·G_ℓ`.
pub fn risk_decomposition_symmetric(probs: &Tensor, labels: &[usize], eta: f64, loss: PointLoss) -> Result<SymmetricRiskReport> {
    check_labels(probs, labels)?;
    let k = probs.cols();
    if !(0.0..1.0).contains(&eta) {
        bail!(Parameter, "noise rate must be in [0,1)");
    }
    let n = labels.len() as f64;
    let kf = k as f64;
    let mut lhs = 0.0;
    let mut clean = 0.0;
    for (row, &y) in probs.iter_rows().zip(labels) {
        let ly = loss.eval(row, y);
        let others: f64 = (0..k).filter(|&c| c != y).map(|c| loss.eval(row, c)).sum();
        lhs += (1.0 - eta) * ly + eta / (kf - 1.0) * others;
        clean += ly;
    }
    lhs /= n;
    clean /= n;
    let g = g_loss(probs, loss);
    let rhs = clean * (1.0 - eta * kf / (kf - 1.0)) - eta * g;
    Ok(SymmetricRiskReport {
        identity: IdentityReport::new(lhs, rhs, RISK_TOL, format!("N={} K={} eta={}", labels.len(), k, eta)),
        clean_risk: clean,
        g_loss: g,
        g_entropy: g_term(probs)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    pub clean_risk_fstar: f64,
    pub clean_risk_f: f64,
    pub noisy_risk_fstar: f64,
    pub noisy_risk_f: f64,
    /// `R^η(f*) ≤ R^η(f)` (with `1e-12` slack).
    pub holds: bool,
}

/// Expected risk when label `y` is replaced by `k` with probability `T[y][k]`.
pub fn noisy_risk(probs: &Tensor, labels: &[usize], transition: &Tensor, loss: PointLoss) -> Result<f64> {
    check_labels(probs, labels)?;
    crate::data::validate_transition(transition, probs.cols())?;
    let k = probs.cols();
    let total: f64 =
        probs.iter_rows().zip(labels).map(|(row, &y)| (0..k).map(|c| transition.get(y, c) * loss.eval(row, c)).sum::<f64>()).sum();
    Ok(total / labels.len() as f64)
}

fn clean_risk(probs: &Tensor, labels: &[usize], loss: PointLoss) -> f64 {
    probs.iter_rows().zip(labels).map(|(r, &y)| loss.eval(r, y)).sum::<f64>() / labels.len() as f64
}

/// Compares the noisy risks of a clean-risk minimiser `f*` and a competitor.
pub fn risk_ordering_asymmetric(
    probs_fstar: &Tensor,
    probs_f: &Tensor,
    labels: &[usize],
    transition: &Tensor,
    loss: PointLoss,
) -> Result<OrderingReport> {
    probs_fstar.ensure_same_shape(probs_f)?;
    let noisy_risk_fstar = noisy_risk(probs_fstar, labels, transition, loss)?;
    let noisy_risk_f = noisy_risk(probs_f, labels, transition, loss)?;
    Ok(OrderingReport {
        clean_risk_fstar: clean_risk(probs_fstar, labels, loss),
        clean_risk_f: clean_risk(probs_f, labels, loss),
        noisy_risk_fstar,
        noisy_risk_f,
        holds: noisy_risk_fstar <= noisy_risk_f + 1e-12,
    })
}

/// A finite joint world `p(x) · Q(w) · p(y | x, w)` with model predictions
/// `f(ŷ | x, w)`. Conditional tables are indexed `[w][x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWorld {
    pub px: Vec<f64>,
    pub qw: Vec<f64>,
    pub p_y: Vec<Vec<Vec<f64>>>,
    pub f: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XentDecomposition {
    pub identity: IdentityReport,
    /// `H_f(ŷ | x, w)`
    pub expected_xent: f64,
    /// `H(y | x)`
    pub cond_entropy: f64,
    /// `E_{x,w} KL(p(y|x,w) ‖ f(·|x,w))`
    pub expected_kl: f64,
    /// `I(w; y | x)`
    pub mutual_info: f64,
    /// `E_{x,w} KL(p(y|x) ‖ f(·|x,w))`, the marginal-label variant.
    pub expected_kl_marginal: f64,
}

impl DiscreteWorld {
    /// Random world with uniform `Q(w)`; conditionals are softmaxes of
    /// `N(0, 4)` logits.
    pub fn random(nx: usize, k: usize, nw: usize, seed: u64) -> Result<Self> {
        if nx == 0 || k < 2 || nw == 0 {
            bail!(Parameter, "need |X| ≥ 1, K ≥ 2, |W| ≥ 1");
        }
        let mut rng = rng_from(seed);
        let px = random_simplex(&mut rng, nx);
        let qw = alloc::vec![1.0 / nw as f64; nw];
        let table =
            |rng: &mut LabRng| -> Vec<Vec<Vec<f64>>> { (0..nw).map(|_| (0..nx).map(|_| random_softmax(rng, k, 2.0)).collect()).collect() };
        let p_y = table(&mut rng);
        let f = table(&mut rng);
        let w = Self { px, qw, p_y, f };
        w.validate()?;
        Ok(w)
    }

    pub fn classes(&self) -> usize {
        self.p_y[0][0].len()
    }

    pub fn validate(&self) -> Result<()> {
        check_row(&self.px, "p(x)")?;
        check_row(&self.qw, "Q(w)")?;
        let (nw, nx) = (self.qw.len(), self.px.len());
        for t in [&self.p_y, &self.f] {
            if t.len() != nw || t.iter().any(|r| r.len() != nx) {
                bail!(Dimension, "conditional tables must be |W| × |X| × K");
            }
            let k = t[0][0].len();
            for row in t.iter().flatten() {
                check_same_len(row, &t[0][0])?;
                check_row(row, "conditional row")?;
            }
            if k < 2 {
                bail!(Dimension, "need K ≥ 2");
            }
        }
        check_same_len(&self.p_y[0][0], &self.f[0][0])
    }

    /// `p(y | x)` for every `x`, marginalising `w` under `Q`.
    pub fn marginal(&self, cond: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
        let k = self.classes();
        (0..self.px.len())
            .map(|x| {
                let mut m = alloc::vec![0.0; k];
                for (w, &q) in self.qw.iter().enumerate() {
                    for (mj, &v) in m.iter_mut().zip(&cond[w][x]) {
                        *mj += q * v;
                    }
                }
                m
            })
            .collect()
    }

    /// `I(w; y | x) = E_{x,w} KL(p(y|x,w) ‖ p(y|x))` for an arbitrary
    /// conditional table and its marginal.
    pub fn conditional_mi(&self, cond: &[Vec<Vec<f64>>], marginal: &[Vec<f64>]) -> f64 {
        let mut mi = 0.0;
        for (x, &px) in self.px.iter().enumerate() {
            for (w, &q) in self.qw.iter().enumerate() {
                mi += px * q * row_kl(&cond[w][x], &marginal[x]);
            }
        }
        mi
    }
}

/// `H_f(ŷ|x,w) = H(y|x) + E KL(p(y|x,w) ‖ f) − I(w;y|x)` by enumeration.
pub fn decompose_xent_discrete(world: &DiscreteWorld) -> Result<XentDecomposition> {
    world.validate()?;
    let marg = world.marginal(&world.p_y);
    let (mut xent, mut ekl, mut ekl_marg, mut h) = (0.0, 0.0, 0.0, 0.0);
    for (x, &px) in world.px.iter().enumerate() {
        h += px * row_entropy(&marg[x]);
        for (w, &q) in world.qw.iter().enumerate() {
            let (p, f) = (&world.p_y[w][x], &world.f[w][x]);
            xent += px * q * row_cross_entropy(p, f);
            ekl += px * q * row_kl(p, f);
            ekl_marg += px * q * row_kl(&marg[x], f);
        }
    }
    let mi = world.conditional_mi(&world.p_y, &marg);
    Ok(XentDecomposition {
        identity: IdentityReport::new(
            xent,
            h + ekl - mi,
            RISK_TOL,
            format!("|X|={} K={} |W|={}", world.px.len(), world.classes(), world.qw.len()),
        ),
        expected_xent: xent,
        cond_entropy: h,
        expected_kl: ekl,
        mutual_info: mi,
        expected_kl_marginal: ekl_marg,
    })
}

/// `I(y*; w | x)` where `p(y*|x,w) = λ·p(y|x,w) + (1−λ)/K`.
pub fn soft_label_mi(world: &DiscreteWorld, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        bail!(Parameter, "lambda must be in [0,1]");
    }
    world.validate()?;
    let k = world.classes();
    let u = 1.0 / k as f64;
    let soften = |row: &[f64]| -> Vec<f64> { row.iter().map(|&v| lambda * v + (1.0 - lambda) * u).collect() };
    let cond: Vec<Vec<Vec<f64>>> = world.p_y.iter().map(|t| t.iter().map(|r| soften(r)).collect()).collect();
    let marg: Vec<Vec<f64>> = world.marginal(&world.p_y).iter().map(|r| soften(r)).collect();
    Ok(world.conditional_mi(&cond, &marg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IiwReductionReport {
    pub lambdas: Vec<f64>,
    /// `values[s][j]`: seed `s`, `lambdas[j]`.
    pub values: Vec<Vec<f64>>,
    /// Hard-label `I(y; w | x)` per seed.
    pub hard: Vec<f64>,
    /// Every seed has some `λ < 1` with a strictly smaller value than hard labels.
    pub reduction_found: bool,
    /// `λ = 1` reproduces the hard value exactly on every seed.
    pub hard_endpoint_exact: bool,
    /// `λ = 0` gives exactly zero on every seed.
    pub uniform_endpoint_zero: bool,
}

/// Soft-label mutual information over a `λ` grid on random enumerable worlds.
pub fn iiw_reduction_experiment(lambdas: &[f64], seeds: &[u64], nx: usize, k: usize, nw: usize) -> Result<IiwReductionReport> {
    let mut values = Vec::new();
    let mut hard = Vec::new();
    let (mut reduction_found, mut hard_exact, mut zero_exact) = (true, true, true);
    for &s in seeds {
        let world = DiscreteWorld::random(nx, k, nw, s)?;
        let h = world.conditional_mi(&world.p_y, &world.marginal(&world.p_y));
        let row: Vec<f64> = lambdas.iter().map(|&l| soft_label_mi(&world, l)).collect::<Result<_>>()?;
        reduction_found &= lambdas.iter().zip(&row).any(|(&l, &v)| l < 1.0 && v < h);
        for (&l, &v) in lambdas.iter().zip(&row) {
            if l == 1.0 {
                hard_exact &= v == h;
            }
            if l == 0.0 {
                zero_exact &= v == 0.0;
            }
        }
        values.push(row);
        hard.push(h);
    }
    Ok(IiwReductionReport {
        lambdas: lambdas.to_vec(),
        values,
        hard,
        reduction_found,
        hard_endpoint_exact: hard_exact,
        uniform_endpoint_zero: zero_exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IiwTrend {
    pub hard_growth: f64,
    pub sglr_growth: f64,
    pub sglr_final_lower: bool,
}

/// Growth (last minus first) of two IIW trajectories, plus whether the SGLR
/// run ends lower.
pub fn compare_iiw_trends(hard: &[f64], sglr: &[f64]) -> Result<IiwTrend> {
    let (Some(h0), Some(h1), Some(s0), Some(s1)) = (hard.first(), hard.last(), sglr.first(), sglr.last()) else {
        bail!(State, "empty IIW trajectory");
    };
    Ok(IiwTrend { hard_growth: h1 - h0, sglr_growth: s1 - s0, sglr_final_lower: s1 < h1 })
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    v
}

/// Softmax of `N(0, scale²)`-ish logits (uniform in `[−√3·scale, √3·scale]`).
pub fn random_softmax<R: Rng>(rng: &mut R, k: usize, scale: f64) -> Vec<f64> {
    let a = libm::sqrt(3.0) * scale;
    let mut z: Vec<f64> = (0..k).map(|_| rng.random_range(-a..a)).collect();
    crate::loss::softmax_row_in_place(&mut z, 1.0);
    z
}

/// Random transition matrix satisfying the asymmetric tolerance condition.
pub fn random_transition<R: Rng>(rng: &mut R, k: usize) -> Tensor {
    let mut t = Tensor::zeros(&[k, k]);
    for y in 0..k {
        loop {
            let eta_y = rng.random::<f64>() * (k as f64 - 1.0) / k as f64;
            let w: Vec<f64> = (0..k - 1).map(|_| 0.5 + rng.random::<f64>()).collect();
            let ws: f64 = w.iter().sum();
            let mut off = w.iter().map(|v| eta_y * v / ws);
            let row = t.row_mut(y);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if c == y { 1.0 - eta_y } else { off.next().unwrap_or(0.0) };
            }
            let s: f64 = row.iter().sum();
            row[y] += 1.0 - s;
            let keep = row[y];
            if row.iter().enumerate().all(|(c, &v)| c == y || v < keep) {
                break;
            }
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub check: &'static str,
    pub trials: usize,
    pub passed: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl TrialSummary {
    fn new(check: &'static str, tolerance: f64) -> Self {
        Self { check, trials: 0, passed: 0, max_residual: 0.0, tolerance }
    }

    fn add(&mut self, ok: bool, residual: f64) {
        self.trials += 1;
        self.passed += ok as usize;
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
        }
    }

    pub fn all_pass(&self) -> bool {
        self.trials > 0 && self.passed == self.trials
    }
}

fn trial_rng(seed: u64, name: &str) -> LabRng {
    rng_from(crate::rng::sub_seed(seed, name))
}

pub fn self_mix_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut rng = trial_rng(seed, "self_mix");
    let mut s = TrialSummary::new("self_mix", IDENTITY_TOL);
    for _ in 0..n {
        let k = rng.random_range(2..=10);
        let (q, p) = (random_simplex(&mut rng, k), random_simplex(&mut rng, k));
        let r = check_self_mix(&q, &p, rng.random())?;
        s.add(r.pass, r.residual);
    }
    Ok(s)
}

pub fn target_mix_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut rng = trial_rng(seed, "target_mix");
    let mut s = TrialSummary::new("target_mix", IDENTITY_TOL);
    for _ in 0..n {
        let k = rng.random_range(2..=10);
        let q = random_simplex(&mut rng, k);
        let pt = random_simplex(&mut rng, k);
        let p = random_simplex(&mut rng, k);
        let r = check_target_mix(&q, &pt, &p, rng.random())?;
        s.add(r.pass, r.residual);
    }
    Ok(s)
}

pub fn log_sum_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut rng = trial_rng(seed, "log-sum");
    let mut s = TrialSummary::new("log-sum", LOG_SUM_SLACK);
    for _ in 0..n {
        let len = rng.random_range(1..=12);
        let a: Vec<f64> = (0..len).map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { 10.0 * rng.random::<f64>() }).collect();
        let b: Vec<f64> = (0..len).map(|_| 1e-3 + 10.0 * rng.random::<f64>()).collect();
        let r = check_log_sum(&a, &b)?;
        s.add(r.holds, (-r.slack).max(0.0));
    }
    Ok(s)
}

/// Random samples under wrong-class noise, cross-entropy and MAE alternating.
pub fn noise_symmetric_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut rng = trial_rng(seed, "noise-symmetric");
    let mut s = TrialSummary::new("noise-symmetric", RISK_TOL);
    for t in 0..n {
        let k = rng.random_range(2..=10);
        let m = rng.random_range(1..=30);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| random_simplex(&mut rng, k)).collect();
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        let eta = rng.random::<f64>() * (1.0 - 1.0 / k as f64);
        let loss = if t % 2 == 0 { PointLoss::CrossEntropy } else { PointLoss::Mae };
        let r = risk_decomposition_symmetric(&Tensor::from_rows(&rows)?, &labels, eta, loss)?;
        s.add(r.identity.pass, r.identity.residual);
    }
    Ok(s)
}

/// Zero-clean-risk `f*` (one-hot on the true labels) against random
/// competitors under random admissible transition matrices, MAE loss.
pub fn noise_asymmetric_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut rng = trial_rng(seed, "noise-asymmetric");
    let mut s = TrialSummary::new("noise-asymmetric", 0.0);
    for _ in 0..n {
        let k = rng.random_range(2..=8);
        let m = rng.random_range(1..=30);
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        let fstar = Tensor::one_hot(&labels, k)?;
        let rows: Vec<Vec<f64>> = (0..m).map(|_| random_simplex(&mut rng, k)).collect();
        let t = random_transition(&mut rng, k);
        let r = risk_ordering_asymmetric(&fstar, &Tensor::from_rows(&rows)?, &labels, &t, PointLoss::Mae)?;
        let ok = r.holds && r.clean_risk_fstar == 0.0;
        s.add(ok, (r.noisy_risk_fstar - r.noisy_risk_f).max(0.0));
    }
    Ok(s)
}

/// Residual of the cross-entropy decomposition plus the MI sign check.
pub fn xent_decomposition_trials(n: usize, seed: u64) -> Result<TrialSummary> {
    let mut s = TrialSummary::new("xent_decomposition", RISK_TOL);
    for t in 0..n {
        let d = decompose_xent_discrete(&DiscreteWorld::random(4, 3, 8, crate::rng::indexed_seed(seed, &[t as u64]))?)?;
        s.add(d.identity.pass && d.mutual_info >= 0.0, d.identity.residual);
    }
    Ok(s)
}
