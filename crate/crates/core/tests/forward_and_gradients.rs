use rand::Rng;
use sglr_core::graph::GradMode;
use sglr_core::loss::softmax_t;
use sglr_core::rng::rng_from;
use sglr_core::train::trades_loss;
use sglr_core::{Mlp, MlpSpec, Tensor};

/// Scalar-loop forward pass, written independently of the graph code.
fn naive_logits(m: &Mlp, x: &Tensor) -> Vec<Vec<f64>> {
    let layers = m.spec.hidden.len() + 1;
    (0..x.rows())
        .map(|r| {
            let mut h: Vec<f64> = x.row(r).to_vec();
            for l in 0..layers {
                let (w, b) = (m.params.value(2 * l), m.params.value(2 * l + 1));
                let mut out = vec![0.0; w.cols()];
                for (j, o) in out.iter_mut().enumerate() {
                    *o = b.as_slice()[j];
                    for (a, hv) in h.iter().enumerate() {
                        *o += hv * w.get(a, j);
                    }
                    if l + 1 < layers {
                        *o = o.max(0.0);
                    }
                }
                h = out;
            }
            h
        })
        .collect()
}

fn random_case(seed: u64) -> (Mlp, Tensor) {
    let mut rng = rng_from(seed);
    let d = rng.random_range(1..=5);
    let hidden: Vec<usize> = (0..rng.random_range(0..=3)).map(|_| rng.random_range(1..=7)).collect();
    let k = rng.random_range(2..=4);
    let mut m = Mlp::init(MlpSpec::new(d, hidden, k).unwrap(), &mut rng).unwrap();
    // Zero biases put a dead layer's successor exactly on the ReLU kink.
    for p in m.params.iter_mut().filter(|p| p.value.rank() == 1) {
        for v in p.value.as_mut_slice() {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    let n = rng.random_range(1..=5);
    let x = Tensor::matrix(n, d, (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect()).unwrap();
    (m, x)
}

#[test]
fn forward_matches_scalar_loops() {
    for seed in 0..200 {
        let (m, x) = random_case(seed);
        let z = m.logits(&x).unwrap();
        for (r, row) in naive_logits(&m, &x).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((z.get(r, j) - v).abs() < 1e-12, "seed {seed}");
            }
        }
    }
}

#[test]
fn probabilities_are_softmax_of_logits() {
    let (m, x) = random_case(7);
    assert_eq!(m.probs(&x, 2.0).unwrap(), softmax_t(&m.logits(&x).unwrap(), 2.0).unwrap());
}

fn central_diff(f: impl Fn(&[f64]) -> f64, w: &[f64], j: usize, h: f64) -> f64 {
    let mut up = w.to_vec();
    up[j] += h;
    let mut down = w.to_vec();
    down[j] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn cross_entropy_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..30 {
        let (m, x) = random_case(1000 + seed);
        let mut rng = rng_from(seed);
        let y = softmax_t(
            &Tensor::matrix(x.rows(), m.classes(), (0..x.rows() * m.classes()).map(|_| rng.random::<f64>() * 4.0).collect()).unwrap(),
            1.0,
        )
        .unwrap();
        let (_, g) = m.ce_loss_grad(&x, &y, GradMode::BOTH).unwrap();
        let w0 = m.params.flat_values();
        let loss_w = |w: &[f64]| {
            let mut p = m.clone();
            p.params.set_flat_values(w).unwrap();
            p.ce_loss_grad(&x, &y, GradMode::PARAMS).unwrap().0
        };
        let analytic: Vec<f64> = g.params.iter().flat_map(|t| t.as_slice().to_vec()).collect();
        for (j, a) in analytic.iter().enumerate() {
            worst = worst.max(rel(*a, central_diff(loss_w, &w0, j, 1e-5)));
        }
        let loss_x = |v: &[f64]| m.ce_loss_grad(&Tensor::matrix(x.rows(), x.cols(), v.to_vec()).unwrap(), &y, GradMode::PARAMS).unwrap().0;
        let gx = g.input.unwrap();
        for j in 0..x.len() {
            worst = worst.max(rel(gx.as_slice()[j], central_diff(loss_x, x.as_slice(), j, 1e-5)));
        }
    }
    // Loose bound: random draws may straddle a ReLU kink.
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn trades_gradient_matches_finite_differences() {
    let (m, x) = random_case(55);
    let x_adv = x.map(|v| v + 0.03);
    let y = Tensor::one_hot(&vec![0; x.rows()], m.classes()).unwrap();
    let (_, grads) = trades_loss(&m, &x, &x_adv, &y, 6.0).unwrap();
    let w0 = m.params.flat_values();
    let loss = |w: &[f64]| {
        let mut p = m.clone();
        p.params.set_flat_values(w).unwrap();
        trades_loss(&p, &x, &x_adv, &y, 6.0).unwrap().0
    };
    let analytic: Vec<f64> = grads.iter().flat_map(|t| t.as_slice().to_vec()).collect();
    for (j, a) in analytic.iter().enumerate() {
        assert!(rel(*a, central_diff(loss, &w0, j, 1e-5)) < 1e-4, "param {j}");
    }
}
