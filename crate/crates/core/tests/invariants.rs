use proptest::prelude::*;
use sglr_core::attack::{project, AttackConfig};
use sglr_core::labels::{blend_clean_adv, self_refine, uniform_ls};
use sglr_core::loss::softmax_t;
use sglr_core::metrics::ece_binned;
use sglr_core::optim::Sgd;
use sglr_core::params::ParamSet;
use sglr_core::Tensor;

fn logits(rows: usize, k: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-30.0f64..30.0, rows * k).prop_map(move |v| Tensor::matrix(rows, k, v).unwrap())
}

fn shaped() -> impl Strategy<Value = (Tensor, Tensor, Vec<usize>)> {
    (1usize..6, 2usize..8).prop_flat_map(|(n, k)| (logits(n, k), logits(n, k), prop::collection::vec(0..k, n)))
}

fn on_simplex(t: &Tensor) -> bool {
    t.iter_rows().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-12 && r.iter().all(|&v| v >= 0.0))
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions((z, _, _) in shaped(), t in 0.1f64..10.0) {
        prop_assert!(on_simplex(&softmax_t(&z, t).unwrap()));
    }

    #[test]
    fn label_operators_stay_on_simplex((za, zc, y) in shaped(), r in 0.0f64..=1.0, lambda in 0.0f64..=1.0) {
        let k = za.cols();
        let hard = Tensor::one_hot(&y, k).unwrap();
        let (pa, pc) = (softmax_t(&za, 1.0).unwrap(), softmax_t(&zc, 1.0).unwrap());
        prop_assert!(on_simplex(&uniform_ls(&hard, r).unwrap()));
        prop_assert!(on_simplex(&self_refine(&hard, &pa, r).unwrap()));
        prop_assert!(on_simplex(&blend_clean_adv(&pc, &pa, lambda).unwrap()));
    }

    #[test]
    fn refinement_keeps_the_given_class_mass((za, _, y) in shaped(), r in 0.0f64..=1.0) {
        let hard = Tensor::one_hot(&y, za.cols()).unwrap();
        let out = self_refine(&hard, &softmax_t(&za, 1.0).unwrap(), r).unwrap();
        for (i, &c) in y.iter().enumerate() {
            prop_assert!(out.get(i, c) >= 1.0 - r - 1e-12);
        }
    }

    #[test]
    fn projection_lands_in_ball_and_box(
        x in prop::collection::vec(0.0f64..=1.0, 1..20),
        noise in prop::collection::vec(-3.0f64..3.0, 20),
        eps in 0.0f64..1.0,
    ) {
        let n = x.len();
        let clean = Tensor::matrix(1, n, x.clone()).unwrap();
        let mut adv = Tensor::matrix(1, n, x.iter().zip(&noise).map(|(a, b)| a + b).collect()).unwrap();
        project(&mut adv, &clean, &AttackConfig::pgd(eps, 1, false));
        for (a, c) in adv.as_slice().iter().zip(&x) {
            prop_assert!((a - c).abs() <= eps + 1e-15);
            prop_assert!((0.0..=1.0).contains(a));
        }
    }

    #[test]
    fn ece_lies_in_unit_interval((z, _, y) in shaped(), bins in 1usize..20) {
        let rep = ece_binned(&softmax_t(&z, 1.0).unwrap(), &y, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.ece));
        prop_assert!((rep.ece - rep.ece_from_bins()).abs() < 1e-12);
    }

    #[test]
    fn weight_decay_contracts_without_gradient(
        w in prop::collection::vec(-5.0f64..5.0, 1..10),
        lr in 0.001f64..1.0,
        wd in 0.0f64..0.5,
    ) {
        let mut ps = ParamSet::new();
        ps.push("w", Tensor::new(vec![w.len()], w.clone()).unwrap()).unwrap();
        ps.zero_grads();
        Sgd::new(0.9, wd).step(&mut ps, lr);
        for (after, before) in ps.flat_values().iter().zip(&w) {
            prop_assert!((after - (1.0 - lr * wd) * before).abs() < 1e-12);
        }
    }
}
