mod common;

use common::*;
use proptest::prelude::*;

use fibrelab::eigensolve::{rayleigh_quotient, smallest_eigenpairs, verify_pairs, SolveConfig};
use fibrelab::geometry::Epsilon;
use fibrelab::operators::{assemble_full, DiscreteOperator, GridSpec, StencilOrder};

fn small_torus(cos: Vec<f64>, sin: Vec<f64>, eps: f64, order: StencilOrder) -> DiscreteOperator {
    let g = torus(cos, sin);
    assemble_full(
        &g,
        Epsilon::new(eps).unwrap(),
        &GridSpec::new(24, 16, order).with_offset(0.5),
    )
    .unwrap()
}

fn order() -> impl Strategy<Value = StencilOrder> {
    prop_oneof![Just(StencilOrder::Second), Just(StencilOrder::Fourth)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn returned_pairs_meet_the_contract(
        (cos, sin) in warp_coeffs(),
        (n, kc, ks) in curvature_coeffs(),
        order in order(),
        eps in 0.05..0.5f64,
        k in 1..8usize,
        seed in 0..1000u64,
    ) {
        let mut ops = vec![(small_torus(cos, sin, eps, order), -1.0)];
        let w = strip(n, kc, ks);
        if let Ok(e) = w.validate_epsilon(eps) {
            ops.push((assemble_full(&w, e, &GridSpec::new(24, 16, order).with_offset(0.5)).unwrap(), 0.0));
        }
        for (op, shift) in ops {
            let cfg = SolveConfig::new(k).with_shift(shift).with_seed(seed);
            let pairs = smallest_eigenpairs(&op, &cfg).unwrap();
            prop_assert_eq!(pairs.len(), k);
            prop_assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
            let v = verify_pairs(&op, &pairs);
            prop_assert!(v.max_residual <= cfg.tol);
            prop_assert!(v.max_gram_offdiag.max(v.max_gram_diag_dev) <= 1e-8);
            for (l, x) in pairs.values.iter().zip(&pairs.vectors) {
                let rq = rayleigh_quotient(&op, x);
                prop_assert!((l - rq).abs() <= 1e-12 * l.abs() + 1e-14, "{} vs {}", l, rq);
            }
            let dense = dense_pencil_eigenvalues(&op);
            for (l, d) in pairs.values.iter().zip(&dense) {
                prop_assert!((l - d).abs() <= 1e-8 * (1.0 + d.abs()), "{} vs dense {}", l, d);
            }
        }
    }

    #[test]
    fn selection_does_not_depend_on_the_shift(
        (cos, sin) in warp_coeffs(),
        eps in 0.05..0.5f64,
        a in 0.01..5.0f64,
        b in 0.01..5.0f64,
    ) {
        let op = small_torus(cos, sin, eps, StencilOrder::Fourth);
        let x = smallest_eigenpairs(&op, &SolveConfig::new(5).with_shift(-a)).unwrap();
        let y = smallest_eigenpairs(&op, &SolveConfig::new(5).with_shift(-b)).unwrap();
        for (l, m) in x.values.iter().zip(&y.values) {
            prop_assert!((l - m).abs() <= 1e-9, "{:?} vs {:?}", x.values, y.values);
        }
    }

    #[test]
    fn closed_case_kernel_is_the_constants(
        (cos, sin) in warp_coeffs(),
        eps in 0.05..0.9f64,
        order in order(),
        seed in 0..1000u64,
    ) {
        let op = small_torus(cos, sin, eps, order);
        let cfg = SolveConfig::new(2).with_shift(-1.0).with_seed(seed);
        let pairs = smallest_eigenpairs(&op, &cfg).unwrap();
        prop_assert!(pairs.values[0].abs() <= cfg.tol);
        let x = &pairs.vectors[0];
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let dev = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-6 * mean.abs(), "relative deviation {}", dev / mean.abs());
    }
}

#[test]
fn equal_seeds_give_identical_output() {
    let op = small_torus(vec![0.3], vec![], 0.2, StencilOrder::Fourth);
    let cfg = SolveConfig::new(4).with_shift(-1.0).with_seed(42);
    let a = smallest_eigenpairs(&op, &cfg).unwrap();
    let b = smallest_eigenpairs(&op, &cfg).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.vectors, b.vectors);
}
