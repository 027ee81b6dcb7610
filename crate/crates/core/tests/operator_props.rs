mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;

use fibrelab::eigensolve::{smallest_eigenpairs, SolveConfig};
use fibrelab::geometry::{BundleGeometry, Epsilon};
use fibrelab::operators::{
    assemble_effective, assemble_full, density_potential, GridSpec, StencilOrder, WAVEGUIDE_LAMBDA0,
};

fn order() -> impl Strategy<Value = StencilOrder> {
    prop_oneof![Just(StencilOrder::Second), Just(StencilOrder::Fourth)]
}

fn sampled(geom: &BundleGeometry, grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    for s in grid.base_nodes(geom.period()) {
        for v in grid.fibre_nodes(geom) {
            out.push(f(s, v));
        }
    }
    out
}

type Exact<'a> = dyn Fn(f64, f64) -> f64 + 'a;

fn nominal(order: StencilOrder) -> f64 {
    match order {
        StencilOrder::Second => 2.0,
        StencilOrder::Fourth => 4.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_pencils_are_exactly_symmetric(
        (cos, sin) in warp_coeffs(),
        (n, kc, ks) in curvature_coeffs(),
        order in order(),
        n_s in 16..40usize,
        n_f in 16..24usize,
        offset in 0.0..1.0f64,
        eps in 0.05..0.6f64,
    ) {
        let grid = GridSpec::new(n_s, n_f, order).with_offset(offset);
        let t = torus(cos, sin);
        let e = Epsilon::new(eps).unwrap();
        let op = assemble_full(&t, e, &grid).unwrap();
        prop_assert_eq!(op.stiffness.max_asymmetry(), 0.0);
        prop_assert!(op.weight.iter().all(|w| *w > 0.0 && w.is_finite()));
        let k1 = op.stiffness.apply(&vec![1.0; op.dim()]);
        let kmax = op.stiffness.max_abs();
        prop_assert!(k1.iter().all(|v| v.abs() <= 1e-12 * kmax));

        let w = strip(n, kc, ks);
        if let Ok(e) = w.validate_epsilon(eps.min(0.5)) {
            let op = assemble_full(&w, e, &grid).unwrap();
            prop_assert_eq!(op.stiffness.max_asymmetry(), 0.0);
            prop_assert!(op.weight.iter().all(|w| *w > 0.0 && w.is_finite()));
            prop_assert_eq!(op.dim(), n_s * (n_f - 1));
        }
        let eff = assemble_effective(&t, &grid).unwrap();
        prop_assert_eq!(eff.op.stiffness.max_asymmetry(), 0.0);
    }

    #[test]
    fn density_potential_is_small_and_nonpositive(
        (n, kc, ks) in curvature_coeffs(),
        frac in 0.01..0.95f64,
        s in 0.0..TAU,
        u in -1.0..=1.0f64,
    ) {
        let g = strip_geometry(n, kc, ks);
        let kmax = g.max_abs_curvature();
        prop_assume!(kmax > 0.0);
        let e = (frac / kmax).min(0.99);
        let v = density_potential(&g, Epsilon::new(e).unwrap(), s, u).unwrap();
        prop_assert!(v <= 0.0);
        let bound = 0.25 * e * e * kmax * kmax / (1.0 - e * kmax).powi(2);
        prop_assert!(v.abs() <= bound * (1.0 + 1e-12), "{} > {}", v.abs(), bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn waveguide_pencil_is_positive_definite(
        (n, kc, ks) in curvature_coeffs(),
        order in order(),
        eps in 0.05..0.5f64,
    ) {
        let g = strip(n, kc, ks);
        let Ok(e) = g.validate_epsilon(eps) else { return Ok(()) };
        let op = assemble_full(&g, e, &GridSpec::new(32, 16, order).with_offset(0.5)).unwrap();
        let pairs = smallest_eigenpairs(&op, &SolveConfig::new(1).with_shift(0.0)).unwrap();
        prop_assert!(pairs.values[0] > 0.0);
        let dense = dense_pencil_eigenvalues(&op);
        prop_assert!(dense[0] > 0.0);
        prop_assert!((dense[0] - pairs.values[0]).abs() < 1e-8);
    }

    #[test]
    fn pointwise_action_converges_at_the_stencil_order(
        (cos, sin) in warp_coeffs(),
        (n, kc, ks) in curvature_coeffs(),
        order in order(),
        eps in 0.2..0.6f64,
    ) {
        // torus: −Δ(cos s cos t) = −ε²a⁻¹∂_s(a∂_s f) − a⁻²∂_t² f
        let t = torus(cos.clone(), sin.clone());
        let e = Epsilon::new(eps).unwrap();
        let torus_exact = |s: f64, v: f64| {
            let a = series(1.0, &cos, &sin, s);
            let da = series_d1(&cos, &sin, s);
            let base = -eps * eps * (da / a * -s.sin() - s.cos()) * v.cos();
            base + s.cos() * v.cos() / (a * a)
        };
        // strip: −Δf = −ε²ρ⁻¹∂_s(ρ⁻¹∂_s f) − ρ⁻¹∂_u(ρ∂_u f), ρ = 1 − εuκ
        let w = strip(n, kc.clone(), ks.clone());
        let eps_w = eps.min(0.5 / series_bound(n, &kc, &ks));
        let ew = Epsilon::new(eps_w).unwrap();
        let strip_exact = |s: f64, u: f64| {
            let k = series(n, &kc, &ks, s);
            let dk = series_d1(&kc, &ks, s);
            let rho = 1.0 - eps_w * u * k;
            let (rho_s, rho_u) = (-eps_w * u * dk, -eps_w * k);
            let c = (0.5 * PI * u).cos();
            let (f_s, f_ss) = (-s.sin() * c, -s.cos() * c);
            let f_u = -0.5 * PI * s.cos() * (0.5 * PI * u).sin();
            let f_uu = -0.25 * PI * PI * s.cos() * c;
            -eps_w * eps_w / rho * (f_ss / rho - f_s * rho_s / (rho * rho)) - (rho_u * f_u + rho * f_uu) / rho
        };
        let cases: [(&BundleGeometry, Epsilon, &Exact<'_>, [usize; 3]); 2] = [
            (&t, e, &torus_exact, [16, 32, 64]),
            (&w, ew, &strip_exact, [32, 64, 128]),
        ];
        for (g, e, exact, levels) in cases {
            let mut errs = Vec::new();
            for n in levels {
                let grid = GridSpec::new(n, n, order).with_offset(0.5);
                let op = assemble_full(g, e, &grid).unwrap();
                let f = sampled(g, &grid, |s, v| s.cos() * if g.is_closed() { v.cos() } else { (0.5 * PI * v).cos() });
                let lf = op.apply_pointwise(&f);
                let reference = sampled(g, &grid, exact);
                let fibre = grid.fibre_nodes(g);
                let worst = lf
                    .iter()
                    .zip(&reference)
                    .enumerate()
                    // walls are closed by reflection; only interior rows are consistent pointwise
                    .filter(|(i, _)| g.is_closed() || fibre[i % fibre.len()].abs() <= 0.5)
                    .map(|(_, (a, b))| (a - b).abs())
                    .fold(0.0, f64::max);
                errs.push(worst);
            }
            let p: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            for slope in &p {
                prop_assert!((slope - nominal(order)).abs() <= 0.3, "{} {:?}: slopes {:?} errors {:?}", g.id(), order, p, errs);
            }
        }
    }
}

fn series_bound(c: f64, cos: &[f64], sin: &[f64]) -> f64 {
    c.abs() + cos.iter().chain(sin).map(|v| v.abs()).sum::<f64>()
}

#[test]
fn straight_tube_ground_energy_converges_to_quarter_pi_squared() {
    let g = strip(0.0, vec![], vec![]);
    let e = Epsilon::new(0.3).unwrap();
    for (order, p) in [(StencilOrder::Second, 2.0), (StencilOrder::Fourth, 4.0)] {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n_f| {
                let op = assemble_full(&g, e, &GridSpec::new(16, n_f, order).with_offset(0.5)).unwrap();
                let pairs = smallest_eigenpairs(&op, &SolveConfig::new(1).with_shift(0.0)).unwrap();
                (pairs.values[0] - WAVEGUIDE_LAMBDA0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(((w[0] / w[1]).log2() - p).abs() <= 0.3, "{order:?} {errs:?}");
        }
        assert!(errs[2] < 1e-3);
    }
}

#[test]
fn effective_operator_intertwines_the_fibre_constant_sector() {
    // On fibre-constant functions the full torus operator is ε²·(−a⁻¹∂_s a∂_s).
    // With v = Vol^{−1/2} it satisfies −a⁻¹(a(vψ)′)′ = v·H₀ψ.
    let cos = vec![0.3, -0.1];
    let sin = vec![0.15];
    let g = torus(cos.clone(), sin.clone());
    let eps = Epsilon::new(0.25).unwrap();
    let psi = |s: f64| (s).sin() + 0.5 * (2.0 * s).cos();
    let vol = |s: f64| TAU * series(1.0, &cos, &sin, s);
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let grid = GridSpec::new(n, 16, StencilOrder::Second).with_offset(0.5);
        let full = assemble_full(&g, eps, &grid).unwrap();
        let eff = assemble_effective(&g, &grid).unwrap();
        let lifted = sampled(&g, &grid, |s, _| vol(s).powf(-0.5) * psi(s));
        let lhs = full.apply_pointwise(&lifted);
        let h0psi = eff
            .op
            .apply_pointwise(&eff.nodes.iter().map(|&s| psi(s)).collect::<Vec<_>>());
        let n_f = grid.fibre_nodes(&g).len();
        let worst = (0..n * n_f)
            .map(|idx| {
                let i = idx / n_f;
                let s = eff.nodes[i];
                (lhs[idx] / eps.value().powi(2) - vol(s).powf(-0.5) * h0psi[i]).abs()
            })
            .fold(0.0, f64::max);
        errs.push(worst);
    }
    for w in errs.windows(2) {
        assert!(((w[0] / w[1]).log2() - 2.0).abs() <= 0.3, "{errs:?}");
    }
}
