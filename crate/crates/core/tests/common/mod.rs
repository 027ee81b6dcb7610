//! Shared strategies and dense oracles for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use faer::{Mat, Side};
use proptest::prelude::*;

use fibrelab::geometry::{BundleGeometry, PeriodicProfile, WarpedTorusGeometry, WaveguideGeometry};
use fibrelab::operators::DiscreteOperator;

pub const TAU: f64 = 2.0 * PI;

/// `1 + Σ c_k cos ks + Σ d_k sin ks` with `Σ|c| + Σ|d| ≤ 0.6`.
pub fn warp_coeffs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-0.2..0.2f64, 1..=2),
        prop::collection::vec(-0.1..0.1f64, 0..=2),
    )
}

/// Curvature `n + Σ c_k cos ks + Σ d_k sin ks` on a base of length `2π`.
pub fn curvature_coeffs() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
    (
        0..=1i32,
        prop::collection::vec(-0.5..0.5f64, 1..=2),
        prop::collection::vec(-0.3..0.3f64, 0..=1),
    )
        .prop_map(|(n, c, d)| (n as f64, c, d))
}

pub fn torus(cos: Vec<f64>, sin: Vec<f64>) -> BundleGeometry {
    let warp = PeriodicProfile::new(TAU, 1.0, cos, sin).unwrap();
    BundleGeometry::WarpedTorus(WarpedTorusGeometry::new(PI, TAU, warp).unwrap())
}

pub fn strip_geometry(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> WaveguideGeometry {
    WaveguideGeometry::new(TAU, PeriodicProfile::new(TAU, constant, cos, sin).unwrap()).unwrap()
}

pub fn strip(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> BundleGeometry {
    BundleGeometry::Waveguide(strip_geometry(constant, cos, sin))
}

/// `c + Σ c_k cos ks + Σ d_k sin ks`, evaluated directly.
pub fn series(c: f64, cos: &[f64], sin: &[f64], s: f64) -> f64 {
    let mut v = c;
    for (k, a) in cos.iter().enumerate() {
        v += a * ((k + 1) as f64 * s).cos();
    }
    for (k, b) in sin.iter().enumerate() {
        v += b * ((k + 1) as f64 * s).sin();
    }
    v
}

pub fn series_d1(cos: &[f64], sin: &[f64], s: f64) -> f64 {
    let mut v = 0.0;
    for (k, a) in cos.iter().enumerate() {
        let m = (k + 1) as f64;
        v -= a * m * (m * s).sin();
    }
    for (k, b) in sin.iter().enumerate() {
        let m = (k + 1) as f64;
        v += b * m * (m * s).cos();
    }
    v
}

pub fn sym_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    m.self_adjoint_eigenvalues(Side::Lower).unwrap()
}

/// Eigenvalues of `S x = λ M x` for dense symmetric `S` and SPD `M`,
/// via the symmetric square root of `M`.
pub fn generalized_eigenvalues(s: &Mat<f64>, m: &Mat<f64>) -> Vec<f64> {
    let evd = m.self_adjoint_eigen(Side::Lower).unwrap();
    let u = evd.U();
    let d = evd.S().column_vector();
    let n = m.nrows();
    let inv_sqrt = Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| u[(i, k)] * u[(j, k)] / d[k].sqrt()).sum::<f64>()
    });
    let reduced = &inv_sqrt * s * &inv_sqrt;
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
    sym_eigenvalues(&sym)
}

/// Full dense spectrum of a small assembled pencil `K x = λ W x`.
pub fn dense_pencil_eigenvalues(op: &DiscreteOperator) -> Vec<f64> {
    let n = op.dim();
    let k = Mat::from_fn(n, n, |i, j| {
        op.stiffness.get(i, j) / (op.weight[i] * op.weight[j]).sqrt()
    });
    sym_eigenvalues(&k)
}

/// Real Fourier basis `1, cos s, sin s, …, cos Ns, sin Ns` and its derivative.
pub fn fourier_basis(n: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    let mut f = vec![1.0];
    let mut df = vec![0.0];
    for k in 1..=n {
        let m = k as f64;
        f.push((m * s).cos());
        df.push(-m * (m * s).sin());
        f.push((m * s).sin());
        df.push(m * (m * s).cos());
    }
    (f, df)
}

/// Smallest eigenvalues of `−(w ψ′)′ + w q ψ = μ w ψ` on the circle of length
/// `2π` by Fourier–Galerkin with `n` harmonics and trapezoidal quadrature,
/// which is exact for the trigonometric-polynomial integrands used here.
pub fn periodic_galerkin(n: usize, w: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64) -> Vec<f64> {
    let dim = 2 * n + 1;
    let nq = 8 * dim;
    let mut stiff = Mat::<f64>::zeros(dim, dim);
    let mut mass = Mat::<f64>::zeros(dim, dim);
    for p in 0..nq {
        let s = TAU * p as f64 / nq as f64;
        let (f, df) = fourier_basis(n, s);
        let (ws, qs) = (w(s), q(s));
        for i in 0..dim {
            for j in 0..dim {
                stiff[(i, j)] += ws * (df[i] * df[j] + qs * f[i] * f[j]);
                mass[(i, j)] += ws * f[i] * f[j];
            }
        }
    }
    generalized_eigenvalues(&stiff, &mass)
}
