//! Smallest eigenpairs of `K x = λ W x` by shift-invert block Krylov iteration.
//!
//! The shifted matrix `K − σW` is factored once (sparse Cholesky, so the
//! shift must lie below the spectrum). The search space is grown with
//! `(K − σW)⁻¹` applied to the residuals of the current Ritz block, kept
//! `W`-orthonormal by two passes of classical Gram–Schmidt, and Rayleigh–Ritz
//! is performed with `K` itself. When the space reaches its budget it is restarted from the
//! current Ritz block. Start vectors come from a seeded ChaCha stream, so a
//! solve is a deterministic function of `(op, cfg)`.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::DiscreteOperator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Spectral shift; must lie strictly below the smallest eigenvalue.
    /// `None` picks −1 for closed problems and 0 for Dirichlet ones.
    #[serde(default)]
    pub shift: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    300
}

impl SolveConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
            shift: None,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairSet {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl EigenPairSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest `|⟨x_i, x_j⟩_W|` for `i ≠ j`.
    pub max_gram_offdiag: f64,
    /// Largest `|⟨x_i, x_i⟩_W − 1|`.
    pub max_gram_diag_dev: f64,
}

fn w_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// `xᵀKx / xᵀWx`.
pub fn rayleigh_quotient(op: &DiscreteOperator, x: &[f64]) -> f64 {
    let kx = op.stiffness.apply(x);
    let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
    num / w_dot(&op.weight, x, x)
}

/// `‖K x − λ W x‖₂ / ‖W x‖₂`.
pub fn relative_residual(op: &DiscreteOperator, value: f64, x: &[f64]) -> f64 {
    let kx = op.stiffness.apply(x);
    let mut r2 = 0.0;
    let mut wx2 = 0.0;
    for ((k, w), xi) in kx.iter().zip(&op.weight).zip(x) {
        let wx = w * xi;
        r2 += (k - value * wx).powi(2);
        wx2 += wx * wx;
    }
    (r2 / wx2).sqrt()
}

fn default_shift(op: &DiscreteOperator) -> f64 {
    if op.meta.geometry == "waveguide" {
        0.0
    } else {
        -1.0
    }
}

struct Basis {
    vectors: Vec<Vec<f64>>,
    k_vectors: Vec<Vec<f64>>,
}

impl Basis {
    fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Orthonormalizes `x` against the basis in the `W` inner product and appends it.
    fn push(&mut self, op: &DiscreteOperator, mut x: Vec<f64>) -> bool {
        let w = &op.weight;
        let initial = w_dot(w, &x, &x).sqrt();
        if !(initial > 0.0) || !initial.is_finite() {
            return false;
        }
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.vectors.iter().map(|v| w_dot(w, v, &x)).collect();
            for (v, c) in self.vectors.iter().zip(&coeffs) {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi -= c * vi;
                }
            }
        }
        let norm = w_dot(w, &x, &x).sqrt();
        if norm < 1e-10 * initial {
            return false;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        self.k_vectors.push(op.stiffness.apply(&x));
        self.vectors.push(x);
        true
    }

    /// Rayleigh–Ritz: ascending Ritz values and the coefficient matrix.
    fn rayleigh_ritz(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        let m = self.len();
        let h = Mat::<f64>::from_fn(m, m, |i, j| {
            let a: f64 = self.vectors[i].iter().zip(&self.k_vectors[j]).map(|(x, y)| x * y).sum();
            let b: f64 = self.vectors[j].iter().zip(&self.k_vectors[i]).map(|(x, y)| x * y).sum();
            0.5 * (a + b)
        });
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence {
            iterations: 0,
            max_residual: f64::NAN,
            tol: 0.0,
        })?;
        let values = (0..m).map(|i| evd.S()[i]).collect();
        Ok((values, evd.U().to_owned()))
    }

    fn combine(&self, coeffs: &Mat<f64>, col: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.vectors[0].len()];
        for (i, v) in self.vectors.iter().enumerate() {
            let c = coeffs[(i, col)];
            for (xv, vv) in x.iter_mut().zip(v) {
                *xv += c * vv;
            }
        }
        x
    }
}

/// The `cfg.k` algebraically smallest generalized eigenpairs of `op`.
pub fn smallest_eigenpairs(op: &DiscreteOperator, cfg: &SolveConfig) -> Result<EigenPairSet> {
    let n = op.dim();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::Config(format!("k = {} must lie in 1..={n}", cfg.k)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", cfg.tol)));
    }
    let shift = cfg.shift.unwrap_or_else(|| default_shift(op));
    let shifted = op.stiffness.shifted_lower_faer(shift, &op.weight);
    let llt = shifted
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::FactorizationFailed { shift })?;

    let k = cfg.k;
    let block = n.min(k + 4);
    let budget = n.min((4 * block).max(block + 48));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut basis = Basis {
        vectors: Vec::new(),
        k_vectors: Vec::new(),
    };
    // first expansion: (K − σW)⁻¹ W x for random x; afterwards (K − σW)⁻¹ r
    // for the Ritz residuals r, which spans the same space without the
    // cancellation of subtracting nearly parallel vectors
    let mut rhs = Mat::<f64>::from_fn(n, block, |i, _| op.weight[i] * (rng.random::<f64>() - 0.5));

    let mut iterations = 0;
    loop {
        llt.solve_in_place(rhs.as_mut());
        let before = basis.len();
        for j in 0..rhs.ncols() {
            if basis.len() < budget {
                basis.push(op, (0..n).map(|i| rhs[(i, j)]).collect());
            }
        }
        let grew = basis.len() > before;

        let (ritz_values, coeffs) = basis.rayleigh_ritz()?;
        let keep = block.min(basis.len());
        let ritz: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..keep)
            .map(|c| {
                let lam = ritz_values[c];
                let x = basis.combine(&coeffs, c);
                let kx = op.stiffness.apply(&x);
                let r: Vec<f64> = kx
                    .iter()
                    .zip(&op.weight)
                    .zip(&x)
                    .map(|((k, w), x)| k - lam * w * x)
                    .collect();
                (lam, x, r)
            })
            .collect();

        let wanted = k.min(ritz.len());
        let max_residual = ritz[..wanted]
            .iter()
            .map(|(_, x, r)| {
                let wx2: f64 = x.iter().zip(&op.weight).map(|(x, w)| (w * x).powi(2)).sum();
                (r.iter().map(|v| v * v).sum::<f64>() / wx2).sqrt()
            })
            .fold(0.0, f64::max);

        if wanted == k && max_residual <= cfg.tol {
            return Ok(finalize(
                op,
                ritz.into_iter().take(k).map(|(_, x, _)| x).collect(),
                iterations,
                cfg.tol,
            ));
        }
        if iterations >= cfg.max_iter || (!grew && before == keep) {
            return Err(Error::NoConvergence {
                iterations,
                max_residual,
                tol: cfg.tol,
            });
        }
        iterations += 1;

        if basis.len() + keep > budget || !grew {
            basis = Basis {
                vectors: Vec::with_capacity(budget),
                k_vectors: Vec::with_capacity(budget),
            };
            for (_, x, _) in &ritz {
                basis.push(op, x.clone());
            }
        }
        rhs = Mat::<f64>::from_fn(n, ritz.len(), |i, j| ritz[j].2[i]);
    }
}

fn finalize(op: &DiscreteOperator, vectors: Vec<Vec<f64>>, iterations: usize, tol: f64) -> EigenPairSet {
    let mut pairs: Vec<(f64, Vec<f64>, f64)> = vectors
        .into_iter()
        .map(|mut x| {
            let norm = w_dot(&op.weight, &x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            let lam = rayleigh_quotient(op, &x);
            let res = relative_residual(op, lam, &x);
            (lam, x, res)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    debug_assert!(pairs.iter().all(|p| p.2 <= tol * 1.01 + 1e-15));
    EigenPairSet {
        values: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.2).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
        iterations,
    }
}

/// Recomputes residuals and the `W`-Gram matrix of a computed set.
pub fn verify_pairs(op: &DiscreteOperator, pairs: &EigenPairSet) -> VerifyReport {
    let residuals: Vec<f64> = pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(lam, x)| relative_residual(op, *lam, x))
        .collect();
    let mut max_off: f64 = 0.0;
    let mut max_diag: f64 = 0.0;
    for (i, xi) in pairs.vectors.iter().enumerate() {
        for (j, xj) in pairs.vectors.iter().enumerate().skip(i) {
            let g = w_dot(&op.weight, xi, xj);
            if i == j {
                max_diag = max_diag.max((g - 1.0).abs());
            } else {
                max_off = max_off.max(g.abs());
            }
        }
    }
    VerifyReport {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        max_gram_offdiag: max_off,
        max_gram_diag_dev: max_diag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::CsrMatrix;

    fn op(k: CsrMatrix, w: Vec<f64>) -> DiscreteOperator {
        DiscreteOperator::new(k, w).unwrap()
    }

    fn periodic_laplacian(n: usize) -> CsrMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] += 2.0;
                r[(i + 1) % n] -= 1.0;
                r[(i + n - 1) % n] -= 1.0;
                r
            })
            .collect();
        CsrMatrix::from_dense(&rows)
    }

    #[test]
    fn diagonal_examples() {
        let a = op(CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]), vec![1.0; 3]);
        let p = smallest_eigenpairs(&a, &SolveConfig::new(2).with_shift(0.0)).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-12 && (p.values[1] - 2.0).abs() < 1e-12);

        let b = op(CsrMatrix::from_diagonal(&[2.0, 2.0]), vec![1.0, 2.0]);
        let p = smallest_eigenpairs(&b, &SolveConfig::new(2).with_shift(0.0)).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-12 && (p.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_laplacian_n4() {
        let a = op(periodic_laplacian(4), vec![1.0; 4]);
        let p = smallest_eigenpairs(&a, &SolveConfig::new(4).with_shift(-1.0)).unwrap();
        // symbol 2 − 2cos(πk/2), k = 0..3
        for (got, want) in p.values.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn shift_above_spectrum_fails_factorization() {
        let a = op(CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]), vec![1.0; 3]);
        let err = smallest_eigenpairs(&a, &SolveConfig::new(1).with_shift(1.5)).unwrap_err();
        assert!(matches!(err, Error::FactorizationFailed { .. }));
    }

    #[test]
    fn invalid_k_is_a_config_error() {
        let a = op(CsrMatrix::from_diagonal(&[1.0, 2.0]), vec![1.0; 2]);
        assert!(smallest_eigenpairs(&a, &SolveConfig::new(3)).is_err());
        assert!(smallest_eigenpairs(&a, &SolveConfig::new(0)).is_err());
    }

    #[test]
    fn verify_detects_perturbation() {
        let a = op(CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]), vec![1.0; 3]);
        let exact = EigenPairSet {
            values: vec![1.0, 2.0],
            vectors: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            residuals: vec![0.0, 0.0],
            iterations: 0,
        };
        let r = verify_pairs(&a, &exact);
        assert_eq!(r.max_residual, 0.0);
        assert!(r.max_gram_offdiag < 1e-12 && r.max_gram_diag_dev < 1e-12);

        let mut bumped = exact.clone();
        bumped.vectors[0][1] = 1e-3;
        assert!(verify_pairs(&a, &bumped).max_residual > 1e-5);
    }

    #[test]
    fn same_seed_same_result() {
        let a = op(periodic_laplacian(40), vec![0.5; 40]);
        let cfg = SolveConfig::new(5).with_shift(-0.3).with_seed(7);
        let p = smallest_eigenpairs(&a, &cfg).unwrap();
        let q = smallest_eigenpairs(&a, &cfg).unwrap();
        assert_eq!(p, q);
    }
}
