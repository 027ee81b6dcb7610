//! The effective model `(H₀, Λ₀, φ₀)` and its comparison with full solves.
//!
//! The full operator's low eigenpairs are paired by index with those of the
//! discrete effective operator; the predicted eigenfunction is `ψ_j φ₀`.
//! Both sides are normalized in the discrete `ε`-independent volume
//! `ε·√det g_ε`, which is `a(s)` on the torus and `ρ(s, u)` on the strip.

use std::f64::consts::PI;

use serde::Serialize;

use crate::eigensolve::{smallest_eigenpairs, EigenPairSet, SolveConfig};
use crate::error::{Error, Result};
use crate::geometry::{BundleGeometry, Epsilon, FibreBoundary, PeriodicProfile, WaveguideGeometry};
use crate::nodal::{
    boundary_trace_components, count_nodal_domains, extract_nodal_set, graph_over_fiber_check, hausdorff_distance,
    zeros_of_base, BaseField, BaseZero, CurveSet, NodalReport, ScalarField,
};
use crate::operators::{assemble_fiber, EffectiveOperator1D, GridSpec, StencilOrder, WAVEGUIDE_LAMBDA0};

/// Minimal separation of `μ_j` from its neighbours for it to count as simple.
pub const SIMPLICITY_GAP: f64 = 1e-8;

/// Residual tolerance of the internal fibre and effective solves.
const INNER_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
enum FibreShape {
    /// `(ℓ_F a(s))^{−1/2}`, constant along the fibre.
    Constant(f64),
    /// `cos(πu/2)` on `[−1, 1]`.
    HalfCosine,
}

/// Fibre ground state over one base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberGroundState {
    pub lambda0: f64,
    shape: FibreShape,
}

impl FiberGroundState {
    pub fn phi0(&self, v: f64) -> f64 {
        match self.shape {
            FibreShape::Constant(c) => c,
            FibreShape::HalfCosine => (0.5 * PI * v).cos(),
        }
    }

    /// Largest value of `φ₀` on the fibre.
    pub fn max(&self) -> f64 {
        match self.shape {
            FibreShape::Constant(c) => c,
            FibreShape::HalfCosine => 1.0,
        }
    }
}

pub fn ground_state(geom: &BundleGeometry, s: f64) -> FiberGroundState {
    match geom {
        BundleGeometry::WarpedTorus(t) => FiberGroundState {
            lambda0: 0.0,
            shape: FibreShape::Constant((t.fiber_length * t.warp.eval(s, 0)).powf(-0.5)),
        },
        BundleGeometry::Waveguide(_) => FiberGroundState {
            lambda0: WAVEGUIDE_LAMBDA0,
            shape: FibreShape::HalfCosine,
        },
    }
}

fn straight(geom: &WaveguideGeometry) -> Result<WaveguideGeometry> {
    WaveguideGeometry::new(geom.base_length, PeriodicProfile::constant(geom.base_length, 0.0)?)
}

fn fibre_ground(geom: &WaveguideGeometry, eps: Epsilon, s: f64, n_f: usize, order: StencilOrder) -> Result<f64> {
    let op = assemble_fiber(geom, eps, s, n_f, order)?;
    // V_ρ ≥ −¼ε²κ²/ρ² keeps the spectrum above π²/4 − 1 for admissible ε
    let cfg = SolveConfig::new(1)
        .with_tol(INNER_TOL)
        .with_shift(WAVEGUIDE_LAMBDA0 - 1.0);
    Ok(smallest_eigenpairs(&op, &cfg)?.values[0])
}

/// Fibre ground energy of the discretization used for the full operator:
/// exactly 0 on the torus, the discrete Dirichlet ground energy on the strip.
pub fn discrete_fibre_ground_energy(geom: &BundleGeometry, grid: &GridSpec) -> Result<f64> {
    match geom {
        BundleGeometry::WarpedTorus(_) => Ok(0.0),
        BundleGeometry::Waveguide(g) => {
            let eps = Epsilon::new(0.5)?;
            fibre_ground(&straight(g)?, eps, 0.0, grid.n_f, grid.stencil_order)
        }
    }
}

/// `Λ_ε(s)`, the ground energy of `−∂_u² + V_ρ(s, ·)`. The shift against the
/// straight fibre is computed on grids with `n_f` and `2n_f` intervals and
/// extrapolated.
pub fn lambda_eps_oracle(geom: &WaveguideGeometry, eps: Epsilon, s: f64, n_f: usize) -> Result<f64> {
    let order = StencilOrder::Fourth;
    let flat = straight(geom)?;
    let shift_at = |n: usize| -> Result<f64> {
        Ok(fibre_ground(geom, eps, s, n, order)? - fibre_ground(&flat, eps, s, n, order)?)
    };
    let coarse = shift_at(n_f)?;
    let fine = shift_at(2 * n_f)?;
    Ok(WAVEGUIDE_LAMBDA0 + fine + (fine - coarse) / 15.0)
}

/// `θ_d(ε)`: 1, `√log ε⁻¹` and `ε^{−1/2}` for `d = 1, 2, 3`.
pub fn theta(d: u32, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    match d {
        1 => Ok(1.0),
        2 => Ok((1.0 / eps).ln().sqrt()),
        3 => Ok(eps.powf(-0.5)),
        _ => Err(Error::Config(format!("theta is defined for d in 1..=3, got {d}"))),
    }
}

/// Discrete `ε`-independent volume weights `ε·√det g_ε·h_s·h_f` at the unknowns.
pub fn volume_weights(geom: &BundleGeometry, eps: Epsilon, grid: &GridSpec) -> Result<Vec<f64>> {
    let period = geom.period();
    let cell = grid.base_spacing(period) * grid.fibre_spacing(geom);
    let f_nodes = grid.fibre_nodes(geom);
    let mut w = Vec::with_capacity(grid.n_s * f_nodes.len());
    for s in grid.base_nodes(period) {
        for &v in &f_nodes {
            w.push(eps.value() * geom.metric_sample(eps, s, v)?.sqrt_det * cell);
        }
    }
    Ok(w)
}

fn normalize(x: &mut [f64], w: &[f64]) {
    let norm = x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Low spectrum of the discrete effective operator.
pub fn effective_pairs(model: &EffectiveOperator1D, k: usize) -> Result<EigenPairSet> {
    let vmin = model.potential.iter().copied().fold(f64::INFINITY, f64::min);
    let cfg = SolveConfig::new(k.min(model.op.dim()))
        .with_tol(INNER_TOL)
        .with_shift(vmin - 1.0);
    smallest_eigenpairs(&model.op, &cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub mode: usize,
    pub mu: f64,
    /// `ψ_j` at the base nodes, `Σ h ψ² = 1`.
    pub psi: Vec<f64>,
    pub zeros: Vec<BaseZero>,
    /// `ψ_j φ₀` at the unknowns of the full grid, unit norm in [`volume_weights`].
    pub product: Vec<f64>,
    /// `Λ₀ + ε² μ_j`.
    pub predicted_lambda: f64,
    /// `min_s φ₀` (torus) or `max φ₀` (strip), the scale of the tube estimate.
    pub phi0_scale: f64,
}

pub fn build_prediction(
    geom: &BundleGeometry,
    eps: Epsilon,
    model: &EffectiveOperator1D,
    j: usize,
    grid: &GridSpec,
) -> Result<Prediction> {
    let n = model.op.dim();
    if j >= n {
        return Err(Error::ModeOutOfRange { index: j, available: n });
    }
    let pairs = effective_pairs(model, j + 2)?;
    let mu = pairs.values[j];
    let mut gap = f64::INFINITY;
    if j > 0 {
        gap = gap.min(mu - pairs.values[j - 1]);
    }
    if j + 1 < pairs.len() {
        gap = gap.min(pairs.values[j + 1] - mu);
    }
    if gap <= SIMPLICITY_GAP {
        return Err(Error::DegenerateEffectiveEigenvalue { index: j, gap });
    }
    let psi = pairs.vectors[j].clone();
    let period = geom.period();
    let h = grid.base_spacing(period);
    let zeros = zeros_of_base(&BaseField::new(period, grid.base_offset * h, psi.clone()))?;

    let s_nodes = grid.base_nodes(period);
    let f_nodes = grid.fibre_nodes(geom);
    let mut product = Vec::with_capacity(s_nodes.len() * f_nodes.len());
    let mut phi0_scale = f64::INFINITY;
    for (&s, &p) in s_nodes.iter().zip(&psi) {
        let g0 = ground_state(geom, s);
        phi0_scale = phi0_scale.min(g0.max());
        for &v in &f_nodes {
            product.push(p * g0.phi0(v));
        }
    }
    let w = volume_weights(geom, eps, grid)?;
    normalize(&mut product, &w);
    if product[argmax_abs(&product)] < 0.0 {
        product.iter_mut().for_each(|v| *v = -*v);
    }
    let lambda0 = ground_state(geom, 0.0).lambda0;
    Ok(Prediction {
        mode: j,
        mu,
        psi,
        zeros,
        product,
        predicted_lambda: lambda0 + eps.value() * eps.value() * mu,
        phi0_scale,
    })
}

/// Discretization error estimates of the measured quantities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DiscErrors {
    pub eig_gap: f64,
    pub supnorm: f64,
    pub hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyRecord {
    pub epsilon: f64,
    pub mode: usize,
    pub lambda_full: f64,
    pub mu_eff: f64,
    /// Fibre ground energy subtracted from `λ_full`.
    pub lambda0: f64,
    /// `|ε⁻²(λ_full − Λ₀) − μ_j|`.
    pub eig_gap: f64,
    /// `‖φ − ψφ₀‖_∞` after normalization and sign matching.
    pub supnorm: f64,
    pub hausdorff: f64,
    pub nodal: NodalReport,
    /// Base radius of the tubes used by the graph-over-fibre test.
    pub tube_radius: f64,
    /// `tube_radius / ε`.
    pub tube_constant: f64,
    /// Estimate for `eig_gap`; per-quantity values in `disc_errors`.
    pub disc_error_estimate: f64,
    pub disc_errors: DiscErrors,
}

/// Compares the `pred.mode`-th full eigenpair with its prediction.
/// `lambda0` is the fibre ground energy of the discretization (see
/// [`discrete_fibre_ground_energy`]).
pub fn measure(
    full: &EigenPairSet,
    pred: &Prediction,
    geom: &BundleGeometry,
    eps: Epsilon,
    grid: &GridSpec,
    lambda0: f64,
) -> Result<DiscrepancyRecord> {
    let j = pred.mode;
    if j >= full.len() {
        return Err(Error::ModeOutOfRange {
            index: j,
            available: full.len(),
        });
    }
    let e2 = eps.value() * eps.value();
    let rescaled: Vec<f64> = full.values.iter().map(|l| (l - lambda0) / e2).collect();
    let close = rescaled
        .iter()
        .filter(|r| (*r - pred.mu).abs() < SIMPLICITY_GAP)
        .count();
    if close > 1 {
        return Err(Error::PairingAmbiguous { index: j, count: close });
    }
    let eig_gap = (rescaled[j] - pred.mu).abs();

    let w = volume_weights(geom, eps, grid)?;
    let mut phi = full.vectors[j].clone();
    normalize(&mut phi, &w);
    let overlap: f64 = phi.iter().zip(&pred.product).zip(&w).map(|((a, b), w)| w * a * b).sum();
    let flip = if overlap != 0.0 {
        overlap < 0.0
    } else {
        let i = argmax_abs(&pred.product);
        phi[i] * pred.product[i] < 0.0
    };
    if flip {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    let supnorm = phi
        .iter()
        .zip(&pred.product)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let field = ScalarField::from_values(geom, grid, phi)?;
    let nodal_set = extract_nodal_set(&field)?;
    let zero_list: Vec<f64> = pred.zeros.iter().map(|z| z.s).collect();
    let h_s = grid.base_spacing(geom.period());
    let h_f = grid.fibre_spacing(geom);
    let hausdorff = if nodal_set.is_empty() && zero_list.is_empty() {
        0.0
    } else {
        hausdorff_distance(
            &CurveSet::from_nodal(&nodal_set),
            &CurveSet::fibres(geom, &zero_list),
            geom,
            0.5 * h_s.min(h_f),
        )?
    };

    let min_slope = pred.zeros.iter().map(|z| z.slope.abs()).fold(f64::INFINITY, f64::min);
    let tube_radius = if min_slope.is_finite() {
        (2.0 * supnorm / (min_slope * pred.phi0_scale)).max(h_s)
    } else {
        h_s
    };
    let boundary_components = match geom.fibre_boundary() {
        FibreBoundary::Dirichlet => boundary_trace_components(&nodal_set),
        FibreBoundary::Periodic => 0,
    };
    let nodal = NodalReport {
        domain_count: count_nodal_domains(&field),
        component_count: nodal_set.component_count,
        hausdorff,
        boundary_components,
        graph_over_fiber: graph_over_fiber_check(&nodal_set, &zero_list, tube_radius),
        zero_list,
    };

    Ok(DiscrepancyRecord {
        epsilon: eps.value(),
        mode: j,
        lambda_full: full.values[j],
        mu_eff: pred.mu,
        lambda0,
        eig_gap,
        supnorm,
        hausdorff,
        nodal,
        tube_radius,
        tube_constant: tube_radius / eps.value(),
        disc_error_estimate: 0.0,
        disc_errors: DiscErrors::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WarpedTorusGeometry;
    use crate::operators::{assemble_effective, assemble_full};

    fn torus(z: f64) -> BundleGeometry {
        BundleGeometry::WarpedTorus(
            WarpedTorusGeometry::new(PI, 2.0 * PI, PeriodicProfile::exp_cos(2.0 * PI, z).unwrap()).unwrap(),
        )
    }

    fn ring() -> WaveguideGeometry {
        WaveguideGeometry::new(2.0 * PI, PeriodicProfile::constant(2.0 * PI, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_examples() {
        let w = BundleGeometry::Waveguide(ring());
        let g = ground_state(&w, 1.0);
        assert_eq!(g.lambda0, PI * PI / 4.0);
        assert!((g.lambda0 - 2.4674011).abs() < 1e-7);
        assert_eq!(g.phi0(0.0), 1.0);

        let flat = ground_state(&torus(0.0), 0.3);
        assert!((flat.phi0(1.0) - (2.0 * PI).powf(-0.5)).abs() < 1e-15);

        let warped = ground_state(&torus(0.3), 0.0);
        assert!((warped.phi0(0.0) - (2.0 * PI * 0.3f64.exp()).powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn ground_states_are_fibrewise_normalized() {
        // midpoint quadrature of φ₀² over the fibre
        let n = 20_000;
        for geom in [torus(0.3), BundleGeometry::Waveguide(ring())] {
            for s in [0.0, 1.0, 2.5] {
                let g = ground_state(&geom, s);
                let (lo, hi) = geom.fibre_range();
                let h = (hi - lo) / n as f64;
                let vol_density = match &geom {
                    BundleGeometry::WarpedTorus(t) => t.warp.eval(s, 0),
                    BundleGeometry::Waveguide(_) => 1.0,
                };
                let norm: f64 = (0..n)
                    .map(|k| {
                        let v = lo + (k as f64 + 0.5) * h;
                        g.phi0(v).powi(2) * vol_density * h
                    })
                    .sum();
                assert!((norm - 1.0).abs() < 1e-8, "{norm}");
            }
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(1, 0.05).unwrap(), 1.0);
        assert!((theta(2, (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((theta(3, 0.25).unwrap() - 2.0).abs() < 1e-15);
        assert!(theta(2, 1.5).is_err());
        assert!(theta(4, 0.5).is_err());
    }

    #[test]
    fn straight_fibre_oracle_is_exact() {
        let g = straight(&ring()).unwrap();
        let l = lambda_eps_oracle(&g, Epsilon::new(0.3).unwrap(), 0.0, 64).unwrap();
        assert!((l - WAVEGUIDE_LAMBDA0).abs() < 1e-14);
    }

    #[test]
    fn unit_curvature_oracle_example() {
        let g = WaveguideGeometry::new(2.0 * PI, PeriodicProfile::constant(2.0 * PI, 1.0).unwrap()).unwrap();
        let l = lambda_eps_oracle(&g, Epsilon::new(0.1).unwrap(), 0.0, 64).unwrap();
        assert!((l - 2.464901).abs() < 1e-5, "{l}");
    }

    #[test]
    fn flat_torus_predictions() {
        let g = torus(0.0);
        let grid = GridSpec::new(32, 16, StencilOrder::Second).with_offset(0.5);
        let model = assemble_effective(&g, &grid).unwrap();
        let eps = Epsilon::new(0.5).unwrap();
        let p = build_prediction(&g, eps, &model, 0, &grid).unwrap();
        assert!(p.mu.abs() < 1e-12);
        let c = p.product[0];
        assert!(p.product.iter().all(|v| (v - c).abs() < 1e-10));
        // Σ a h_s h_f c² = 1 with a ≡ 1 over area 4π²
        assert!((c - 1.0 / (2.0 * PI)).abs() < 1e-10);
        assert!(matches!(
            build_prediction(&g, eps, &model, 1, &grid),
            Err(Error::DegenerateEffectiveEigenvalue { .. })
        ));
    }

    #[test]
    fn exponential_warp_has_degenerate_excited_pairs() {
        // −(aψ′)′/a = μψ with a = e^{c cos s} has coexisting periodic solutions
        let g = torus(0.3);
        let grid = GridSpec::new(128, 16, StencilOrder::Fourth).with_offset(0.5);
        let model = assemble_effective(&g, &grid).unwrap();
        let pairs = effective_pairs(&model, 3).unwrap();
        assert!((pairs.values[2] - pairs.values[1]).abs() < 1e-8, "{:?}", pairs.values);
        assert!(matches!(
            build_prediction(&g, Epsilon::new(0.1).unwrap(), &model, 1, &grid),
            Err(Error::DegenerateEffectiveEigenvalue { .. })
        ));
    }

    #[test]
    fn cosine_warp_first_mode_is_simple() {
        let warp = PeriodicProfile::new(2.0 * PI, 1.0, vec![0.3], vec![]).unwrap();
        let g = BundleGeometry::WarpedTorus(WarpedTorusGeometry::new(PI, 2.0 * PI, warp).unwrap());
        let grid = GridSpec::new(64, 16, StencilOrder::Fourth).with_offset(0.5);
        let model = assemble_effective(&g, &grid).unwrap();
        let pairs = effective_pairs(&model, 3).unwrap();
        assert!(pairs.values[2] - pairs.values[1] > 1e-2, "{:?}", pairs.values);
        let p = build_prediction(&g, Epsilon::new(0.1).unwrap(), &model, 1, &grid).unwrap();
        assert_eq!(p.zeros.len(), 2);
    }

    #[test]
    fn measurement_is_sign_invariant_and_flat_case_is_exact() {
        let g = torus(0.0);
        let grid = GridSpec::new(32, 16, StencilOrder::Second).with_offset(0.5);
        let eps = Epsilon::new(0.25).unwrap();
        let op = assemble_full(&g, eps, &grid).unwrap();
        let full = smallest_eigenpairs(&op, &SolveConfig::new(3).with_shift(-eps.value().powi(2))).unwrap();
        let model = assemble_effective(&g, &grid).unwrap();
        let pred = build_prediction(&g, eps, &model, 0, &grid).unwrap();
        let rec = measure(&full, &pred, &g, eps, &grid, 0.0).unwrap();
        assert!(rec.eig_gap < 1e-8, "{}", rec.eig_gap);
        assert!(rec.supnorm < 1e-8, "{}", rec.supnorm);
        assert_eq!(rec.hausdorff, 0.0);
        assert_eq!(rec.nodal.domain_count, 1);

        let mut negated = full.clone();
        negated.vectors[0].iter_mut().for_each(|v| *v = -*v);
        assert_eq!(measure(&negated, &pred, &g, eps, &grid, 0.0).unwrap(), rec);
    }
}
