//! Divergence-form finite-difference assembly.
//!
//! Every operator is returned as a generalized pair `(K, W)`: `K` is the
//! symmetric stiffness matrix of the energy form
//! `E(f) = Σ_edges h_s h_f · c · (D f)²` with staggered derivatives `D` and
//! coefficient `c = √det g · g^{ii}` evaluated at edge midpoints, and `W` is
//! the diagonal volume weight `√det g · h_s · h_f` at the nodes. Eigenpairs
//! solve `K x = λ W x`.
//!
//! The waveguide fibre term is the exception: it is assembled in the
//! variable `√ρ f`, which turns the density into a potential and lets the
//! Dirichlet walls be closed by odd reflection at fourth order.
//!
//! Unknowns are stored fibre-fastest: node `(i, j)` has index `i·n_fibre + j`.
//! Dirichlet fibres store interior nodes only.

mod sparse;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use sparse::{CsrMatrix, TripletBuilder};

use crate::error::{Error, Result};
use crate::geometry::{tube_density, BundleGeometry, Epsilon, FibreBoundary, WarpedTorusGeometry, WaveguideGeometry};

pub const MIN_GRID_POINTS: usize = 16;

/// Ground energy of the Dirichlet fibre `[−1, 1]`.
pub const WAVEGUIDE_LAMBDA0: f64 = PI * PI / 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl TryFrom<u8> for StencilOrder {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            other => Err(format!("stencil_order must be 2 or 4, got {other}")),
        }
    }
}

impl From<StencilOrder> for u8 {
    fn from(o: StencilOrder) -> u8 {
        match o {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }
}

impl StencilOrder {
    pub fn as_f64(self) -> f64 {
        u8::from(self) as f64
    }

    /// Periodic staggered first derivative: offset of the first node relative
    /// to the left node of the edge, and weights (to be divided by `h`).
    fn periodic_derivative(self) -> (isize, &'static [f64]) {
        match self {
            StencilOrder::Second => (0, &[-1.0, 1.0]),
            StencilOrder::Fourth => (-1, &FOURTH_CENTERED),
        }
    }
}

const FOURTH_CENTERED: [f64; 4] = [1.0 / 24.0, -27.0 / 24.0, 27.0 / 24.0, -1.0 / 24.0];

/// Uniform tensor grid. `base_offset` shifts base nodes to `(i + offset)·h_s`
/// (use 0.5 to keep symmetric nodal lines off the nodes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_s: usize,
    pub n_f: usize,
    pub stencil_order: StencilOrder,
    #[serde(default)]
    pub base_offset: f64,
}

impl GridSpec {
    pub fn new(n_s: usize, n_f: usize, stencil_order: StencilOrder) -> Self {
        Self {
            n_s,
            n_f,
            stencil_order,
            base_offset: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.base_offset = offset;
        self
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_s: self.n_s * factor,
            n_f: self.n_f * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s < MIN_GRID_POINTS || self.n_f < MIN_GRID_POINTS {
            return Err(Error::GridTooCoarse {
                n_s: self.n_s,
                n_f: self.n_f,
            });
        }
        if !(0.0..1.0).contains(&self.base_offset) {
            return Err(Error::InvalidGrid(format!(
                "base_offset must lie in [0, 1), got {}",
                self.base_offset
            )));
        }
        Ok(())
    }

    pub fn base_spacing(&self, period: f64) -> f64 {
        period / self.n_s as f64
    }

    pub fn base_nodes(&self, period: f64) -> Vec<f64> {
        let h = self.base_spacing(period);
        (0..self.n_s).map(|i| (i as f64 + self.base_offset) * h).collect()
    }

    pub fn fibre_spacing(&self, geom: &BundleGeometry) -> f64 {
        geom.fibre_extent() / self.n_f as f64
    }

    /// Number of fibre unknowns per base node.
    pub fn fibre_unknowns(&self, boundary: FibreBoundary) -> usize {
        match boundary {
            FibreBoundary::Periodic => self.n_f,
            FibreBoundary::Dirichlet => self.n_f - 1,
        }
    }

    /// Fibre coordinates of the unknowns.
    pub fn fibre_nodes(&self, geom: &BundleGeometry) -> Vec<f64> {
        let (lo, _) = geom.fibre_range();
        let h = self.fibre_spacing(geom);
        match geom.fibre_boundary() {
            FibreBoundary::Periodic => (0..self.n_f).map(|j| lo + j as f64 * h).collect(),
            FibreBoundary::Dirichlet => (1..self.n_f).map(|j| lo + j as f64 * h).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Full,
    Effective,
    Fibre,
    Generic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub kind: OperatorKind,
    pub geometry: String,
    pub epsilon: Option<f64>,
    pub grid: Option<GridSpec>,
}

/// Generalized symmetric pencil `K x = λ W x` with diagonal `W > 0`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub stiffness: CsrMatrix,
    pub weight: Vec<f64>,
    pub meta: OperatorMeta,
}

impl DiscreteOperator {
    pub fn new(stiffness: CsrMatrix, weight: Vec<f64>) -> Result<Self> {
        if stiffness.nrows() != stiffness.ncols() || stiffness.nrows() != weight.len() {
            return Err(Error::InvalidGrid(format!(
                "operator dimensions disagree: K is {}x{}, W has {} entries",
                stiffness.nrows(),
                stiffness.ncols(),
                weight.len()
            )));
        }
        if let Some(w) = weight.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidGrid(format!(
                "weight entries must be positive, found {w}"
            )));
        }
        Ok(Self {
            stiffness,
            weight,
            meta: OperatorMeta {
                kind: OperatorKind::Generic,
                geometry: String::new(),
                epsilon: None,
                grid: None,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.weight.len()
    }

    /// `W⁻¹ K f`, the pointwise action of the discrete operator.
    pub fn apply_pointwise(&self, f: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.apply(f);
        for (yi, wi) in y.iter_mut().zip(&self.weight) {
            *yi /= wi;
        }
        y
    }
}

/// Staggered first difference on one edge of a line: `(unknown, weight)`
/// terms in the line numbering, to be divided by `h`.
struct LineStencil {
    terms: Vec<(usize, f64)>,
}

fn periodic_line(order: StencilOrder, n: usize) -> Vec<LineStencil> {
    let (start, weights) = order.periodic_derivative();
    (0..n)
        .map(|e| LineStencil {
            terms: weights
                .iter()
                .enumerate()
                .map(|(r, &w)| ((e as isize + start + r as isize).rem_euclid(n as isize) as usize, w))
                .collect(),
        })
        .collect()
}

/// Edges of a Dirichlet line with `n` intervals; wall nodes 0 and `n` are
/// eliminated, interior node `J` maps to unknown `J − 1`. The fourth-order
/// stencil is closed by odd reflection across the walls.
fn dirichlet_line(order: StencilOrder, n: usize) -> Vec<LineStencil> {
    let n = n as isize;
    let term = |node: isize, w: f64| -> Option<(usize, f64)> {
        let (node, w) = if node < 0 {
            (-node, -w)
        } else if node > n {
            (2 * n - node, -w)
        } else {
            (node, w)
        };
        (node != 0 && node != n).then(|| ((node - 1) as usize, w))
    };
    let (start, weights) = order.periodic_derivative();
    (0..n)
        .map(|e| LineStencil {
            terms: weights
                .iter()
                .enumerate()
                .filter_map(|(r, &w)| term(e + start + r as isize, w))
                .collect(),
        })
        .collect()
}

impl LineStencil {
    /// Adds `alpha · d dᵀ` for this edge, each weight multiplied by the
    /// node scale; `global` maps line unknowns to matrix rows.
    fn scatter(
        &self,
        alpha: f64,
        scale: impl Fn(usize) -> f64,
        global: impl Fn(usize) -> usize,
        builder: &mut TripletBuilder,
    ) {
        let scaled: Vec<(usize, f64)> = self.terms.iter().map(|&(r, w)| (global(r), w * scale(r))).collect();
        for &(ra, ca) in &scaled {
            for &(rb, cb) in &scaled {
                builder.push(ra, rb, alpha * (ca * cb));
            }
        }
    }
}

/// Discrete `−Δ_{g_ε}` (warped torus) or `−Δ_{G_ε}` (waveguide).
pub fn assemble_full(geom: &BundleGeometry, eps: Epsilon, grid: &GridSpec) -> Result<DiscreteOperator> {
    grid.validate()?;
    let period = geom.period();
    let h_s = grid.base_spacing(period);
    let h_f = grid.fibre_spacing(geom);
    let s_nodes = grid.base_nodes(period);
    let f_nodes = grid.fibre_nodes(geom);
    let nf = f_nodes.len();
    let dim = grid.n_s * nf;
    let index = |i: usize, j: usize| i * nf + j;

    let mut builder = TripletBuilder::new(dim, dim);

    let base_edges = periodic_line(grid.stencil_order, grid.n_s);
    for (e, stencil) in base_edges.iter().enumerate() {
        let s_mid = s_nodes[e] + 0.5 * h_s;
        for (j, &v) in f_nodes.iter().enumerate() {
            let m = geom.metric_sample(eps, s_mid, v)?;
            let alpha = m.sqrt_det * m.g_ss_inv * h_f / h_s;
            stencil.scatter(alpha, |_| 1.0, |i| index(i, j), &mut builder);
        }
    }

    let (f_lo, _) = geom.fibre_range();
    match geom {
        BundleGeometry::WarpedTorus(_) => {
            for (e, stencil) in periodic_line(grid.stencil_order, grid.n_f).iter().enumerate() {
                let v_mid = f_lo + (e as f64 + 0.5) * h_f;
                for (i, &s) in s_nodes.iter().enumerate() {
                    let m = geom.metric_sample(eps, s, v_mid)?;
                    let alpha = m.sqrt_det * m.g_ff_inv * h_s / h_f;
                    stencil.scatter(alpha, |_| 1.0, |j| index(i, j), &mut builder);
                }
            }
        }
        BundleGeometry::Waveguide(g) => {
            // the fibre energy ∫ρ f_u² is assembled as ∫(w_u² + V_ρ w²) in
            // w = √ρ f, which holds exactly under Dirichlet conditions and
            // keeps the wall closure free of the density
            let alpha = h_s / (eps.value() * h_f);
            for (i, &s) in s_nodes.iter().enumerate() {
                let root: Vec<f64> = f_nodes
                    .iter()
                    .map(|&u| tube_density(g, eps, s, u).map(f64::sqrt))
                    .collect::<Result<_>>()?;
                for stencil in dirichlet_line(grid.stencil_order, grid.n_f) {
                    stencil.scatter(alpha, |j| root[j], |j| index(i, j), &mut builder);
                }
                for (j, &u) in f_nodes.iter().enumerate() {
                    let v = density_potential(g, eps, s, u)?;
                    builder.push(
                        index(i, j),
                        index(i, j),
                        h_s * h_f / eps.value() * v * root[j] * root[j],
                    );
                }
            }
        }
    }

    let mut weight = Vec::with_capacity(dim);
    for &s in &s_nodes {
        for &v in &f_nodes {
            weight.push(geom.metric_sample(eps, s, v)?.sqrt_det * h_s * h_f);
        }
    }

    Ok(DiscreteOperator {
        stiffness: builder.build(),
        weight,
        meta: OperatorMeta {
            kind: OperatorKind::Full,
            geometry: geom.id().to_string(),
            epsilon: Some(eps.value()),
            grid: Some(*grid),
        },
    })
}

/// `½(log a)″ + ¼((log a)′)²`, using `Vol(F_s) = ℓ_F·a(s)`.
fn warped_potential(g: &WarpedTorusGeometry, s: f64) -> f64 {
    let a = g.warp.eval(s, 0);
    let da = g.warp.eval(s, 1);
    let dda = g.warp.eval(s, 2);
    let dlog = da / a;
    let ddlog = dda / a - dlog * dlog;
    0.5 * ddlog + 0.25 * dlog * dlog
}

/// Potential of the effective base operator `H₀ = −∂_s² + V_eff`.
pub fn effective_potential(geom: &BundleGeometry, s: f64) -> f64 {
    match geom {
        BundleGeometry::WarpedTorus(g) => warped_potential(g, s),
        BundleGeometry::Waveguide(g) => {
            let k = g.curvature.eval(s, 0);
            -0.25 * k * k
        }
    }
}

/// Fibre ground energy `Λ₀`.
pub fn fibre_ground_energy(geom: &BundleGeometry) -> f64 {
    match geom {
        BundleGeometry::WarpedTorus(_) => 0.0,
        BundleGeometry::Waveguide(_) => WAVEGUIDE_LAMBDA0,
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveOperator1D {
    pub op: DiscreteOperator,
    pub nodes: Vec<f64>,
    pub potential: Vec<f64>,
    pub lambda0: f64,
}

/// Periodic discrete `H₀` on the base grid (`n_s`, stencil order and offset of `grid`).
pub fn assemble_effective(geom: &BundleGeometry, grid: &GridSpec) -> Result<EffectiveOperator1D> {
    if grid.n_s < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse {
            n_s: grid.n_s,
            n_f: grid.n_f,
        });
    }
    let period = geom.period();
    let h = grid.base_spacing(period);
    let nodes = grid.base_nodes(period);
    let potential: Vec<f64> = nodes.iter().map(|&s| effective_potential(geom, s)).collect();
    let n = nodes.len();

    let mut builder = TripletBuilder::new(n, n);
    for stencil in periodic_line(grid.stencil_order, n) {
        stencil.scatter(1.0 / h, |_| 1.0, |i| i, &mut builder);
    }
    for (i, v) in potential.iter().enumerate() {
        builder.push(i, i, h * v);
    }

    Ok(EffectiveOperator1D {
        op: DiscreteOperator {
            stiffness: builder.build(),
            weight: vec![h; n],
            meta: OperatorMeta {
                kind: OperatorKind::Effective,
                geometry: geom.id().to_string(),
                epsilon: None,
                grid: Some(*grid),
            },
        },
        nodes,
        potential,
        lambda0: fibre_ground_energy(geom),
    })
}

/// `V_ρ = ½∂_u² log ρ + ¼(∂_u log ρ)²` for `ρ = 1 − εuκ(s)`, i.e. `−¼ε²κ²/ρ²`.
pub fn density_potential(geom: &WaveguideGeometry, eps: Epsilon, s: f64, u: f64) -> Result<f64> {
    let rho = tube_density(geom, eps, s, u)?;
    let ek = eps.value() * geom.curvature.eval(s, 0);
    Ok(-0.25 * ek * ek / (rho * rho))
}

/// Dirichlet fibre operator `−∂_u² + V_ρ(s, ·)` on `[−1, 1]` with `n_f` intervals.
pub fn assemble_fiber(
    geom: &WaveguideGeometry,
    eps: Epsilon,
    s: f64,
    n_f: usize,
    order: StencilOrder,
) -> Result<DiscreteOperator> {
    if n_f < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse { n_s: 0, n_f });
    }
    let h = 2.0 / n_f as f64;
    let n = n_f - 1;
    let mut builder = TripletBuilder::new(n, n);
    for stencil in dirichlet_line(order, n_f) {
        stencil.scatter(1.0 / h, |_| 1.0, |j| j, &mut builder);
    }
    for j in 0..n {
        let u = -1.0 + (j + 1) as f64 * h;
        builder.push(j, j, h * density_potential(geom, eps, s, u)?);
    }
    Ok(DiscreteOperator {
        stiffness: builder.build(),
        weight: vec![h; n],
        meta: OperatorMeta {
            kind: OperatorKind::Fibre,
            geometry: "waveguide".to_string(),
            epsilon: Some(eps.value()),
            grid: None,
        },
    })
}

/// Eigenvalue of the periodic 1D staggered `DᵀD/h²` for wavenumber index `k` on `n` points.
pub fn periodic_symbol(order: StencilOrder, n: usize, h: f64, k: i64) -> f64 {
    let theta = 2.0 * PI * k as f64 / n as f64;
    match order {
        StencilOrder::Second => (2.0 * (0.5 * theta).sin() / h).powi(2),
        StencilOrder::Fourth => ((27.0 * (0.5 * theta).sin() - (1.5 * theta).sin()) / (12.0 * h)).powi(2),
    }
}
