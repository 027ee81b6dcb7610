use crate::error::{Error, Result};
use crate::geometry::{BundleGeometry, FibreBoundary};
use crate::operators::GridSpec;

/// Grid data shared by fields and the nodal sets extracted from them.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDomain {
    pub period: f64,
    pub h_s: f64,
    pub h_f: f64,
    pub s0: f64,
    pub fibre_lo: f64,
    pub fibre_hi: f64,
    pub boundary: FibreBoundary,
    pub n_s: usize,
    /// Fibre intervals (`n_f` of the grid).
    pub n_f: usize,
}

impl FieldDomain {
    pub fn new(geom: &BundleGeometry, grid: &GridSpec) -> Self {
        let period = geom.period();
        let (fibre_lo, fibre_hi) = geom.fibre_range();
        Self {
            period,
            h_s: grid.base_spacing(period),
            h_f: grid.fibre_spacing(geom),
            s0: grid.base_offset * grid.base_spacing(period),
            fibre_lo,
            fibre_hi,
            boundary: geom.fibre_boundary(),
            n_s: grid.n_s,
            n_f: grid.n_f,
        }
    }

    /// Fibre unknowns per base node.
    pub fn n_fibre(&self) -> usize {
        match self.boundary {
            FibreBoundary::Periodic => self.n_f,
            FibreBoundary::Dirichlet => self.n_f - 1,
        }
    }

    pub fn s_node(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.h_s
    }

    /// Fibre coordinate of unknown `j`.
    pub fn f_node(&self, j: usize) -> f64 {
        match self.boundary {
            FibreBoundary::Periodic => self.fibre_lo + j as f64 * self.h_f,
            FibreBoundary::Dirichlet => self.fibre_lo + (j + 1) as f64 * self.h_f,
        }
    }

    pub fn fibre_period(&self) -> Option<f64> {
        match self.boundary {
            FibreBoundary::Periodic => Some(self.fibre_hi - self.fibre_lo),
            FibreBoundary::Dirichlet => None,
        }
    }

    /// Signed base difference `a − b` reduced to `(−period/2, period/2]`.
    pub fn wrap_s(&self, d: f64) -> f64 {
        wrap(d, self.period)
    }
}

pub(crate) fn wrap(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    if r > 0.5 * period {
        r - period
    } else {
        r
    }
}

/// Nodal values on a tensor grid, fibre index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub domain: FieldDomain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(geom: &BundleGeometry, grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        let domain = FieldDomain::new(geom, grid);
        let expected = domain.n_s * domain.n_fibre();
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid expects {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("field values must be finite".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn sample(geom: &BundleGeometry, grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let domain = FieldDomain::new(geom, grid);
        let mut values = Vec::with_capacity(domain.n_s * domain.n_fibre());
        for i in 0..domain.n_s {
            for j in 0..domain.n_fibre() {
                values.push(f(domain.s_node(i), domain.f_node(j)));
            }
        }
        Self::from_values(geom, grid, values)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.domain.n_fibre() + j]
    }

    pub fn negated(&self) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Periodic samples of a function on the base circle: `values[i]` at `s0 + i·h`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseField {
    pub period: f64,
    pub s0: f64,
    pub values: Vec<f64>,
}

impl BaseField {
    pub fn new(period: f64, s0: f64, values: Vec<f64>) -> Self {
        Self { period, s0, values }
    }

    pub fn sample(period: f64, s0: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = period / n as f64;
        Self::new(period, s0, (0..n).map(|i| f(s0 + i as f64 * h)).collect())
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }
}
