use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigensolve::SolveConfig;
use crate::error::{Error, Result};
use crate::geometry::{BundleGeometry, PeriodicProfile, WarpedTorusGeometry, WaveguideGeometry};
use crate::operators::{GridSpec, StencilOrder};

/// A profile given either by its trigonometric coefficients or as the
/// shorthand `{"exp_cos": z}` for `exp(z·cos(2πs/period))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    ExpCos(ExpCosConfig),
    Series(SeriesConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpCosConfig {
    pub exp_cos: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl ProfileConfig {
    pub fn build(&self, period: f64) -> Result<PeriodicProfile> {
        match self {
            ProfileConfig::ExpCos(c) => PeriodicProfile::exp_cos(period, c.exp_cos),
            ProfileConfig::Series(c) => PeriodicProfile::new(period, c.constant, c.cos.clone(), c.sin.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    WarpedTorus {
        #[serde(rename = "L")]
        half_length: f64,
        fiber_length: f64,
        warp: ProfileConfig,
    },
    Waveguide {
        length: f64,
        curvature: ProfileConfig,
    },
}

impl GeometryConfig {
    pub fn build(&self) -> Result<BundleGeometry> {
        match self {
            GeometryConfig::WarpedTorus {
                half_length,
                fiber_length,
                warp,
            } => {
                let warp = warp.build(2.0 * half_length)?;
                Ok(BundleGeometry::WarpedTorus(WarpedTorusGeometry::new(
                    *half_length,
                    *fiber_length,
                    warp,
                )?))
            }
            GeometryConfig::Waveguide { length, curvature } => {
                let curvature = curvature.build(*length)?;
                Ok(BundleGeometry::Waveguide(WaveguideGeometry::new(*length, curvature)?))
            }
        }
    }
}

fn default_offset() -> f64 {
    0.5
}

fn default_refine() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_s: usize,
    pub n_f: usize,
    pub stencil_order: StencilOrder,
    /// Base nodes sit at `(i + offset)·h_s`; the default keeps nodal lines
    /// of symmetric modes off the nodes.
    #[serde(default = "default_offset")]
    pub base_offset: f64,
    /// Refinement factor of the second grid used for error estimates.
    #[serde(default = "default_refine")]
    pub refine: usize,
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.n_s, self.n_f, self.stencil_order).with_offset(self.base_offset)
    }

    pub fn refined_spec(&self) -> GridSpec {
        self.spec().refined(self.refine)
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    300
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Eigenpairs per full solve; raised to `max mode + 3` when smaller.
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fixed shift; chosen per `ε` below the predicted spectrum when absent.
    #[serde(default)]
    pub shift: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 0,
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
            shift: None,
        }
    }
}

impl SolverConfig {
    pub fn solve_config(&self, k: usize) -> SolveConfig {
        let mut cfg = SolveConfig::new(self.k.max(k)).with_tol(self.tol).with_seed(self.seed);
        cfg.max_iter = self.max_iter;
        cfg.shift = self.shift;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    EigRate,
    SupnormRate,
    HausdorffRate,
    Isotopy,
    Boundary,
    Courant,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::EigRate => "eig_rate",
            CheckKind::SupnormRate => "supnorm_rate",
            CheckKind::HausdorffRate => "hausdorff_rate",
            CheckKind::Isotopy => "isotopy",
            CheckKind::Boundary => "boundary",
            CheckKind::Courant => "courant",
        }
    }

    pub fn is_rate(self) -> bool {
        matches!(
            self,
            CheckKind::EigRate | CheckKind::SupnormRate | CheckKind::HausdorffRate
        )
    }
}

/// One mode index or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeSelection {
    One(usize),
    Many(Vec<usize>),
}

impl Default for ModeSelection {
    fn default() -> Self {
        ModeSelection::One(0)
    }
}

impl ModeSelection {
    pub fn modes(&self) -> Vec<usize> {
        match self {
            ModeSelection::One(j) => vec![*j],
            ModeSelection::Many(v) => v.clone(),
        }
    }
}

/// Assert thresholds. Absent rate thresholds default by geometry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub eig_rate: Option<f64>,
    #[serde(default)]
    pub supnorm_rate: Option<f64>,
    #[serde(default)]
    pub hausdorff_rate: Option<f64>,
    /// Errors at or below this value count as exact and are excluded from fits.
    #[serde(default)]
    pub abs_floor: Option<f64>,
}

pub const DEFAULT_ABS_FLOOR: f64 = 1e-9;

/// A point is kept in a fit only if its error estimate is at most this
/// fraction of the measured value.
pub const DISC_GUARD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default)]
    pub mode_index: ModeSelection,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub geometry: GeometryConfig,
    pub epsilons: Vec<f64>,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub study: StudySection,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn modes(&self) -> Vec<usize> {
        self.study.mode_index.modes()
    }

    /// Geometry, base grid and refined grid after validation.
    pub fn validate(&self) -> Result<(BundleGeometry, GridSpec, GridSpec)> {
        let geom = self.geometry.build()?;
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons must not be empty".into()));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("epsilons must be strictly decreasing".into()));
        }
        for &e in &self.epsilons {
            geom.validate_epsilon(e)?;
        }
        if self.study.checks.iter().any(|c| c.is_rate()) && self.epsilons.len() < 3 {
            return Err(Error::Config(format!(
                "rate checks need at least 3 epsilons, got {}",
                self.epsilons.len()
            )));
        }
        let mut seen = self.study.checks.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("each check may be listed once".into()));
        }
        if self.study.checks.contains(&CheckKind::Boundary) && geom.is_closed() {
            return Err(Error::Config("the boundary check needs a fibre with boundary".into()));
        }
        let modes = self.modes();
        if modes.is_empty() {
            return Err(Error::Config("mode_index must name at least one mode".into()));
        }
        if self.grid.refine < 2 {
            return Err(Error::Config(format!(
                "grid.refine must be at least 2, got {}",
                self.grid.refine
            )));
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config(format!(
                "solver.tol must be positive, got {}",
                self.solver.tol
            )));
        }
        let grid = self.grid.spec();
        grid.validate()?;
        Ok((geom, grid, self.grid.refined_spec()))
    }

    pub fn threshold(&self, check: CheckKind, geom: &BundleGeometry) -> Option<f64> {
        let t = &self.study.thresholds;
        match check {
            CheckKind::EigRate => Some(t.eig_rate.unwrap_or(if geom.is_closed() { 1.7 } else { 0.8 })),
            CheckKind::SupnormRate => Some(t.supnorm_rate.unwrap_or(0.9)),
            CheckKind::HausdorffRate => Some(t.hausdorff_rate.unwrap_or(0.9)),
            _ => None,
        }
    }

    pub fn abs_floor(&self) -> f64 {
        self.study.thresholds.abs_floor.unwrap_or(DEFAULT_ABS_FLOOR)
    }
}

/// Exponent the theory predicts for a measured quantity.
pub fn theoretical_exponent(quantity: &str, geom: &BundleGeometry) -> f64 {
    match quantity {
        "eig_gap" if geom.is_closed() => 2.0,
        _ => 1.0,
    }
}
