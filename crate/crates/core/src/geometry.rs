//! Concrete bundle testbeds over the circle and their metric coefficients.
//!
//! Two trivial bundles with one-dimensional fibres are provided:
//!
//! * the **warped torus** `ℝ/2Lℤ × ℝ/ℓ_F ℤ` with the adiabatic metric
//!   `g_ε = ε⁻² ds² + a(s)² dt²`;
//! * the **planar waveguide**, a closed curve of length `ℓ` and curvature
//!   `κ(s)` thickened to a tube of radius `ε`, pulled back to the fixed
//!   cylinder `ℝ/ℓℤ × [−1, 1]` and rescaled: `G_ε = ε⁻²(1 − εuκ(s))² ds² + du²`.
//!
//! All profile data are finite trigonometric series, so every derivative that
//! enters the effective potential is evaluated in closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(s) = constant + Σ_k cosine_amps[k]·cos(2π(k+1)s/period) + sine_amps[k]·sin(2π(k+1)s/period)`.
///
/// Entry `k` of the amplitude lists belongs to angular mode `k + 1`; the
/// zeroth mode is `constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    pub period: f64,
    pub constant: f64,
    pub cosine_amps: Vec<f64>,
    pub sine_amps: Vec<f64>,
}

impl PeriodicProfile {
    pub fn new(period: f64, constant: f64, cosine_amps: Vec<f64>, sine_amps: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "profile period must be positive, got {period}"
            )));
        }
        let all_finite = constant.is_finite() && cosine_amps.iter().chain(sine_amps.iter()).all(|c| c.is_finite());
        if !all_finite {
            return Err(Error::InvalidGeometry("profile coefficients must be finite".into()));
        }
        Ok(Self {
            period,
            constant,
            cosine_amps,
            sine_amps,
        })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(period, value, Vec::new(), Vec::new())
    }

    /// Fourier series of `exp(z·cos(2πs/period))`, i.e. `I₀(z) + 2 Σ I_k(z) cos(2πks/period)`,
    /// truncated once the modified Bessel coefficients drop below `1e-17·I₀(z)`.
    pub fn exp_cos(period: f64, z: f64) -> Result<Self> {
        let i0 = bessel_i(0, z);
        let mut cos = Vec::new();
        for k in 1..64 {
            let ik = bessel_i(k, z);
            if ik.abs() < 1e-17 * i0 {
                break;
            }
            cos.push(2.0 * ik);
        }
        Self::new(period, i0, cos, Vec::new())
    }

    pub fn modes(&self) -> usize {
        self.cosine_amps.len().max(self.sine_amps.len())
    }

    /// Derivative of order `deriv_order` at `s`, evaluated termwise.
    pub fn eval(&self, s: f64, deriv_order: u32) -> f64 {
        let mut value = if deriv_order == 0 { self.constant } else { 0.0 };
        // fmod is exact, so f(s) and f(s − period) agree bit for bit
        let x = s.rem_euclid(self.period) / self.period;
        for k in 0..self.modes() {
            let m = (k + 1) as f64;
            let omega = 2.0 * PI * m / self.period;
            let phase = 2.0 * PI * m * x;
            let (sn, cs) = phase.sin_cos();
            let scale = omega.powi(deriv_order as i32);
            let a = self.cosine_amps.get(k).copied().unwrap_or(0.0);
            let b = self.sine_amps.get(k).copied().unwrap_or(0.0);
            // d^n/ds^n of (a cos + b sin) cycles with period 4
            let term = match deriv_order % 4 {
                0 => a * cs + b * sn,
                1 => -a * sn + b * cs,
                2 => -a * cs - b * sn,
                _ => a * sn - b * cs,
            };
            value += scale * term;
        }
        value
    }

    /// Upper bound on `max|f|` from the mode sum.
    pub fn abs_bound(&self) -> f64 {
        self.constant.abs() + self.mode_amplitude_sum()
    }

    /// Lower bound on `min f` from the mode sum.
    pub fn lower_bound(&self) -> f64 {
        self.constant - self.mode_amplitude_sum()
    }

    fn mode_amplitude_sum(&self) -> f64 {
        (0..self.modes())
            .map(|k| {
                let a = self.cosine_amps.get(k).copied().unwrap_or(0.0);
                let b = self.sine_amps.get(k).copied().unwrap_or(0.0);
                a.hypot(b)
            })
            .sum()
    }

    pub fn sampled_min(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.eval(self.period * i as f64 / samples as f64, 0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sampled_max_abs(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.eval(self.period * i as f64 / samples as f64, 0).abs())
            .fold(0.0, f64::max)
    }

    /// Average over one period; only the constant mode survives.
    pub fn mean(&self) -> f64 {
        self.constant
    }
}

/// Exact derivative of a trigonometric series; see [`PeriodicProfile::eval`].
pub fn profile_eval(p: &PeriodicProfile, s: f64, deriv_order: u32) -> f64 {
    p.eval(s, deriv_order)
}

/// Modified Bessel function `I_k(z)` by its power series (adequate for |z| ≲ 10).
fn bessel_i(k: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut term = (1..=k).fold(1.0, |acc, j| acc * half / j as f64);
    let mut sum = term;
    for m in 1..200u32 {
        term *= half * half / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

const DENSE_SAMPLES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpedTorusGeometry {
    pub half_length: f64,
    pub fiber_length: f64,
    pub warp: PeriodicProfile,
}

impl WarpedTorusGeometry {
    pub fn new(half_length: f64, fiber_length: f64, warp: PeriodicProfile) -> Result<Self> {
        if !(half_length > 0.0) || !(fiber_length > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "half_length and fiber_length must be positive (got {half_length}, {fiber_length})"
            )));
        }
        if (warp.period - 2.0 * half_length).abs() > 1e-12 * warp.period {
            return Err(Error::InvalidGeometry(format!(
                "warp period {} does not match base circumference {}",
                warp.period,
                2.0 * half_length
            )));
        }
        // the mode-sum bound is sufficient; the dense sample catches the rest
        if warp.lower_bound() <= 0.0 && warp.sampled_min(DENSE_SAMPLES) <= 0.0 {
            return Err(Error::InvalidGeometry("warp a(s) must be strictly positive".into()));
        }
        Ok(Self {
            half_length,
            fiber_length,
            warp,
        })
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideGeometry {
    pub base_length: f64,
    pub curvature: PeriodicProfile,
}

impl WaveguideGeometry {
    pub fn new(base_length: f64, curvature: PeriodicProfile) -> Result<Self> {
        if !(base_length > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "base_length must be positive, got {base_length}"
            )));
        }
        if (curvature.period - base_length).abs() > 1e-12 * base_length {
            return Err(Error::InvalidGeometry(format!(
                "curvature period {} does not match base length {base_length}",
                curvature.period
            )));
        }
        // total turning: only the constant mode integrates to something nonzero
        let turns = curvature.constant * base_length / (2.0 * PI);
        if (turns - turns.round()).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "curvature integrates to 2π·{turns}, not a closed curve"
            )));
        }
        Ok(Self { base_length, curvature })
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.abs_bound()
    }

    /// Tube condition `ε·max|κ| < 1`.
    pub fn admits(&self, eps: Epsilon) -> bool {
        eps.value() * self.max_abs_curvature() < 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BundleGeometry {
    WarpedTorus(WarpedTorusGeometry),
    Waveguide(WaveguideGeometry),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FibreBoundary {
    Periodic,
    Dirichlet,
}

impl BundleGeometry {
    pub fn id(&self) -> &'static str {
        match self {
            BundleGeometry::WarpedTorus(_) => "warped_torus",
            BundleGeometry::Waveguide(_) => "waveguide",
        }
    }

    /// Circumference of the base circle.
    pub fn period(&self) -> f64 {
        match self {
            BundleGeometry::WarpedTorus(g) => g.period(),
            BundleGeometry::Waveguide(g) => g.base_length,
        }
    }

    /// Fibre coordinate range `[lo, hi)` (periodic) or `[lo, hi]` (Dirichlet).
    pub fn fibre_range(&self) -> (f64, f64) {
        match self {
            BundleGeometry::WarpedTorus(g) => (0.0, g.fiber_length),
            BundleGeometry::Waveguide(_) => (-1.0, 1.0),
        }
    }

    pub fn fibre_extent(&self) -> f64 {
        let (lo, hi) = self.fibre_range();
        hi - lo
    }

    pub fn fibre_boundary(&self) -> FibreBoundary {
        match self {
            BundleGeometry::WarpedTorus(_) => FibreBoundary::Periodic,
            BundleGeometry::Waveguide(_) => FibreBoundary::Dirichlet,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.fibre_boundary() == FibreBoundary::Periodic
    }

    /// Rejects ε outside `(0, 1)` and, for the waveguide, ε violating the tube condition.
    pub fn validate_epsilon(&self, eps: f64) -> Result<Epsilon> {
        let eps = Epsilon::new(eps)?;
        if let BundleGeometry::Waveguide(g) = self {
            if !g.admits(eps) {
                return Err(Error::InvalidGeometry(format!(
                    "eps = {} violates the tube condition eps*max|kappa| < 1 (max|kappa| = {})",
                    eps.value(),
                    g.max_abs_curvature()
                )));
            }
        }
        Ok(eps)
    }

    pub fn metric_sample(&self, eps: Epsilon, s: f64, v: f64) -> Result<MetricSample> {
        metric_sample(self, eps, s, v)
    }

    pub fn fiber_volume(&self, s: f64) -> f64 {
        fiber_volume(self, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidEpsilon(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Dual metric coefficients and volume density at one point of the bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub g_ss_inv: f64,
    pub g_ff_inv: f64,
    pub sqrt_det: f64,
}

/// `1 − εvκ(s)`, the ratio of the tube volume density to the unperturbed one.
pub fn tube_density(g: &WaveguideGeometry, eps: Epsilon, s: f64, v: f64) -> Result<f64> {
    let rho = 1.0 - eps.value() * v * g.curvature.eval(s, 0);
    if rho <= 0.0 {
        return Err(Error::TubeDegenerate { s, v, rho });
    }
    Ok(rho)
}

pub fn metric_sample(geom: &BundleGeometry, eps: Epsilon, s: f64, v: f64) -> Result<MetricSample> {
    let e = eps.value();
    match geom {
        BundleGeometry::WarpedTorus(g) => {
            let a = g.warp.eval(s, 0);
            Ok(MetricSample {
                g_ss_inv: e * e,
                g_ff_inv: 1.0 / (a * a),
                sqrt_det: a / e,
            })
        }
        BundleGeometry::Waveguide(g) => {
            let rho = tube_density(g, eps, s, v)?;
            Ok(MetricSample {
                g_ss_inv: e * e / (rho * rho),
                g_ff_inv: 1.0,
                sqrt_det: rho / e,
            })
        }
    }
}

/// Length of the fibre over `s` in the fibre metric `g_F`.
pub fn fiber_volume(geom: &BundleGeometry, s: f64) -> f64 {
    match geom {
        BundleGeometry::WarpedTorus(g) => g.fiber_length * g.warp.eval(s, 0),
        BundleGeometry::Waveguide(_) => 2.0,
    }
}
