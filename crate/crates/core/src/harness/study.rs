use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{theoretical_exponent, CheckKind, StudyConfig, DISC_GUARD};
use super::fit::{fit_rate, RateFit};
use crate::adiabatic::{build_prediction, discrete_fibre_ground_energy, measure, DiscErrors, DiscrepancyRecord};
use crate::eigensolve::{smallest_eigenpairs, EigenPairSet};
use crate::error::{Error, Result};
use crate::geometry::{BundleGeometry, Epsilon};
use crate::nodal::NodalReport;
use crate::operators::{assemble_effective, assemble_full, EffectiveOperator1D, GridSpec};

pub const QUANTITIES: [&str; 3] = ["eig_gap", "supnorm", "hausdorff"];

/// A failed `(ε, mode)` case; `mode` is `None` when the whole `ε` failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseFailure {
    pub epsilon: f64,
    pub mode: Option<usize>,
    pub error: String,
    pub solver: bool,
}

/// Everything computed for one `ε`.
#[derive(Clone, Debug)]
pub struct CaseOutcome {
    pub epsilon: f64,
    pub records: Vec<DiscrepancyRecord>,
    pub failures: Vec<CaseFailure>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcludedPoint {
    pub epsilon: f64,
    pub value: f64,
    pub disc_error: f64,
    pub reason: String,
}

/// Rate fit of one quantity for one mode, with the points left out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantityFit {
    pub quantity: String,
    pub mode: usize,
    pub theoretical_exponent: f64,
    pub fit: Option<RateFit>,
    /// `C` in `e ≈ C·ε^slope`; informative only.
    pub fitted_constant: Option<f64>,
    pub excluded: Vec<ExcludedPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every point sits below the discretization or roundoff floor.
    SkippedBelowFloor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckVerdict {
    pub check: CheckKind,
    pub passed: bool,
    pub verdict: Verdict,
    pub threshold: Option<f64>,
    pub detail: String,
}

/// Wall-clock timings; kept out of the report so that reports are
/// reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub per_epsilon: Vec<(f64, f64)>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub records: Vec<DiscrepancyRecord>,
    pub failures: Vec<CaseFailure>,
    pub fits: Vec<QuantityFit>,
    pub checks: Vec<CheckVerdict>,
    pub passed: bool,
    #[serde(skip)]
    pub timings: Timings,
}

impl StudyReport {
    pub fn check(&self, kind: CheckKind) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| c.check == kind)
    }

    pub fn fit(&self, quantity: &str, mode: usize) -> Option<&QuantityFit> {
        self.fits.iter().find(|f| f.quantity == quantity && f.mode == mode)
    }
}

/// One discretization level: grid, effective model and fibre ground energy.
struct Level {
    grid: GridSpec,
    model: EffectiveOperator1D,
    lambda0: f64,
}

impl Level {
    fn new(geom: &BundleGeometry, grid: GridSpec) -> Result<Self> {
        Ok(Self {
            grid,
            model: assemble_effective(geom, &grid)?,
            lambda0: discrete_fibre_ground_energy(geom, &grid)?,
        })
    }
}

/// Low full spectrum at one level. Without a configured shift the shift is
/// placed below `Λ₀ + ε² min V_eff` and lowered if the factorization fails.
fn solve_level(
    cfg: &StudyConfig,
    geom: &BundleGeometry,
    eps: Epsilon,
    level: &Level,
    k: usize,
) -> Result<EigenPairSet> {
    let op = assemble_full(geom, eps, &level.grid)?;
    let mut sc = cfg.solver.solve_config(k);
    if sc.shift.is_some() {
        return smallest_eigenpairs(&op, &sc);
    }
    let vmin = level.model.potential.iter().copied().fold(f64::INFINITY, f64::min);
    let e2 = eps.value() * eps.value();
    let mut margin = 1.0;
    loop {
        sc.shift = Some(level.lambda0 + e2 * (vmin - margin));
        match smallest_eigenpairs(&op, &sc) {
            Err(Error::FactorizationFailed { .. }) if margin < 1e4 => margin *= 8.0,
            other => return other,
        }
    }
}

fn is_solver_error(e: &Error) -> bool {
    matches!(e, Error::NoConvergence { .. } | Error::FactorizationFailed { .. })
}

fn richardson_factor(refine: usize, order: f64) -> f64 {
    let rp = (refine as f64).powf(order);
    rp / (rp - 1.0)
}

fn run_case(cfg: &StudyConfig, geom: &BundleGeometry, coarse: &Level, fine: &Level, eps_value: f64) -> CaseOutcome {
    let start = Instant::now();
    let modes = cfg.modes();
    let k = modes.iter().max().map_or(3, |j| j + 3);
    let mut outcome = CaseOutcome {
        epsilon: eps_value,
        records: Vec::new(),
        failures: Vec::new(),
        seconds: 0.0,
    };
    let fail_all = |outcome: &mut CaseOutcome, e: Error| {
        outcome.failures.push(CaseFailure {
            epsilon: eps_value,
            mode: None,
            solver: is_solver_error(&e),
            error: e.to_string(),
        });
    };
    let eps = match geom.validate_epsilon(eps_value) {
        Ok(e) => e,
        Err(e) => {
            fail_all(&mut outcome, e);
            return outcome;
        }
    };
    let solves = solve_level(cfg, geom, eps, coarse, k).and_then(|c| Ok((c, solve_level(cfg, geom, eps, fine, k)?)));
    let (full_c, full_f) = match solves {
        Ok(pair) => pair,
        Err(e) => {
            fail_all(&mut outcome, e);
            outcome.seconds = start.elapsed().as_secs_f64();
            return outcome;
        }
    };

    let order = cfg.grid.stencil_order.as_f64();
    let factor = richardson_factor(cfg.grid.refine, order);
    // nodal lines come from piecewise-linear interpolation
    let factor_nodal = richardson_factor(cfg.grid.refine, 2.0);
    let e2 = eps_value * eps_value;
    for j in modes {
        let measured = |level: &Level, full: &EigenPairSet| -> Result<DiscrepancyRecord> {
            let pred = build_prediction(geom, eps, &level.model, j, &level.grid)?;
            measure(full, &pred, geom, eps, &level.grid, level.lambda0)
        };
        let pair = measured(coarse, &full_c).and_then(|c| Ok((c, measured(fine, &full_f)?)));
        match pair {
            Ok((mut rec, refined)) => {
                let signed = |r: &DiscrepancyRecord| (r.lambda_full - r.lambda0) / e2 - r.mu_eff;
                rec.disc_errors = DiscErrors {
                    eig_gap: (signed(&rec) - signed(&refined)).abs() * factor,
                    supnorm: (rec.supnorm - refined.supnorm).abs() * factor,
                    hausdorff: (rec.hausdorff - refined.hausdorff).abs() * factor_nodal,
                };
                rec.disc_error_estimate = rec.disc_errors.eig_gap;
                outcome.records.push(rec);
            }
            Err(e) => outcome.failures.push(CaseFailure {
                epsilon: eps_value,
                mode: Some(j),
                solver: is_solver_error(&e),
                error: e.to_string(),
            }),
        }
    }
    outcome.seconds = start.elapsed().as_secs_f64();
    outcome
}

/// Runs the configured `ε`-sweep (in parallel over `ε`) and evaluates the
/// checks. Per-`ε` failures are recorded; configuration errors abort.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let (geom, grid, fine_grid) = cfg.validate()?;
    let coarse = Level::new(&geom, grid)?;
    let fine = Level::new(&geom, fine_grid)?;
    let outcomes: Vec<CaseOutcome> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| run_case(cfg, &geom, &coarse, &fine, eps))
        .collect();
    let mut report = assemble_report(cfg, outcomes)?;
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn quantity_value(r: &DiscrepancyRecord, q: &str) -> (f64, f64) {
    match q {
        "eig_gap" => (r.eig_gap, r.disc_errors.eig_gap),
        "supnorm" => (r.supnorm, r.disc_errors.supnorm),
        _ => (r.hausdorff, r.disc_errors.hausdorff),
    }
}

fn fit_quantity(
    records: &[&DiscrepancyRecord],
    quantity: &str,
    mode: usize,
    geom: &BundleGeometry,
    floor: f64,
) -> QuantityFit {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        let (value, disc_error) = quantity_value(r, quantity);
        let reason = if !(value > floor) {
            Some("at_floor")
        } else if disc_error > DISC_GUARD * value {
            Some("discretization")
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(ExcludedPoint {
                epsilon: r.epsilon,
                value,
                disc_error,
                reason: reason.to_string(),
            }),
            None => used.push((r.epsilon, value)),
        }
    }
    let fit = fit_rate(&used).ok();
    QuantityFit {
        quantity: quantity.to_string(),
        mode,
        theoretical_exponent: theoretical_exponent(quantity, geom),
        fitted_constant: fit.as_ref().map(RateFit::constant),
        fit,
        excluded,
    }
}

fn combine(verdicts: &[(Verdict, String)]) -> (Verdict, String) {
    let verdict = if verdicts.iter().any(|v| v.0 == Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.iter().any(|v| v.0 == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::SkippedBelowFloor
    };
    let detail = verdicts.iter().map(|v| v.1.as_str()).collect::<Vec<_>>().join("; ");
    (verdict, detail)
}

/// Fits and verdicts for already computed cases; `run_study` without the
/// solves, so that records can also be injected directly.
pub fn assemble_report(cfg: &StudyConfig, outcomes: Vec<CaseOutcome>) -> Result<StudyReport> {
    let geom = cfg.geometry.build()?;
    let modes = cfg.modes();
    let floor = cfg.abs_floor();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Timings::default();
    for o in outcomes {
        timings.per_epsilon.push((o.epsilon, o.seconds));
        records.extend(o.records);
        failures.extend(o.failures);
    }
    let n_eps = cfg.epsilons.len();
    let of_mode = |j: usize| -> Vec<&DiscrepancyRecord> { records.iter().filter(|r| r.mode == j).collect() };
    let complete = |j: usize| of_mode(j).len() == n_eps;

    let mut fits = Vec::new();
    for &j in &modes {
        let recs = of_mode(j);
        for q in QUANTITIES {
            fits.push(fit_quantity(&recs, q, j, &geom, floor));
        }
    }

    let mut checks = Vec::new();
    for &kind in &cfg.study.checks {
        let threshold = cfg.threshold(kind, &geom);
        let per_mode: Vec<(Verdict, String)> = modes
            .iter()
            .map(|&j| {
                if !complete(j) {
                    return (Verdict::Fail, format!("mode {j}: sweep incomplete"));
                }
                let recs = of_mode(j);
                let all = |pred: &dyn Fn(&NodalReport) -> bool| recs.iter().all(|r| pred(&r.nodal));
                match kind {
                    CheckKind::EigRate | CheckKind::SupnormRate | CheckKind::HausdorffRate => {
                        let q = match kind {
                            CheckKind::EigRate => "eig_gap",
                            CheckKind::SupnormRate => "supnorm",
                            _ => "hausdorff",
                        };
                        let f = fits
                            .iter()
                            .find(|f| f.quantity == q && f.mode == j)
                            .expect("fit per mode");
                        let thr = threshold.unwrap_or(0.0);
                        match &f.fit {
                            Some(fit) if fit.slope >= thr => {
                                (Verdict::Pass, format!("mode {j}: slope {:.3} >= {thr}", fit.slope))
                            }
                            Some(fit) => (Verdict::Fail, format!("mode {j}: slope {:.3} < {thr}", fit.slope)),
                            None if f.excluded.len() == n_eps => {
                                (Verdict::SkippedBelowFloor, format!("mode {j}: all points below floor"))
                            }
                            None => (
                                Verdict::Fail,
                                format!("mode {j}: {} usable points", n_eps - f.excluded.len()),
                            ),
                        }
                    }
                    CheckKind::Isotopy => {
                        let smallest = recs
                            .iter()
                            .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
                            .expect("nonempty");
                        let n = &smallest.nodal;
                        let ok = n.graph_over_fiber && n.component_count == n.zero_list.len();
                        let v = if ok { Verdict::Pass } else { Verdict::Fail };
                        (
                            v,
                            format!(
                                "mode {j}: graph {} with {} components for {} zeros at eps {}",
                                n.graph_over_fiber,
                                n.component_count,
                                n.zero_list.len(),
                                smallest.epsilon
                            ),
                        )
                    }
                    CheckKind::Boundary => {
                        let ok = all(&|n| n.boundary_components >= 2 * n.zero_list.len());
                        let counts: Vec<usize> = recs.iter().map(|r| r.nodal.boundary_components).collect();
                        let zeros = recs.first().map_or(0, |r| r.nodal.zero_list.len());
                        let v = if ok { Verdict::Pass } else { Verdict::Fail };
                        (v, format!("mode {j}: boundary components {counts:?} for {zeros} zeros"))
                    }
                    CheckKind::Courant => {
                        let ok = all(&|n| n.domain_count <= j + 1);
                        let counts: Vec<usize> = recs.iter().map(|r| r.nodal.domain_count).collect();
                        let v = if ok { Verdict::Pass } else { Verdict::Fail };
                        (v, format!("mode {j}: domain counts {counts:?}"))
                    }
                }
            })
            .collect();
        let (verdict, detail) = combine(&per_mode);
        checks.push(CheckVerdict {
            check: kind,
            passed: verdict != Verdict::Fail,
            verdict,
            threshold,
            detail,
        });
    }
    let passed = failures.is_empty() && checks.iter().all(|c| c.passed);
    Ok(StudyReport {
        config: cfg.clone(),
        records,
        failures,
        fits,
        checks,
        passed,
        timings,
    })
}

/// A record carrying only the three measured quantities, for exercising
/// the fitting and reporting path without solves.
pub fn synthetic_record(epsilon: f64, mode: usize, eig_gap: f64, supnorm: f64, hausdorff: f64) -> DiscrepancyRecord {
    DiscrepancyRecord {
        epsilon,
        mode,
        lambda_full: 0.0,
        mu_eff: 0.0,
        lambda0: 0.0,
        eig_gap,
        supnorm,
        hausdorff,
        nodal: NodalReport {
            domain_count: mode + 1,
            component_count: 0,
            hausdorff,
            boundary_components: 0,
            graph_over_fiber: true,
            zero_list: Vec::new(),
        },
        tube_radius: 0.0,
        tube_constant: 0.0,
        disc_error_estimate: 0.0,
        disc_errors: DiscErrors::default(),
    }
}
