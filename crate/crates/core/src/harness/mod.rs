//! `ε`-sweep convergence studies: per-`ε` solves with a refined-grid error
//! estimate, log-log rate fits, check verdicts and report files.

mod config;
mod fit;
mod report;
mod study;

pub use config::{
    theoretical_exponent, CheckKind, ExpCosConfig, GeometryConfig, GridConfig, ModeSelection, ProfileConfig,
    SeriesConfig, SolverConfig, StudyConfig, StudySection, Thresholds, DEFAULT_ABS_FLOOR, DISC_GUARD,
};
pub use fit::{fit_rate, RateFit};
pub use report::{emit_report, quantity_svg, records_csv, to_stable_json, CSV_HEADER};
pub use study::{
    assemble_report, run_study, synthetic_record, CaseFailure, CaseOutcome, CheckVerdict, ExcludedPoint, QuantityFit,
    StudyReport, Timings, Verdict, QUANTITIES,
};
