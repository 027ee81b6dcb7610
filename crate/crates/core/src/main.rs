use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fibrelab::adiabatic::{discrete_fibre_ground_energy, lambda_eps_oracle};
use fibrelab::eigensolve::{smallest_eigenpairs, verify_pairs, EigenPairSet, SolveConfig};
use fibrelab::geometry::{BundleGeometry, Epsilon, PeriodicProfile, WarpedTorusGeometry, WaveguideGeometry};
use fibrelab::harness::{emit_report, fit_rate, run_study, StudyConfig};
use fibrelab::nodal::{extract_nodal_set, ScalarField};
use fibrelab::operators::{assemble_effective, assemble_full, GridSpec, StencilOrder};
use fibrelab::Error;

#[derive(Parser)]
#[command(
    name = "fibrelab",
    version,
    about = "Adiabatic-limit spectral studies on thin fibre bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an epsilon sweep and write report.json, records.csv and plots.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 if any configured check fails.
        #[arg(long)]
        assert: bool,
    },
    /// Print the lowest eigenvalues of the full operator.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
    /// Write the nodal set of one full eigenfunction as CSV.
    Nodal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        mode: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant self-tests.
    Check,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ASSERT: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::FactorizationFailed { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn full_solve(config: &Path, epsilon: f64, k: usize) -> fibrelab::Result<(BundleGeometry, GridSpec, EigenPairSet)> {
    let cfg = StudyConfig::load(config)?;
    let geom = cfg.geometry.build()?;
    let grid = cfg.grid.spec();
    let eps = geom.validate_epsilon(epsilon)?;
    let op = assemble_full(&geom, eps, &grid)?;
    let mut sc = cfg.solver.solve_config(k);
    if sc.shift.is_none() {
        let vmin = assemble_effective(&geom, &grid)?
            .potential
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        sc.shift = Some(discrete_fibre_ground_energy(&geom, &grid)? + epsilon * epsilon * (vmin - 1.0));
    }
    Ok((geom, grid, smallest_eigenpairs(&op, &sc)?))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Study { config, out, assert } => {
            let cfg = StudyConfig::load(&config)?;
            let report = run_study(&cfg)?;
            let dir = out
                .or_else(|| cfg.study.out.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            for path in emit_report(&report, &dir)? {
                println!("wrote {}", path.display());
            }
            for c in &report.checks {
                println!("{:<15} {:?}  {}", c.check.name(), c.verdict, c.detail);
            }
            for f in &report.failures {
                eprintln!("eps {} mode {:?}: {}", f.epsilon, f.mode, f.error);
            }
            if report.failures.iter().any(|f| f.solver) {
                return Ok(EXIT_SOLVER);
            }
            if assert && !report.passed {
                return Ok(EXIT_ASSERT);
            }
            Ok(0)
        }
        Command::Solve { config, epsilon, k } => {
            let (_, _, pairs) = full_solve(&config, epsilon, k)?;
            for v in pairs.values.iter().take(k) {
                println!("{v:.15e}");
            }
            Ok(0)
        }
        Command::Nodal {
            config,
            epsilon,
            mode,
            out,
        } => {
            let (geom, grid, pairs) = full_solve(&config, epsilon, mode + 1)?;
            let field = ScalarField::from_values(&geom, &grid, pairs.vectors[mode].clone())?;
            let set = extract_nodal_set(&field)?;
            match out {
                Some(path) => set.write_csv(std::fs::File::create(path)?)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    set.write_csv(&mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(0)
        }
        Command::Check => Ok(if self_test() { 0 } else { 1 }),
    }
}

fn report(name: &str, ok: bool) -> bool {
    println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn self_test() -> bool {
    use std::f64::consts::PI;
    let mut ok = true;

    let flat = WarpedTorusGeometry::new(PI, 2.0 * PI, PeriodicProfile::constant(2.0 * PI, 1.0).unwrap()).unwrap();
    let flat = BundleGeometry::WarpedTorus(flat);
    let grid = GridSpec::new(32, 16, StencilOrder::Fourth).with_offset(0.5);
    let eps = flat.validate_epsilon(0.5).unwrap();
    let op = assemble_full(&flat, eps, &grid).unwrap();
    ok &= report("stiffness is exactly symmetric", op.stiffness.max_asymmetry() == 0.0);
    let k1 = op.stiffness.apply(&vec![1.0; op.dim()]);
    ok &= report(
        "closed operator annihilates constants",
        k1.iter().all(|v| v.abs() <= 1e-12 * op.stiffness.max_abs()),
    );
    match smallest_eigenpairs(&op, &SolveConfig::new(4).with_shift(-0.25)) {
        Ok(pairs) => {
            let v = verify_pairs(&op, &pairs);
            ok &= report("residuals within tolerance", v.max_residual <= 1e-10);
            ok &= report(
                "W-orthonormal eigenvectors",
                v.max_gram_offdiag.max(v.max_gram_diag_dev) <= 1e-8,
            );
            ok &= report("ground eigenvalue is zero", pairs.values[0].abs() < 1e-10);
        }
        Err(e) => ok &= report(&format!("flat torus solve ({e})"), false),
    }

    let ring = WaveguideGeometry::new(2.0 * PI, PeriodicProfile::constant(2.0 * PI, 1.0).unwrap()).unwrap();
    let oracle = lambda_eps_oracle(&ring, Epsilon::new(0.1).unwrap(), 0.0, 64);
    ok &= report(
        "fibre oracle at unit curvature",
        oracle.map(|l| (l - 2.464901).abs() < 1e-5).unwrap_or(false),
    );

    let fit = fit_rate(&[(0.2, 0.04), (0.1, 0.01), (0.05, 0.0025)]);
    ok &= report(
        "rate fit of a quadratic",
        fit.map(|f| (f.slope - 2.0).abs() < 1e-12).unwrap_or(false),
    );
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
