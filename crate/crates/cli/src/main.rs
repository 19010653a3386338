//! Command-line driver.
//!
//! Subcommands: `solve | path | roundtrip | stability | checks`, each taking
//! `--config <file> --out <dir> [--emit-fields]`. Exit codes partition the
//! outcomes: 0 success with all monitors passing, 2 configuration or schema
//! violation, 3 nonconvergence or path failure, 4 monitor failure,
//! 5 internal cross-check failure.

mod config;
mod output;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use vortex_core::bundle::{self, make_background};
use vortex_core::geometry::{make_grid, FieldKind, ScalarField};
use vortex_core::solver::{continue_path, newton_solve, uniqueness_roundtrip};
use vortex_core::stability::gieseker_verdict;
use vortex_core::VortexError;

use config::RunConfig;
use output::{emit_report, CheckRecord};

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_MONITOR: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "vortex",
    about = "Vortex-equation continuation solver and stability calculator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and traces.
    #[arg(long)]
    out: PathBuf,
    /// Also dump psi fields as CSV per accepted state.
    #[arg(long, default_value_t = false)]
    emit_fields: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Newton solve at the first waypoint of the configured path.
    Solve(CommonArgs),
    /// Adaptive continuation along the configured waypoints.
    Path(CommonArgs),
    /// Forward-perturb-backward-forward uniqueness probe.
    Roundtrip(CommonArgs),
    /// Exact Gieseker stability report.
    Stability(CommonArgs),
    /// Geometry and bundle identity suites.
    Checks(CommonArgs),
}

type Runner = fn(&RunConfig, &CommonArgs) -> Result<u8>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, runner): (&CommonArgs, Runner) = match &cli.command {
        Command::Solve(a) => (a, run_solve),
        Command::Path(a) => (a, run_path),
        Command::Roundtrip(a) => (a, run_roundtrip),
        Command::Stability(a) => (a, run_stability),
        Command::Checks(a) => (a, run_checks),
    };
    let outcome = load_config(&args.config).and_then(|cfg| runner(&cfg, args));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("configuration error: cannot read {path:?}"))?;
    RunConfig::parse(&text).map_err(anyhow::Error::msg)
}

/// Map error chains onto the exit-code partition.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<VortexError>() {
        return match core {
            VortexError::Config(_)
            | VortexError::GridMismatch(..)
            | VortexError::WrongFieldKind { .. }
            | VortexError::Admissibility(_) => EXIT_CONFIG,
            VortexError::NonConvergence { .. }
            | VortexError::PathFailure { .. }
            | VortexError::DenominatorNonpositive(_) => EXIT_NONCONVERGENCE,
            VortexError::InternalCheck(_) => EXIT_INTERNAL,
        };
    }
    EXIT_CONFIG
}

struct Prepared {
    grid: vortex_core::geometry::SurfaceGrid,
    bundle: vortex_core::bundle::LineBundleData,
    family: vortex_core::equation::FamilySpec,
    path: vortex_core::solver::PathSpec,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let grid = make_grid(cfg.grid().map_err(anyhow::Error::msg)?.n)?;
    let family = cfg.family().map_err(anyhow::Error::msg)?.clone();
    let path = cfg.path().map_err(anyhow::Error::msg)?.clone();
    path.validate()?;
    let cap = match &cfg.bundle {
        Some(b) => b.cap,
        None => family.default_cap()?,
    };
    let bundle = make_background(&grid, cap)?;
    Ok(Prepared {
        grid,
        bundle,
        family,
        path,
    })
}

fn finish(summary: &output::RunSummary) -> u8 {
    if summary.all_monitors_pass {
        0
    } else {
        eprintln!("monitor failure: see ledger for the violated verdicts");
        EXIT_MONITOR
    }
}

fn run_solve(cfg: &RunConfig, args: &CommonArgs) -> Result<u8> {
    let p = prepare(cfg)?;
    let (alpha, t) = p.path.waypoints[0];
    let params = p.family.params_at(&p.grid, &p.bundle, alpha, t)?;
    let zero = ScalarField::constant(&p.grid, FieldKind::Function, 0.0);
    let state = newton_solve(
        &params,
        &p.bundle,
        &p.grid,
        &zero,
        p.path.newton_tol,
        p.path.max_newton_iters,
    )?;
    let summary = emit_report(
        &args.out,
        &p.grid,
        std::slice::from_ref(&state),
        args.emit_fields,
    )?;
    Ok(finish(&summary))
}

fn run_path(cfg: &RunConfig, args: &CommonArgs) -> Result<u8> {
    let p = prepare(cfg)?;
    let zero = ScalarField::constant(&p.grid, FieldKind::Function, 0.0);
    let states = continue_path(&p.path, &p.family, &p.bundle, &p.grid, &zero)?;
    let summary = emit_report(&args.out, &p.grid, &states, args.emit_fields)?;
    Ok(finish(&summary))
}

fn run_roundtrip(cfg: &RunConfig, args: &CommonArgs) -> Result<u8> {
    let p = prepare(cfg)?;
    let pc = cfg.perturbation().map_err(anyhow::Error::msg)?;
    let (amp, kx, ky) = (pc.amplitude, pc.kx as f64, pc.ky as f64);
    let pert = ScalarField::from_fn(&p.grid, FieldKind::Function, |x, y| {
        amp * (2.0 * PI * (kx * x + ky * y)).sin()
    });
    let report = uniqueness_roundtrip(&p.path, &p.family, &p.bundle, &p.grid, &pert)?;
    // the forward leg's states carry the monitor ledger for the report
    let zero = ScalarField::constant(&p.grid, FieldKind::Function, 0.0);
    let states = continue_path(&p.path, &p.family, &p.bundle, &p.grid, &zero)?;
    let summary = emit_report(&args.out, &p.grid, &states, args.emit_fields)?;
    fs::write(
        args.out.join("roundtrip.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(finish(&summary))
}

fn run_stability(cfg: &RunConfig, args: &CommonArgs) -> Result<u8> {
    let spec = cfg.stability().map_err(anyhow::Error::msg)?;
    let report = gieseker_verdict(spec)?;
    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("stability.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(0)
}

fn run_checks(cfg: &RunConfig, args: &CommonArgs) -> Result<u8> {
    let grid = make_grid(cfg.grid().map_err(anyhow::Error::msg)?.n)?;
    let cap = cfg.bundle.as_ref().map(|b| b.cap).unwrap_or(0.5);
    let data = make_background(&grid, cap)?;
    let mut checks = Vec::new();

    let one = ScalarField::constant(&grid, FieldKind::Function, 1.0);
    checks.push(CheckRecord::new(
        "area_two_pi",
        (grid.integrate(&one)? - 2.0 * PI).abs(),
        1e-10,
    ));

    let sinx = ScalarField::from_fn(&grid, FieldKind::Function, |x, _| (2.0 * PI * x).sin());
    let lap = grid.laplacian(&sinx)?;
    let expected = sinx.map(|v| -4.0 * PI * PI * v);
    checks.push(CheckRecord::new(
        "laplacian_eigenfunction",
        lap.linf_diff(&expected)?,
        1e-9,
    ));

    let rough = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
        (13.0 * x).sin().abs() + (y - 0.37).abs()
    });
    checks.push(CheckRecord::new(
        "ddbar_mean_zero",
        grid.integrate(&grid.ddbar_density(&rough)?)?.abs(),
        1e-9,
    ));

    let f = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
        (2.0 * PI * x).sin() + (2.0 * PI * y).cos()
    });
    checks.push(CheckRecord::new(
        "green_representation",
        grid.green_representation_check(&f)?,
        1e-10,
    ));
    checks.push(CheckRecord::new(
        "green_representation_s0",
        grid.green_representation_check(&data.s0)?,
        1e-6,
    ));

    let mut periodicity = 0.0f64;
    for i in 0..25 {
        let x = 0.04 * i as f64 + 0.011;
        let y = 0.93 - 0.03 * i as f64;
        let v = bundle::section_density_raw(x, y);
        periodicity = periodicity.max((bundle::section_density_raw(x + 1.0, y) - v).abs());
        periodicity = periodicity.max((bundle::section_density_raw(x, y + 1.0) - v).abs());
    }
    checks.push(CheckRecord::new("theta_periodicity", periodicity, 1e-12));

    let (mut zi, mut zmin) = (0usize, f64::INFINITY);
    for (idx, &v) in data.s0.values().iter().enumerate() {
        if v < zmin {
            zmin = v;
            zi = idx;
        }
    }
    let (zx, zy) = grid.coords(zi);
    checks.push(CheckRecord::new(
        "theta_zero_location_cells",
        ((zx - 0.5).abs().max((zy - 0.5).abs())) / grid.spacing(),
        1.0,
    ));

    checks.push(CheckRecord::new(
        "poincare_lelong",
        data.poincare_lelong_residual(&grid, 3)?,
        1e-4,
    ));

    checks.push(CheckRecord::new(
        "degree_theta0",
        (grid.integrate(&data.theta0)? / (2.0 * PI) - 1.0).abs(),
        1e-8,
    ));

    let psi = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
        0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
    });
    checks.push(CheckRecord::new(
        "gradient_pairing_identity",
        data.gradient_identity_residual(&grid, &psi, 0.01)?,
        1e-6,
    ));
    let gp = data.grad_pairing_density(&grid, &psi)?;
    checks.push(CheckRecord::new(
        "gradient_pairing_positivity",
        (-gp.min()).max(0.0),
        1e-6,
    ));

    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("checks.json"),
        serde_json::to_string_pretty(&checks)?,
    )?;
    if checks.iter().all(|c| c.pass) {
        Ok(0)
    } else {
        for c in checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "check failed: {} = {:.3e} (tolerance {:.1e})",
                c.name, c.value, c.tolerance
            );
        }
        Ok(EXIT_MONITOR)
    }
}
