//! `henondim` — one command-line entry point for the whole toolkit: orbit
//! cache building, pressure curves, dimension reports, maximizer reports,
//! oracle self-tests, parameter sweeps, and the sub-mean-value check.
//!
//! Conventions: data goes to `--out` or standard output, logs go to standard
//! error, numeric output is lossless (CSV at 17 significant digits, reports
//! as shortest round-trip decimals). Exit codes: 0 success, 2 configuration
//! error, 3 numerical failure; error messages lead with the module error tag.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use henondim::config::{GridSpec, RunConfig, SystemSpec};
use henondim::dimension::{dimension_report, render_report, DimensionReport};
use henondim::oracle::selftest;
use henondim::orbits::{
    cache_load, cache_store, enumerate_orbits, EnumerateOpts, LibraryRebuild, OrbitLibrary,
};
use henondim::pressure::{build_curve, t_grid, write_curve_csv, PressureCurve};
use henondim::sweep::{continuity_statistic, render_submean, submean_check, sweep, write_sweep_csv};
use henondim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "henondim",
    version,
    about = "Pressure curves, fractal dimensions, and maximal-dimension measures \
             for hyperbolic complex Hénon maps",
    after_help = "Flag precedence: command-line flags override config fields; \
                  the cache directory resolves flag > HENONDIM_CACHE_DIR > config."
)]
struct Cli {
    /// TOML run configuration (required by every subcommand except oracle-selftest).
    #[arg(short, long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Deepest orbit period (overrides the config's n_max; must be >= 3).
    #[arg(long, global = true, value_name = "N")]
    n_max: Option<u32>,

    /// Root/maximizer tolerance (overrides the config's tol; must be > 0).
    #[arg(long, global = true, value_name = "TOL", allow_negative_numbers = true)]
    tol: Option<f64>,

    /// Pressure-grid start (overrides t_grid.start).
    #[arg(long, global = true, value_name = "T", allow_negative_numbers = true)]
    t_start: Option<f64>,

    /// Pressure-grid stop (overrides t_grid.stop).
    #[arg(long, global = true, value_name = "T", allow_negative_numbers = true)]
    t_stop: Option<f64>,

    /// Pressure-grid step (overrides t_grid.step; must be > 0).
    #[arg(long, global = true, value_name = "STEP", allow_negative_numbers = true)]
    t_step: Option<f64>,

    /// Worker threads, 0 = auto (overrides the config's jobs). Never changes
    /// output bytes.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Orbit cache directory (overrides HENONDIM_CACHE_DIR and the config's
    /// cache_dir).
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// Write data output to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or refresh the orbit cache for the configured system.
    Orbits,
    /// Emit the pressure-curve CSV over the configured t grid.
    Pressure,
    /// Emit the full dimension report (roots, maximizers, diagnostics).
    Dims,
    /// Report the dimension maximizers and the critical-point formula residual.
    Maxdim,
    /// Run the built-in exactly-solvable-model self-test suite.
    OracleSelftest,
    /// Emit the parameter-family atlas CSV for the configured family.
    Sweep,
    /// Run the sub-mean-value check on the configured circle family.
    Submean,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(if err.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if matches!(cli.command, Command::OracleSelftest) {
        init_jobs(cli.jobs.unwrap_or(0))?;
        return oracle_selftest(cli.out.as_deref());
    }

    let config_path = cli.config.as_deref().ok_or_else(|| {
        Error::Config("this subcommand needs a configuration: pass --config <PATH>".into())
    })?;
    let mut cfg = RunConfig::from_file(config_path)?;
    apply_overrides(&mut cfg, &cli)?;
    init_jobs(cfg.jobs)?;

    let cache_dir: Option<PathBuf> = cli
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("HENONDIM_CACHE_DIR").map(PathBuf::from))
        .or_else(|| cfg.cache_dir.clone());
    let out = cli.out.as_deref();

    match cli.command {
        Command::Orbits => {
            let dir = cache_dir.as_deref().ok_or_else(|| {
                Error::Config(
                    "orbits needs a cache directory: pass --cache-dir, set \
                     HENONDIM_CACHE_DIR, or set cache_dir in the config"
                        .into(),
                )
            })?;
            let library = obtain_library(&cfg, Some(dir), true)?;
            eprintln!(
                "orbit library complete: {} orbits across periods 1..={}",
                library.total_orbits(),
                library.n_max()
            );
            Ok(())
        }
        Command::Pressure => {
            let grid = t_grid(cfg.t_grid.start, cfg.t_grid.stop, cfg.t_grid.step)?;
            let curve: PressureCurve = match &cfg.system {
                SystemSpec::Linear(model) => model.exact_curve(&grid)?,
                SystemSpec::Map(_) => {
                    let library = obtain_library(&cfg, cache_dir.as_deref(), false)?;
                    build_curve(&library, &grid, cfg.n_max)?
                }
            };
            if !curve.p_u_strictly_decreasing {
                eprintln!("warning: P_u is not strictly decreasing across this grid");
            }
            if !curve.lambda_nonincreasing {
                eprintln!("warning: Lambda is not nonincreasing (within 2 err_est) across this grid");
            }
            let mut bytes = Vec::new();
            write_curve_csv(&curve, &mut bytes)
                .map_err(|e| Error::Io {
                    path: "<buffer>".into(),
                    source: e,
                })?;
            emit(out, &bytes)
        }
        Command::Dims => {
            let report = compute_report(&cfg, cache_dir.as_deref())?;
            emit(out, render_report(&report).as_bytes())
        }
        Command::Maxdim => {
            let report = compute_report(&cfg, cache_dir.as_deref())?;
            emit(out, render_maxdim(&report).as_bytes())
        }
        Command::Sweep => {
            let family = cfg.family()?;
            let records = sweep(family, cfg.n_max, cfg.tol)?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} samples failed", records.len());
            }
            eprintln!("continuity-statistic={}", continuity_statistic(&records));
            let mut bytes = Vec::new();
            write_sweep_csv(&records, &mut bytes).map_err(|e| Error::Io {
                path: "<buffer>".into(),
                source: e,
            })?;
            emit(out, &bytes)
        }
        Command::Submean => {
            let family = cfg.family()?;
            let report = submean_check(family, cfg.n_max, cfg.tol)?;
            emit(out, render_submean(&report).as_bytes())
        }
        Command::OracleSelftest => unreachable!("handled before config loading"),
    }
}

/// Apply command-line overrides on top of the parsed config, re-validating
/// the same invariants the config parser enforces.
fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) -> Result<()> {
    if let Some(n) = cli.n_max {
        if n < 3 {
            return Err(Error::Config(format!("n_max must be at least 3, got {n}")));
        }
        cfg.n_max = n;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::Config(format!(
                "tol must be positive and finite, got {tol}"
            )));
        }
        cfg.tol = tol;
    }
    if cli.t_start.is_some() || cli.t_stop.is_some() || cli.t_step.is_some() {
        let grid = GridSpec {
            start: cli.t_start.unwrap_or(cfg.t_grid.start),
            stop: cli.t_stop.unwrap_or(cfg.t_grid.stop),
            step: cli.t_step.unwrap_or(cfg.t_grid.step),
        };
        if !(grid.step > 0.0) || !grid.step.is_finite() {
            return Err(Error::Config(format!(
                "t_grid step must be positive and finite, got {}",
                grid.step
            )));
        }
        if !(grid.stop > grid.start) || !grid.start.is_finite() || grid.start < 0.0 {
            return Err(Error::Config(format!(
                "t_grid needs 0 <= start < stop, got start = {}, stop = {}",
                grid.start, grid.stop
            )));
        }
        cfg.t_grid = grid;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    Ok(())
}

/// Pin the global worker pool when `jobs > 0`; `jobs = 0` lets the runtime
/// auto-detect. Ordered reductions upstream keep output bytes identical at
/// any width.
fn init_jobs(jobs: usize) -> Result<()> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("jobs: {e}")))?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

fn system_fingerprint(system: &SystemSpec) -> String {
    match system {
        SystemSpec::Map(map) => map.fingerprint(),
        SystemSpec::Linear(model) => model.fingerprint(),
    }
}

fn rebuild_plan(system: &SystemSpec) -> LibraryRebuild<'_> {
    match system {
        SystemSpec::Map(map) => LibraryRebuild::Henon(map),
        SystemSpec::Linear(model) => LibraryRebuild::Synthetic {
            fingerprint: model.fingerprint(),
            degree: model.degree(),
            log_jac_mod: model.log_a(),
        },
    }
}

fn build_library(cfg: &RunConfig) -> Result<OrbitLibrary> {
    match &cfg.system {
        SystemSpec::Map(map) => {
            eprintln!("enumerating periodic orbits to period {}", cfg.n_max);
            enumerate_orbits(map, cfg.n_max, &EnumerateOpts::default())
        }
        SystemSpec::Linear(model) => model.synthetic_library(cfg.n_max),
    }
}

/// Load the orbit library from the cache when possible, building and storing
/// it otherwise. `refresh` forces a rebuild (the `orbits` subcommand).
fn obtain_library(
    cfg: &RunConfig,
    cache_dir: Option<&Path>,
    refresh: bool,
) -> Result<OrbitLibrary> {
    let Some(dir) = cache_dir else {
        return build_library(cfg);
    };
    let fingerprint = system_fingerprint(&cfg.system);
    let file = dir.join(format!("{}-n{}.orbits", &fingerprint[..16], cfg.n_max));
    if !refresh && file.exists() {
        eprintln!("loading orbit cache {}", file.display());
        return cache_load(&file, rebuild_plan(&cfg.system));
    }
    let library = build_library(cfg)?;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    cache_store(&file, &library)?;
    eprintln!("wrote orbit cache {}", file.display());
    Ok(library)
}

fn compute_report(cfg: &RunConfig, cache_dir: Option<&Path>) -> Result<DimensionReport> {
    match &cfg.system {
        SystemSpec::Linear(model) => model.exact_report(),
        SystemSpec::Map(_) => {
            let library = obtain_library(cfg, cache_dir, false)?;
            dimension_report(&library, cfg.n_max, cfg.tol)
        }
    }
}

fn render_maxdim(report: &DimensionReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("maximizer_count", report.maximizers.len().to_string());
    for (i, &(t_star, delta_star)) in report.maximizers.iter().enumerate() {
        kv(&format!("t_star_{}", i + 1), t_star.to_string());
        kv(&format!("Delta_star_{}", i + 1), delta_star.to_string());
    }
    kv("d_g", report.d_g.to_string());
    kv("gap", report.gap.to_string());
    kv("formula_residual", report.formula_residual.to_string());
    out
}

/// Run the self-test suite, print one line per check plus a summary, and
/// fail with a nonzero exit if any check misses its tolerance.
fn oracle_selftest(out: Option<&Path>) -> Result<()> {
    let checks = selftest()?;
    let mut text = String::new();
    let mut failed = 0usize;
    for check in &checks {
        let status = if check.passed() { "ok" } else { "FAIL" };
        text.push_str(&format!(
            "[{status}] {} residual={} tol={}\n",
            check.name, check.residual, check.tol
        ));
        if !check.passed() {
            failed += 1;
        }
    }
    if failed == 0 {
        text.push_str("all-oracle-checks-passed\n");
    }
    emit(out, text.as_bytes())?;
    if failed > 0 {
        return Err(Error::InvalidModel(format!(
            "oracle self-test failed: {failed} of {} checks missed tolerance",
            checks.len()
        )));
    }
    eprintln!("oracle self-test: {} checks passed", checks.len());
    Ok(())
}
