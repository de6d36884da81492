//! Config-driven front end for the `nonlocal_heat` solver.
//!
//! A run reads one JSON [`RunConfig`], executes one of four modes and
//! writes its artifacts (plus an echo of the effective config) into the
//! output directory. Exit codes: 0 success, 2 Picard did not converge
//! (artifacts are still written), 3 invalid config, 4 I/O failure,
//! 1 any other solver failure.

pub mod config;
pub mod error;
pub mod study;
pub mod sweep;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nonlocal_heat::fixedpoint::FixedPointSummary;
use nonlocal_heat::io::{
    write_field_csv, write_field_json, write_trajectory_binary, write_trajectory_csv,
};
use nonlocal_heat::{
    picard_solve, uniqueness_probe, verify, FixedPointReport, ProbeReport, Tolerances,
    VerificationReport,
};

pub use config::{Format, Mode, Problem, Refinement, RunConfig, SweepAxis};
pub use error::CliError;
pub use study::{convergence_study, StudyRow};
pub use sweep::{sweep, SweepRow};

/// Environment variable capping the worker count (0 = sequential).
pub const THREADS_ENV: &str = "NONLOCAL_HEAT_THREADS";

/// Command-line values that replace fields of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    /// One-line human-readable summary.
    pub summary: String,
    pub out_dir: PathBuf,
}

/// Loads `config_path`, applies `overrides` and executes the run.
///
/// A relative `output.dir` (and a relative `from_file` path) is taken
/// relative to the config file; `--out` is taken as given.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    let base_dir = config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    if let Some(mode) = overrides.mode {
        cfg.mode = mode;
    }
    if let Some(seed) = overrides.seed {
        cfg.fixedpoint.seed = seed;
    }
    let out_dir = match &overrides.out {
        Some(out) => out.clone(),
        None if cfg.output.dir.is_relative() => base_dir.join(&cfg.output.dir),
        None => cfg.output.dir.clone(),
    };
    cfg.output.dir = out_dir;
    run_config(&cfg, &base_dir)
}

/// Executes an in-memory config; `output.dir` is used as is.
pub fn run_config(cfg: &RunConfig, base_dir: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let out_dir = cfg.output.dir.clone();
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    write_json(&out_dir.join("config.json"), cfg)?;

    let (exit_code, summary) = match cfg.mode {
        Mode::Solve => solve(cfg, base_dir, &out_dir)?,
        Mode::Probe => probe(cfg, base_dir, &out_dir)?,
        Mode::ConvergenceStudy => {
            let rows = convergence_study(cfg, base_dir)?;
            study::write_table(&rows, &out_dir, &cfg.output.formats)?;
            let all = rows.iter().all(|r| r.converged);
            let order = rows
                .last()
                .and_then(|r| r.observed_order)
                .map_or("n/a".to_string(), |o| format!("{o:.3}"));
            (
                if all { 0 } else { 2 },
                format!(
                    "convergence_study levels={} converged={all} observed_order={order}",
                    rows.len()
                ),
            )
        }
        Mode::Sweep => {
            let rows = sweep(cfg, base_dir, &out_dir)?;
            let ok = rows.iter().filter(|r| r.converged).count();
            (
                0,
                format!("sweep rows={} converged={ok}/{}", rows.len(), rows.len()),
            )
        }
    };
    Ok(Outcome {
        exit_code,
        summary,
        out_dir,
    })
}

#[derive(Debug, Serialize)]
struct SolveDoc<'a> {
    mode: Mode,
    seed: u64,
    fixed_point: FixedPointSummary,
    verification: &'a VerificationReport,
    files: Vec<String>,
}

/// Picard solve followed by the verification checks.
pub fn solve_problem(
    problem: &Problem,
) -> Result<(FixedPointReport, VerificationReport), CliError> {
    let report = picard_solve(
        &problem.laplacian,
        &problem.potential,
        &problem.u0,
        &problem.evolution,
        &problem.picard,
    )?;
    let verification = verify(
        &report,
        &problem.potential,
        &problem.laplacian,
        &Tolerances::default(),
    )?;
    Ok((report, verification))
}

fn solve(cfg: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(i32, String), CliError> {
    let problem = cfg.problem(base_dir)?;
    let (report, verification) = solve_problem(&problem)?;

    let mut files = Vec::new();
    let formats = &cfg.output.formats;
    if formats.contains(&Format::Csv) {
        write_field_csv(&report.u_t, create(&out_dir.join("u_t.csv"))?)?;
        files.push("u_t.csv".to_string());
    }
    if formats.contains(&Format::Json) {
        write_field_json(&report.u_t, create(&out_dir.join("u_t.json"))?)?;
        files.push("u_t.json".to_string());
    }
    if cfg.output.trajectory {
        if formats.contains(&Format::Csv) {
            write_trajectory_csv(&report.trajectory, create(&out_dir.join("trajectory.csv"))?)?;
            files.push("trajectory.csv".to_string());
        }
        if formats.contains(&Format::Bin) {
            write_trajectory_binary(&report.trajectory, create(&out_dir.join("trajectory.bin"))?)?;
            files.push("trajectory.bin".to_string());
        }
    }
    write_json(
        &out_dir.join("report.json"),
        &SolveDoc {
            mode: Mode::Solve,
            seed: cfg.fixedpoint.seed,
            fixed_point: report.summary(),
            verification: &verification,
            files,
        },
    )?;

    let flag = |b: bool| if b { "ok" } else { "FAIL" };
    let summary = format!(
        "converged={} iterations={} residual={:.3e} threshold_product={} decay={} energy={} elliptic={}",
        report.converged,
        report.iterations,
        report.final_residual(),
        fmt_product(report.threshold.product),
        flag(verification.decay.passed()),
        flag(verification.energy.passed()),
        flag(verification.elliptic.passed),
    );
    Ok((if report.converged { 0 } else { 2 }, summary))
}

#[derive(Debug, Serialize)]
struct ProbeDoc<'a> {
    mode: Mode,
    probe: &'a ProbeReport,
}

/// Multi-start uniqueness probe on the current rayon pool.
pub fn probe_problem(problem: &Problem, starts: usize, seed: u64) -> Result<ProbeReport, CliError> {
    Ok(uniqueness_probe(
        &problem.laplacian,
        &problem.potential,
        &problem.u0,
        &problem.evolution,
        &problem.picard,
        starts,
        seed,
    )?)
}

fn probe(cfg: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<(i32, String), CliError> {
    let problem = cfg.problem(base_dir)?;
    let report = probe_problem(&problem, cfg.fixedpoint.starts, cfg.fixedpoint.seed)?;
    write_json(
        &out_dir.join("probe.json"),
        &ProbeDoc {
            mode: Mode::Probe,
            probe: &report,
        },
    )?;
    if let Some(first) = report.solutions.first() {
        if cfg.output.formats.contains(&Format::Csv) {
            write_field_csv(first, create(&out_dir.join("u_t.csv"))?)?;
        }
        if cfg.output.formats.contains(&Format::Json) {
            write_field_json(first, create(&out_dir.join("u_t.json"))?)?;
        }
    }
    let converged = report.starts.iter().filter(|s| s.converged).count();
    let summary = format!(
        "probe starts={} converged={converged} max_pairwise_relative={} threshold_product={}",
        report.starts.len(),
        report
            .max_pairwise_relative
            .map_or("n/a".to_string(), |d| format!("{d:.3e}")),
        fmt_product(report.threshold.product),
    );
    Ok((if report.all_converged() { 0 } else { 2 }, summary))
}

fn fmt_product(p: Option<f64>) -> String {
    p.map_or("n/a".to_string(), |p| format!("{p:.4e}"))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}
