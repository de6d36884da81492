//! Self-convergence studies over a sequence of refined runs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nonlocal_heat::{norm_l2, Field, Grid};

use crate::config::{Format, InitialShape, Refinement, RunConfig, StudyConfig};
use crate::error::CliError;
use crate::{create, solve_problem, write_json};

/// One level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub level: usize,
    /// Spacing along the first axis.
    pub h: f64,
    pub dt: f64,
    /// `‖u_T^l − R u_T^finest‖₂` on this level's grid.
    pub u_t_error_vs_finest: f64,
    pub elliptic_residual: f64,
    pub energy_mismatch: f64,
    /// `log₂(d_{l−1} / d_l)` with `d_l = ‖u_T^{l−1} − R u_T^l‖₂`; needs
    /// three levels and nonzero differences.
    pub observed_order: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn level_setup(
    base: &RunConfig,
    refine: Refinement,
    level: usize,
) -> Result<(Grid, usize), CliError> {
    let mut grid = base.grid()?;
    let mut steps = base.time.steps;
    for _ in 0..level {
        match refine {
            Refinement::SpaceTime => {
                grid = grid.refined();
                steps *= 4;
            }
            Refinement::Space => grid = grid.refined(),
            Refinement::Time => steps *= 2,
        }
    }
    Ok((grid, steps))
}

/// Injects `fine` down onto `coarse` through successive halvings.
fn restrict(fine: &Field, coarse: &Grid) -> Result<Field, CliError> {
    let mut chain = vec![*coarse];
    while *chain.last().expect("nonempty") != *fine.grid() {
        let next = chain.last().expect("nonempty").refined();
        if next.len() > fine.grid().len() {
            return Err(CliError::Config("study grids are not nested".into()));
        }
        chain.push(next);
    }
    chain.pop();
    let mut f = fine.clone();
    while let Some(g) = chain.pop() {
        f = f.restrict_to(&g)?;
    }
    Ok(f)
}

/// Reruns `cfg` on the refinement sequence of its `study` section (three
/// space-time levels when absent). Levels run concurrently.
pub fn convergence_study(cfg: &RunConfig, base_dir: &Path) -> Result<Vec<StudyRow>, CliError> {
    cfg.validate()?;
    if matches!(cfg.initial.shape, InitialShape::FromFile { .. }) {
        return Err(CliError::Config(
            "initial.name: from_file data cannot be resampled for a convergence study".into(),
        ));
    }
    let study = cfg.study.clone().unwrap_or_default();
    let StudyConfig { levels, refine } = study;

    let runs: Vec<_> = (0..levels)
        .into_par_iter()
        .map(|level| {
            let (grid, steps) = level_setup(cfg, refine, level)?;
            let mut c = cfg.clone();
            c.time.steps = steps;
            let u0 = c.initial_field(grid, base_dir)?;
            let problem = c.problem_with(grid, u0)?;
            let dt = problem.evolution.dt();
            let (report, verification) = solve_problem(&problem)?;
            Ok((grid, dt, report, verification))
        })
        .collect::<Result<_, CliError>>()?;

    let finest = &runs.last().expect("levels ≥ 2").2.u_t;
    let mut diffs: Vec<Option<f64>> = vec![None];
    for pair in runs.windows(2) {
        let d = norm_l2(&pair[0].2.u_t.sub(&restrict(&pair[1].2.u_t, &pair[0].0)?)?);
        diffs.push(Some(d));
    }

    runs.iter()
        .enumerate()
        .map(|(level, (grid, dt, report, verification))| {
            let observed_order = match (level.checked_sub(1).and_then(|l| diffs[l]), diffs[level]) {
                (Some(prev), Some(cur)) if prev > 0.0 && cur > 0.0 => Some((prev / cur).log2()),
                _ => None,
            };
            Ok(StudyRow {
                level,
                h: grid.h(0),
                dt: *dt,
                u_t_error_vs_finest: norm_l2(&report.u_t.sub(&restrict(finest, grid)?)?),
                elliptic_residual: verification.elliptic.residual,
                energy_mismatch: verification.energy.mismatch,
                observed_order,
                converged: report.converged,
                iterations: report.iterations,
            })
        })
        .collect()
}

/// `convergence.csv` always, `convergence.json` when JSON output is on.
pub fn write_table(rows: &[StudyRow], out_dir: &Path, formats: &[Format]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(&out_dir.join("convergence.csv"))?);
    w.write_record([
        "level",
        "h",
        "dt",
        "uT_error_vs_finest",
        "elliptic_residual",
        "energy_mismatch",
        "observed_order",
    ])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.h.to_string(),
            r.dt.to_string(),
            r.u_t_error_vs_finest.to_string(),
            r.elliptic_residual.to_string(),
            r.energy_mismatch.to_string(),
            r.observed_order
                .map_or("n/a".to_string(), |o| o.to_string()),
        ])?;
    }
    w.flush()?;
    if formats.contains(&Format::Json) {
        write_json(&out_dir.join("convergence.json"), &rows)?;
    }
    Ok(())
}
