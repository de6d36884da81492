//! Parameter sweeps over the final time or the datum amplitude.

use std::fs::{self, File};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nonlocal_heat::picard_solve;

use crate::config::{Format, RunConfig, SweepAxis};
use crate::error::CliError;
use crate::{create, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    /// `c(Ω)·S₀·L(S₀)`, absent when φ is not Lipschitz or the run failed.
    pub threshold_product: Option<f64>,
    /// Solver error for this row, if any.
    pub error: Option<String>,
}

fn run_row(
    cfg: &RunConfig,
    base_dir: &Path,
    axis: SweepAxis,
    value: f64,
) -> Result<SweepRow, CliError> {
    let mut c = cfg.clone();
    if axis == SweepAxis::FinalTime {
        c.time.final_time = value;
    }
    let grid = c.grid()?;
    let mut u0 = c.initial_field(grid, base_dir)?;
    if axis == SweepAxis::Amplitude {
        u0 = u0.scaled(value);
    }
    let p = c.problem_with(grid, u0)?;
    let outcome = picard_solve(&p.laplacian, &p.potential, &p.u0, &p.evolution, &p.picard);
    Ok(match outcome {
        Ok(r) => SweepRow {
            value,
            converged: r.converged,
            iterations: r.iterations,
            final_residual: Some(r.final_residual()),
            threshold_product: r.threshold.product,
            error: None,
        },
        Err(e) => SweepRow {
            value,
            converged: false,
            iterations: 0,
            final_residual: None,
            threshold_product: None,
            error: Some(e.to_string()),
        },
    })
}

/// Runs one Picard solve per sweep value (concurrently), writes
/// `rows/row_<i>.json` per value, then merges them into `sweep.csv`
/// sorted by value. Setting `T` keeps the step count fixed; `amplitude`
/// multiplies the configured datum.
pub fn sweep(cfg: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    let section = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: section missing".into()))?;
    if section.values.is_empty() {
        return Err(CliError::Config("sweep.values: must not be empty".into()));
    }
    let rows_dir = out_dir.join("rows");
    fs::create_dir_all(&rows_dir)?;

    section
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let row = run_row(cfg, base_dir, section.axis, value)?;
            write_json(&rows_dir.join(format!("row_{i}.json")), &row)
        })
        .collect::<Result<Vec<()>, CliError>>()?;

    let mut rows = (0..section.values.len())
        .map(|i| {
            let path = rows_dir.join(format!("row_{i}.json"));
            let file = File::open(&path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
        })
        .collect::<Result<Vec<SweepRow>, CliError>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));

    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut w = csv::Writer::from_writer(create(&out_dir.join("sweep.csv"))?);
    w.write_record([
        "value",
        "converged",
        "iterations",
        "final_residual",
        "threshold_product",
        "error",
    ])?;
    for r in &rows {
        w.write_record([
            r.value.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            opt(r.final_residual),
            opt(r.threshold_product),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if cfg.output.formats.contains(&Format::Json) {
        write_json(&out_dir.join("sweep.json"), &rows)?;
    }
    Ok(rows)
}
