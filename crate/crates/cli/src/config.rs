//! JSON run configuration and its translation into solver inputs.

use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nonlocal_heat::io::{read_field_csv, read_field_json};
use nonlocal_heat::{
    catalog, DirichletLaplacian, EvolutionConfig, Field, Grid, InitialGuess, PicardConfig,
    Potential, Scheme,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Probe,
    ConvergenceStudy,
    Sweep,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown mode `{s}` (solve, probe, convergence_study, sweep)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub domain: DomainConfig,
    pub time: TimeConfig,
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub fixedpoint: FixedPointConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub final_time: f64,
    pub steps: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub store_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    #[serde(flatten)]
    pub shape: InitialShape,
    /// Reject data with negative entries.
    #[serde(default)]
    pub sign_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InitialShape {
    /// `amplitude · Π sin(kπ x_a / L_a)`
    SineMode {
        #[serde(default = "one")]
        k: usize,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `amp · exp(−|x − center|² / (2 width²))`
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "unit")]
        amp: f64,
    },
    Constant {
        c: f64,
    },
    /// Field JSON (`.json`) or field CSV (anything else), resolved against
    /// the config file's directory when relative.
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessConfig {
    Zero,
    ScaledDatum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "unit")]
    pub damping: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_guess")]
    pub initial_guess: GuessConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: 1.0,
            starts: default_starts(),
            initial_guess: GuessConfig::Zero,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Also export the final trajectory (CSV and/or binary).
    #[serde(default = "yes")]
    pub trajectory: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            formats: default_formats(),
            trajectory: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// `(h, Δt) → (h/2, Δt/4)`
    SpaceTime,
    /// `h → h/2` at fixed Δt
    Space,
    /// `Δt → Δt/2` at fixed h
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_refine")]
    pub refine: Refinement,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            levels: default_levels(),
            refine: default_refine(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Final time `T`, at a fixed number of steps.
    #[serde(rename = "T")]
    FinalTime,
    /// Multiplier applied to the configured initial datum.
    Amplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_scheme() -> Scheme {
    Scheme::ImplicitEuler
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_starts() -> usize {
    5
}
fn default_guess() -> GuessConfig {
    GuessConfig::Zero
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}
fn default_levels() -> usize {
    3
}
fn default_refine() -> Refinement {
    Refinement::SpaceTime
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

/// Everything a solver run needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub laplacian: DirichletLaplacian,
    pub potential: Potential,
    pub u0: Field,
    pub evolution: EvolutionConfig,
    pub picard: PicardConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Checks every documented range and builds the solver inputs.
    ///
    /// `base_dir` resolves relative `from_file` paths.
    pub fn problem(&self, base_dir: &Path) -> Result<Problem, CliError> {
        self.validate()?;
        let grid = self.grid()?;
        let u0 = self.initial_field(grid, base_dir)?;
        self.problem_with(grid, u0)
    }

    pub(crate) fn problem_with(&self, grid: Grid, u0: Field) -> Result<Problem, CliError> {
        if self.initial.sign_check && !u0.is_nonnegative() {
            return Err(bad(
                "initial.sign_check",
                format!("datum has negative entries (min {})", u0.min()),
            ));
        }
        let potential = catalog(&self.potential.name, &self.potential.params)
            .map_err(|e| bad("potential", e))?;
        let evolution = EvolutionConfig {
            final_time: self.time.final_time,
            steps: self.time.steps,
            scheme: self.time.scheme,
            store_every: self.time.store_every,
        };
        let fp = &self.fixedpoint;
        let picard = PicardConfig {
            tol: fp.tol,
            max_iter: fp.max_iter,
            damping: fp.damping,
            initial_guess: match fp.initial_guess {
                GuessConfig::Zero => InitialGuess::Zero,
                GuessConfig::ScaledDatum => InitialGuess::ScaledDatum,
            },
        };
        Ok(Problem {
            grid,
            laplacian: DirichletLaplacian::assemble(grid),
            potential,
            u0,
            evolution,
            picard,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.domain;
        if !(1..=2).contains(&d.dim) {
            return Err(bad("domain.dim", format!("must be 1 or 2, got {}", d.dim)));
        }
        if d.lengths.len() != d.dim {
            return Err(bad("domain.lengths", format!("expected {} entries", d.dim)));
        }
        if d.n.len() != d.dim {
            return Err(bad("domain.n", format!("expected {} entries", d.dim)));
        }
        if d.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(bad("domain.lengths", "must be positive"));
        }
        if d.n.contains(&0) {
            return Err(bad("domain.n", "must be ≥ 1"));
        }

        let t = &self.time;
        if !(t.final_time.is_finite() && t.final_time > 0.0) {
            return Err(bad("time.T", format!("must be > 0, got {}", t.final_time)));
        }
        if t.steps < 2 {
            return Err(bad("time.steps", format!("must be ≥ 2, got {}", t.steps)));
        }
        if t.store_every == 0 || !t.steps.is_multiple_of(t.store_every) {
            return Err(bad(
                "time.store_every",
                "must be a positive divisor of time.steps",
            ));
        }

        let fp = &self.fixedpoint;
        if !(fp.tol.is_finite() && fp.tol > 0.0) {
            return Err(bad("fixedpoint.tol", "must be > 0"));
        }
        if fp.max_iter == 0 {
            return Err(bad("fixedpoint.max_iter", "must be ≥ 1"));
        }
        if !(fp.damping > 0.0 && fp.damping <= 1.0) {
            return Err(bad("fixedpoint.damping", "must lie in (0, 1]"));
        }
        if self.mode == Mode::Probe && fp.starts < 2 {
            return Err(bad("fixedpoint.starts", "probe needs at least 2 starts"));
        }

        match &self.initial.shape {
            InitialShape::SineMode { k, amplitude } => {
                if *k == 0 {
                    return Err(bad("initial.k", "mode number must be ≥ 1"));
                }
                if !amplitude.is_finite() {
                    return Err(bad("initial.amplitude", "must be finite"));
                }
            }
            InitialShape::Gaussian { center, width, amp } => {
                if center.len() != d.dim {
                    return Err(bad("initial.center", format!("expected {} entries", d.dim)));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(bad("initial.width", "must be > 0"));
                }
                if !amp.is_finite() {
                    return Err(bad("initial.amp", "must be finite"));
                }
            }
            InitialShape::Constant { c } => {
                if !c.is_finite() {
                    return Err(bad("initial.c", "must be finite"));
                }
            }
            InitialShape::FromFile { .. } => {}
        }

        if let Some(study) = &self.study {
            if study.levels < 2 {
                return Err(bad("study.levels", "must be ≥ 2"));
            }
        }
        if self.mode == Mode::Sweep {
            let sweep = self
                .sweep
                .as_ref()
                .ok_or_else(|| bad("sweep", "sweep mode needs a `sweep` section"))?;
            if sweep.values.is_empty() {
                return Err(bad("sweep.values", "must not be empty"));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(bad("sweep.values", "must be finite"));
            }
            if sweep.axis == SweepAxis::FinalTime && sweep.values.iter().any(|v| *v <= 0.0) {
                return Err(bad("sweep.values", "final times must be > 0"));
            }
        }
        catalog(&self.potential.name, &self.potential.params).map_err(|e| bad("potential", e))?;
        if self.output.formats.is_empty() {
            return Err(bad(
                "output.formats",
                "must list at least one of csv, json, bin",
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(&self.domain.lengths, &self.domain.n).map_err(|e| bad("domain", e))
    }

    /// Samples the configured datum on `grid`.
    pub fn initial_field(&self, grid: Grid, base_dir: &Path) -> Result<Field, CliError> {
        let field = match &self.initial.shape {
            InitialShape::SineMode { k, amplitude } => Field::from_fn(grid, |x| {
                let lengths = grid.lengths();
                amplitude
                    * (0..grid.dim())
                        .map(|a| (*k as f64 * PI * x[a] / lengths[a]).sin())
                        .product::<f64>()
            }),
            InitialShape::Gaussian { center, width, amp } => Field::from_fn(grid, |x| {
                let r2: f64 = (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
                amp * (-r2 / (2.0 * width * width)).exp()
            }),
            InitialShape::Constant { c } => Field::constant(grid, *c),
            InitialShape::FromFile { path } => {
                let path = if path.is_relative() {
                    base_dir.join(path)
                } else {
                    path.clone()
                };
                let file = File::open(&path)
                    .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
                let reader = std::io::BufReader::new(file);
                let field = if path.extension().is_some_and(|e| e == "json") {
                    read_field_json(reader)
                } else {
                    read_field_csv(grid, reader)
                }
                .map_err(|e| bad("initial.path", e))?;
                if *field.grid() != grid {
                    return Err(bad("initial.path", "file grid differs from domain"));
                }
                return Ok(field);
            }
        };
        field.map_err(|e| bad("initial", e))
    }
}
