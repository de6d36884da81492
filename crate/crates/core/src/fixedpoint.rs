//! Damped Picard iteration for `u_T = Φ(u_T)`, the small-data uniqueness
//! threshold `c(Ω)·S₀·L(S₀)`, and multi-start uniqueness probing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{phi_map, EvolutionConfig, Trajectory};
use crate::laplacian::DirichletLaplacian;
use crate::mesh::{norm_l2, norm_lp, Field, Grid};
use crate::potential::{LipschitzBound, Potential};

/// Floor of the relative-residual denominator.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// Relative slack of the `‖v‖∞ ≤ S₀` ball check.
pub const BALL_SLACK: f64 = 1e-10;

/// Generator used for random probe starts.
pub const PROBE_GENERATOR: &str = "ChaCha8Rng::seed_from_u64(seed), uniform on [-S0, S0] per node";

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// The centre of the ball `‖v‖∞ ≤ S₀`.
    Zero,
    /// `T·u⁰`, which lies on the ball's boundary in the max norm.
    ScaledDatum,
    Supplied(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// θ in `v⁺ = (1 − θ) v + θ Φ(v)`.
    pub damping: f64,
    pub initial_guess: InitialGuess,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-10,
            max_iter: 200,
            damping: 1.0,
            initial_guess: InitialGuess::Zero,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(invalid(
                "tol",
                format!("must be positive, got {}", self.tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(
                "damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        Ok(())
    }
}

/// Factors of the uniqueness condition `c(Ω)·S₀·L(S₀) < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessThreshold {
    /// `T·‖u⁰‖∞`.
    pub s0: f64,
    pub lipschitz: LipschitzBound,
    /// Poincaré constant `1/λ₁(Ω)` of the continuous domain.
    pub poincare: f64,
    /// Smallest eigenvalue of the discrete stencil, reported alongside.
    pub lambda1_discrete: f64,
    /// `c(Ω)·S₀·L(S₀)`; `None` when φ is not Lipschitz.
    pub product: Option<f64>,
}

impl UniquenessThreshold {
    /// Whether the condition holds; `None` when it cannot be evaluated.
    pub fn is_met(&self) -> Option<bool> {
        self.product.map(|p| p < 1.0)
    }
}

/// First Dirichlet eigenvalue `π² Σ 1/L_a²` of the interval or rectangle.
pub fn first_dirichlet_eigenvalue(grid: &Grid) -> f64 {
    grid.lengths().iter().map(|l| PI * PI / (l * l)).sum()
}

/// Poincaré constant `c(Ω) = 1/λ₁(Ω)`.
pub fn poincare_constant(grid: &Grid) -> f64 {
    1.0 / first_dirichlet_eigenvalue(grid)
}

pub fn uniqueness_threshold(phi: &Potential, u0: &Field, final_time: f64) -> UniquenessThreshold {
    let grid = u0.grid();
    let s0 = final_time * u0.max_abs();
    let lipschitz = phi.lipschitz_on(s0);
    let poincare = poincare_constant(grid);
    UniquenessThreshold {
        s0,
        lipschitz,
        poincare,
        lambda1_discrete: DirichletLaplacian::assemble(*grid).smallest_eigenvalue(),
        product: lipschitz.value().map(|l| poincare * s0 * l),
    }
}

/// Outcome of one Picard run.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// Last evaluation of Φ; equals the time integral of `trajectory`.
    pub u_t: Field,
    /// Evolution under the potential frozen at the last iterate.
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// `‖v^{k+1} − v^k‖₂ / max(‖v^k‖₂, ε)` per iteration.
    pub residual_history: Vec<f64>,
    /// Ratios of consecutive residuals.
    pub contraction_estimates: Vec<f64>,
    /// `‖v^k‖∞` of every iterate, starting with the initial guess.
    pub iterate_sup_norms: Vec<f64>,
    pub converged: bool,
    /// `T·‖u⁰‖∞`.
    pub s0_sup: f64,
    /// `T·‖u⁰‖₂`.
    pub s0_l2: f64,
    pub threshold: UniquenessThreshold,
    pub tol: f64,
    pub damping: f64,
}

impl FixedPointReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Up to `n` contraction ratios preceding termination.
    pub fn tail_contraction(&self, n: usize) -> &[f64] {
        let c = &self.contraction_estimates;
        &c[c.len().saturating_sub(n)..]
    }

    /// Whether every iterate stayed in `‖v‖∞ ≤ S₀(1 + slack)`.
    pub fn stayed_in_ball(&self) -> bool {
        let r = self.s0_sup * (1.0 + BALL_SLACK);
        self.iterate_sup_norms.iter().all(|&s| s <= r)
    }

    pub fn summary(&self) -> FixedPointSummary {
        FixedPointSummary {
            converged: self.converged,
            iterations: self.iterations,
            final_residual: self.final_residual(),
            residual_history: self.residual_history.clone(),
            contraction_estimates: self.contraction_estimates.clone(),
            iterate_sup_norms: self.iterate_sup_norms.clone(),
            stayed_in_ball: self.stayed_in_ball(),
            s0_sup: self.s0_sup,
            s0_l2: self.s0_l2,
            threshold: self.threshold,
            tol: self.tol,
            damping: self.damping,
            u_t_l2: norm_l2(&self.u_t),
            u_t_sup: self.u_t.max_abs(),
        }
    }
}

/// Scalar diagnostics of a [`FixedPointReport`], for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub contraction_estimates: Vec<f64>,
    pub iterate_sup_norms: Vec<f64>,
    pub stayed_in_ball: bool,
    pub s0_sup: f64,
    pub s0_l2: f64,
    pub threshold: UniquenessThreshold,
    pub tol: f64,
    pub damping: f64,
    pub u_t_l2: f64,
    pub u_t_sup: f64,
}

/// Iterates `v ← (1 − θ)v + θΦ(v)` until the relative step drops to `tol`.
///
/// Running out of iterations is not an error: the report comes back with
/// `converged = false` and the full residual history.
pub fn picard_solve(
    laplacian: &DirichletLaplacian,
    phi: &Potential,
    u0: &Field,
    ecfg: &EvolutionConfig,
    pcfg: &PicardConfig,
) -> Result<FixedPointReport> {
    pcfg.validate()?;
    ecfg.validate()?;
    let grid = *laplacian.grid();
    if *u0.grid() != grid {
        return Err(Error::GridMismatch(
            "initial datum is on a different grid".into(),
        ));
    }
    let t = ecfg.final_time;
    let mut v = match &pcfg.initial_guess {
        InitialGuess::Zero => Field::zeros(grid),
        InitialGuess::ScaledDatum => u0.scaled(t),
        InitialGuess::Supplied(f) => {
            if *f.grid() != grid {
                return Err(Error::GridMismatch(
                    "initial guess is on a different grid".into(),
                ));
            }
            f.clone()
        }
    };

    let theta = pcfg.damping;
    let mut residuals = Vec::new();
    let mut sup_norms = vec![v.max_abs()];
    let mut converged = false;
    let mut last = None;
    for _ in 0..pcfg.max_iter {
        let (phi_v, trajectory) = phi_map(laplacian, phi, u0, &v, ecfg)?;
        let next = if theta == 1.0 {
            phi_v.clone()
        } else {
            v.combine(1.0 - theta, &phi_v, theta)?
        };
        let step = norm_l2(&next.sub(&v)?);
        let residual = step / norm_l2(&v).max(RESIDUAL_FLOOR);
        residuals.push(residual);
        sup_norms.push(next.max_abs());
        last = Some((phi_v, trajectory));
        v = next;
        if residual <= pcfg.tol {
            converged = true;
            break;
        }
    }

    let (u_t, trajectory) = last.expect("max_iter ≥ 1");
    let contraction_estimates = residuals
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(FixedPointReport {
        u_t,
        trajectory,
        iterations: residuals.len(),
        residual_history: residuals,
        contraction_estimates,
        iterate_sup_norms: sup_norms,
        converged,
        s0_sup: t * u0.max_abs(),
        s0_l2: t * norm_lp(u0, 2.0)?,
        threshold: uniqueness_threshold(phi, u0, t),
        tol: pcfg.tol,
        damping: theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStart {
    pub label: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub u_t_l2: f64,
}

/// Cross-start agreement of Picard runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub generator: String,
    pub starts: Vec<ProbeStart>,
    /// Largest `‖u_T^i − u_T^j‖₂` over converged pairs.
    pub max_pairwise_distance: Option<f64>,
    /// The same divided by the largest converged `‖u_T‖₂`.
    pub max_pairwise_relative: Option<f64>,
    pub threshold: UniquenessThreshold,
    #[serde(skip)]
    pub solutions: Vec<Field>,
}

impl ProbeReport {
    pub fn all_converged(&self) -> bool {
        self.starts.iter().all(|s| s.converged)
    }
}

/// The initial guesses used by [`uniqueness_probe`]: zero, the scaled
/// datum, then seeded random fields inside the ball.
pub fn probe_guesses(
    u0: &Field,
    final_time: f64,
    n_starts: usize,
    seed: u64,
) -> Vec<(String, InitialGuess)> {
    let s0 = final_time * u0.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_starts)
        .map(|i| match i {
            0 => ("zero".to_string(), InitialGuess::Zero),
            1 => ("scaled_datum".to_string(), InitialGuess::ScaledDatum),
            _ => {
                let values = (0..u0.len())
                    .map(|_| {
                        if s0 > 0.0 {
                            rng.gen_range(-s0..=s0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let f = Field::from_parts(*u0.grid(), values);
                (format!("random_{}", i - 1), InitialGuess::Supplied(f))
            }
        })
        .collect()
}

/// Runs [`picard_solve`] from `n_starts` initial guesses and compares the
/// converged fixed points. Starts run on the current rayon pool.
pub fn uniqueness_probe(
    laplacian: &DirichletLaplacian,
    phi: &Potential,
    u0: &Field,
    ecfg: &EvolutionConfig,
    pcfg: &PicardConfig,
    n_starts: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if n_starts < 2 {
        return Err(invalid(
            "starts",
            format!("need at least 2 starts, got {n_starts}"),
        ));
    }
    let guesses = probe_guesses(u0, ecfg.final_time, n_starts, seed);
    let reports: Vec<(String, FixedPointReport)> = guesses
        .into_par_iter()
        .map(|(label, guess)| {
            let cfg = PicardConfig {
                initial_guess: guess,
                ..pcfg.clone()
            };
            picard_solve(laplacian, phi, u0, ecfg, &cfg).map(|r| (label, r))
        })
        .collect::<Result<_>>()?;

    let converged: Vec<&Field> = reports
        .iter()
        .filter(|(_, r)| r.converged)
        .map(|(_, r)| &r.u_t)
        .collect();
    let (mut max_dist, mut max_norm) = (None::<f64>, 0.0f64);
    for (i, a) in converged.iter().enumerate() {
        max_norm = max_norm.max(norm_l2(a));
        for b in &converged[i + 1..] {
            let d = norm_l2(&a.sub(b)?);
            max_dist = Some(max_dist.map_or(d, |m| m.max(d)));
        }
    }
    let starts = reports
        .iter()
        .map(|(label, r)| ProbeStart {
            label: label.clone(),
            converged: r.converged,
            iterations: r.iterations,
            final_residual: r.final_residual(),
            u_t_l2: norm_l2(&r.u_t),
        })
        .collect();
    Ok(ProbeReport {
        seed,
        generator: PROBE_GENERATOR.to_string(),
        starts,
        max_pairwise_distance: max_dist,
        max_pairwise_relative: max_dist.map(|d| d / max_norm.max(RESIDUAL_FLOOR)),
        threshold: uniqueness_threshold(phi, u0, ecfg.final_time),
        solutions: reports.into_iter().map(|(_, r)| r.u_t).collect(),
    })
}
