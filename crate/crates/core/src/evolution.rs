//! Frozen-potential linear evolution `u' + (L + diag w) u = 0` by rational
//! time stepping, and the map Φ(v) = ∫₀ᵀ u_v(t) dt built on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::laplacian::{DirichletLaplacian, ShiftedSystem};
use crate::mesh::{trapezoid_refs, Field};
use crate::potential::{nemytskii, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(I + Δt A) u_{k+1} = u_k`; positivity preserving and non-expansive.
    ImplicitEuler,
    /// `(I + Δt/2 A) u_{k+1} = (I − Δt/2 A) u_k`; second order, no
    /// positivity guarantee.
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Final time `T`, fixed in advance.
    pub final_time: f64,
    /// Number of uniform steps `K`.
    pub steps: usize,
    pub scheme: Scheme,
    /// Keep every `store_every`-th state; must divide `steps`.
    pub store_every: usize,
}

impl EvolutionConfig {
    pub fn new(final_time: f64, steps: usize) -> Self {
        EvolutionConfig {
            final_time,
            steps,
            scheme: Scheme::ImplicitEuler,
            store_every: 1,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(invalid(
                "final_time",
                format!("must be positive, got {}", self.final_time),
            ));
        }
        if self.steps < 2 {
            return Err(invalid(
                "steps",
                format!("need at least 2 steps, got {}", self.steps),
            ));
        }
        if self.store_every == 0 || !self.steps.is_multiple_of(self.store_every) {
            return Err(invalid(
                "store_every",
                format!(
                    "must be a positive divisor of steps = {}, got {}",
                    self.steps, self.store_every
                ),
            ));
        }
        Ok(())
    }
}

/// Stored states `u(t_k)` of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
    scheme: Scheme,
    dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn initial(&self) -> &Field {
        &self.states[0]
    }

    /// `u(T)`.
    pub fn last(&self) -> &Field {
        self.states
            .last()
            .expect("trajectories hold at least two states")
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Time step of the underlying scheme (not the storage spacing).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Trapezoidal `∫₀ᵀ u dt` over the stored samples.
    pub fn time_integral(&self) -> Result<Field> {
        trapezoid_refs(self.times.iter().copied().zip(self.states.iter()))
    }
}

/// Evolves `u0` under the frozen operator `L + diag w`.
pub fn evolve(
    laplacian: &DirichletLaplacian,
    w: &Field,
    u0: &Field,
    cfg: &EvolutionConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let dt = cfg.dt();
    let system = match cfg.scheme {
        Scheme::ImplicitEuler => ShiftedSystem::new(laplacian, w, dt)?,
        Scheme::CrankNicolson => ShiftedSystem::new(laplacian, w, 0.5 * dt)?,
    };
    if u0.grid() != laplacian.grid() {
        return Err(Error::GridMismatch(
            "initial datum does not live on the operator's grid".into(),
        ));
    }
    let mut u = u0.clone();

    let stored = cfg.steps / cfg.store_every + 1;
    let mut times = Vec::with_capacity(stored);
    let mut states = Vec::with_capacity(stored);
    times.push(0.0);
    states.push(u.clone());
    for k in 1..=cfg.steps {
        u = match cfg.scheme {
            Scheme::ImplicitEuler => system.solve(&u)?,
            Scheme::CrankNicolson => {
                let rhs = laplacian.apply_shifted(w, -0.5 * dt, &u)?;
                system.solve(&rhs)?
            }
        };
        if k % cfg.store_every == 0 {
            times.push(cfg.final_time * k as f64 / cfg.steps as f64);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        scheme: cfg.scheme,
        dt,
    })
}

/// Φ(v): evolve `u0` with potential `φ(v)` frozen and integrate in time.
pub fn phi_map(
    laplacian: &DirichletLaplacian,
    phi: &Potential,
    u0: &Field,
    v: &Field,
    cfg: &EvolutionConfig,
) -> Result<(Field, Trajectory)> {
    let w = nemytskii(phi, v)?;
    let trajectory = evolve(laplacian, &w, u0, cfg)?;
    Ok((trajectory.time_integral()?, trajectory))
}
