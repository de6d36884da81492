//! Solver for the nonlocal-in-time semilinear heat equation
//!
//! ```text
//! ∂ₜu − Δu + φ(∫₀ᵀ u ds) u = 0   in (0, T] × Ω,   u = 0 on ∂Ω,   u(0) = u⁰
//! ```
//!
//! on intervals and rectangles. The unknown is the time integral
//! `u_T = ∫₀ᵀ u ds`, computed as a fixed point of
//! `Φ(v) = ∫₀ᵀ e^{−t(−Δ + φ(v))} u⁰ dt` by Picard iteration
//! ([`fixedpoint::picard_solve`]). The semigroup is realized by implicit
//! Euler (or Crank–Nicolson) steps on a finite-difference Laplacian, and
//! [`verify`] checks the discrete counterparts of the solution's norm
//! decay, positivity, energy identity and elliptic equation.

pub mod error;
pub mod evolution;
pub mod fixedpoint;
pub mod io;
pub mod laplacian;
pub mod mesh;
pub mod potential;
pub mod verify;

pub use error::{Error, Result};
pub use evolution::{evolve, phi_map, EvolutionConfig, Scheme, Trajectory};
pub use fixedpoint::{
    picard_solve, uniqueness_probe, uniqueness_threshold, FixedPointReport, InitialGuess,
    PicardConfig, ProbeReport, UniquenessThreshold,
};
pub use laplacian::DirichletLaplacian;
pub use mesh::{
    h1_seminorm_sq, inner_product, norm_l2, norm_lp, trapezoid_time_integral, Field, Grid,
};
pub use potential::{catalog, nemytskii, LipschitzBound, Potential};
pub use verify::{verify, Tolerances, VerificationReport};
