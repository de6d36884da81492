//! Post-hoc checks of a converged solution: norm decay and positivity of
//! the trajectory, the energy identity for `u_T` with its a-priori bound,
//! and the residual of the integrated elliptic equation.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fixedpoint::{FixedPointReport, RESIDUAL_FLOOR};
use crate::laplacian::DirichletLaplacian;
use crate::mesh::{h1_seminorm_sq, inner_product, norm_l2, norm_lp};
use crate::potential::{nemytskii, Potential};

/// Tolerances used by the checks, echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative slack on `‖u_k‖_p ≤ ‖u⁰‖_p`.
    pub norm_slack: f64,
    /// Allowed undershoot below zero for nonnegative data.
    pub positivity: f64,
    /// Relative slack on the inequalities of the energy estimate.
    pub energy_bound_slack: f64,
    /// Accepted `|LHS − RHS| / |RHS|` at a single resolution.
    pub energy_mismatch: f64,
    /// Accepted relative elliptic residual.
    pub elliptic_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm_slack: 1e-10,
            positivity: 1e-12,
            energy_bound_slack: 1e-8,
            energy_mismatch: 5e-3,
            elliptic_residual: 5e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    /// Exponent label, `"inf"` for the max norm.
    pub p: String,
    /// `max_k ‖u_k‖_p / ‖u⁰‖_p` (0 for the zero solution).
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub norms: Vec<NormCheck>,
    pub datum_nonnegative: bool,
    /// Smallest node value over the whole trajectory, for nonnegative data.
    pub positivity_min: Option<f64>,
    pub positivity_passed: Option<bool>,
}

impl DecayCheck {
    pub fn passed(&self) -> bool {
        self.norms.iter().all(|n| n.passed) && self.positivity_passed.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    /// `‖∇u_T‖₂² + ∫ φ(u_T) u_T²`.
    pub lhs: f64,
    /// `∫ (u⁰ − u(T)) u_T`.
    pub rhs: f64,
    /// `|lhs − rhs| / max(|rhs|, ε)`.
    pub mismatch: f64,
    /// `2T‖u⁰‖₂²`.
    pub bound: f64,
    pub bound_passed: bool,
    pub mismatch_passed: bool,
    /// `‖u(T)‖₂ ≤ ‖u⁰‖₂`.
    pub final_state_passed: bool,
    /// `‖u_T‖₂ ≤ T‖u⁰‖₂`.
    pub integral_passed: bool,
}

impl EnergyCheck {
    pub fn passed(&self) -> bool {
        self.bound_passed && self.mismatch_passed && self.final_state_passed && self.integral_passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticCheck {
    /// `‖L u_T + φ(u_T) u_T − (u⁰ − u(T))‖₂ / max(‖u⁰ − u(T)‖₂, ε)`.
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub decay: DecayCheck,
    pub energy: EnergyCheck,
    pub elliptic: EllipticCheck,
    pub tolerances: Tolerances,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.decay.passed() && self.energy.passed() && self.elliptic.passed
    }
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

/// Norm decay for each `p` and, for nonnegative data, positivity.
pub fn check_decay(
    report: &FixedPointReport,
    p_list: &[f64],
    tol: &Tolerances,
) -> Result<DecayCheck> {
    let states = report.trajectory.states();
    let u0 = report.trajectory.initial();
    let mut norms = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let reference = norm_lp(u0, p)?;
        let mut max_ratio: f64 = 0.0;
        for s in states {
            let n = norm_lp(s, p)?;
            let ratio = if reference > 0.0 {
                n / reference
            } else if n == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_ratio = max_ratio.max(ratio);
        }
        norms.push(NormCheck {
            p: p_label(p),
            max_ratio,
            passed: max_ratio <= 1.0 + tol.norm_slack,
        });
    }
    let datum_nonnegative = u0.is_nonnegative();
    let positivity_min =
        datum_nonnegative.then(|| states.iter().map(|s| s.min()).fold(f64::INFINITY, f64::min));
    Ok(DecayCheck {
        norms,
        datum_nonnegative,
        positivity_min,
        positivity_passed: positivity_min.map(|m| m >= -tol.positivity),
    })
}

/// Energy identity for `u_T` and the bound `2T‖u⁰‖₂²`.
pub fn check_energy(
    report: &FixedPointReport,
    phi: &Potential,
    tol: &Tolerances,
) -> Result<EnergyCheck> {
    let u_t = &report.u_t;
    let u0 = report.trajectory.initial();
    let u_end = report.trajectory.last();
    let t = report.trajectory.final_time();

    let w = nemytskii(phi, u_t)?;
    let potential_term = inner_product(&w.mul(u_t)?, u_t)?;
    let lhs = h1_seminorm_sq(u_t) + potential_term;
    let rhs = inner_product(&u0.sub(u_end)?, u_t)?;
    let mismatch = (lhs - rhs).abs() / rhs.abs().max(RESIDUAL_FLOOR);

    let u0_l2 = norm_l2(u0);
    let bound = 2.0 * t * u0_l2 * u0_l2;
    let slack = 1.0 + tol.energy_bound_slack;
    Ok(EnergyCheck {
        lhs,
        rhs,
        mismatch,
        bound,
        bound_passed: lhs <= bound * slack,
        mismatch_passed: mismatch <= tol.energy_mismatch,
        final_state_passed: norm_l2(u_end) <= u0_l2 * slack,
        integral_passed: norm_l2(u_t) <= t * u0_l2 * slack,
    })
}

/// Residual of `L u_T + φ(u_T) u_T = u⁰ − u(T)`.
pub fn check_elliptic(
    report: &FixedPointReport,
    phi: &Potential,
    laplacian: &DirichletLaplacian,
    tol: &Tolerances,
) -> Result<EllipticCheck> {
    let u_t = &report.u_t;
    let source = report.trajectory.initial().sub(report.trajectory.last())?;
    let w = nemytskii(phi, u_t)?;
    let r = laplacian
        .apply(u_t)?
        .combine(1.0, &w.mul(u_t)?, 1.0)?
        .sub(&source)?;
    let residual = norm_l2(&r) / norm_l2(&source).max(RESIDUAL_FLOOR);
    Ok(EllipticCheck {
        residual,
        passed: residual <= tol.elliptic_residual,
    })
}

/// All checks with `p ∈ {2, ∞}`.
pub fn verify(
    report: &FixedPointReport,
    phi: &Potential,
    laplacian: &DirichletLaplacian,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    Ok(VerificationReport {
        decay: check_decay(report, &[2.0, f64::INFINITY], tol)?,
        energy: check_energy(report, phi, tol)?,
        elliptic: check_elliptic(report, phi, laplacian, tol)?,
        tolerances: *tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::EvolutionConfig;
    use crate::fixedpoint::{picard_solve, PicardConfig};
    use crate::mesh::{Field, Grid};
    use crate::potential::catalog;
    use std::f64::consts::PI;

    fn solve(
        n: usize,
        amplitude: f64,
        phi: &Potential,
        steps: usize,
    ) -> (DirichletLaplacian, FixedPointReport) {
        let grid = Grid::line(1.0, n).unwrap();
        let l = DirichletLaplacian::assemble(grid);
        let u0 = Field::from_fn(grid, |x| amplitude * (PI * x[0]).sin()).unwrap();
        let r = picard_solve(
            &l,
            phi,
            &u0,
            &EvolutionConfig::new(0.1, steps),
            &PicardConfig::default(),
        )
        .unwrap();
        (l, r)
    }

    #[test]
    fn zero_solution_passes_everything() {
        let phi = catalog("quadratic", &[]).unwrap();
        let (l, r) = solve(31, 0.0, &phi, 20);
        let v = verify(&r, &phi, &l, &Tolerances::default()).unwrap();
        assert!(v.passed());
        assert!(v.decay.norms.iter().all(|n| n.max_ratio == 0.0));
        assert_eq!(v.energy.lhs, 0.0);
        assert_eq!(v.energy.rhs, 0.0);
        assert_eq!(v.elliptic.residual, 0.0);
    }

    #[test]
    fn heat_limit_norm_ratios_follow_eigen_recursion() {
        let phi = catalog("zero", &[]).unwrap();
        let (l, r) = solve(199, 1.0, &phi, 1000);
        let t1 = check_decay(&r, &[2.0, f64::INFINITY], &Tolerances::default()).unwrap();
        assert!(t1.passed());
        assert_eq!(t1.norms[1].p, "inf");
        // ratio at step k is (1 + Δt λ)^{-k}; the maximum over k ≥ 0 is 1 at k = 0
        let dt = 1e-4;
        let lam = l.smallest_eigenvalue();
        let u0_norm = norm_l2(r.trajectory.initial());
        for k in [1, 100, 1000] {
            let ratio = norm_l2(&r.trajectory.states()[k]) / u0_norm;
            let expected = (1.0 + dt * lam).powi(-(k as i32));
            assert!((ratio - expected).abs() <= 1e-9 * expected);
            assert!(ratio < 1.0);
        }
        assert!(t1.positivity_min.unwrap() >= -1e-12);
    }

    #[test]
    fn heat_limit_energy_closed_form() {
        let phi = catalog("zero", &[]).unwrap();
        let (_, r) = solve(199, 1.0, &phi, 1000);
        let e = check_energy(&r, &phi, &Tolerances::default()).unwrap();
        let decay = 1.0 - (-PI * PI * 0.1f64).exp();
        let a = decay / (PI * PI);
        let lhs_exact = a * a * PI * PI / 2.0;
        let rhs_exact = a * decay / 2.0;
        assert!((lhs_exact - rhs_exact).abs() < 1e-15);
        assert!((e.lhs - lhs_exact).abs() <= 5e-3 * lhs_exact);
        assert!(e.mismatch <= 5e-3);
        assert!(e.passed());
        assert!((e.bound - 0.1).abs() < 1e-3);
    }

    #[test]
    fn elliptic_residual_small() {
        let zero = catalog("zero", &[]).unwrap();
        let (l, r) = solve(199, 1.0, &zero, 1000);
        assert!(
            check_elliptic(&r, &zero, &l, &Tolerances::default())
                .unwrap()
                .residual
                <= 1e-2
        );

        let sq = catalog("quadratic", &[]).unwrap();
        let (l, r) = solve(199, 0.5, &sq, 1000);
        assert!(
            check_elliptic(&r, &sq, &l, &Tolerances::default())
                .unwrap()
                .residual
                <= 5e-2
        );
    }

    #[test]
    fn tolerances_drive_flags() {
        let phi = catalog("absval", &[]).unwrap();
        let (l, r) = solve(63, 1.0, &phi, 200);
        let strict = Tolerances {
            energy_mismatch: 0.0,
            elliptic_residual: 0.0,
            ..Default::default()
        };
        let v = verify(&r, &phi, &l, &strict).unwrap();
        assert!(!v.energy.mismatch_passed);
        assert!(!v.elliptic.passed);
        assert!(!v.passed());
        assert_eq!(v.tolerances, strict);
    }
}
