//! Independent oracles for the nonlinear solver: a tighter re-solve, a
//! time-refined re-solve, and a 2D separable closed form.

use std::f64::consts::PI;

use nonlocal_heat::{
    catalog, norm_l2, phi_map, picard_solve, DirichletLaplacian, EvolutionConfig, Field, Grid,
    InitialGuess, PicardConfig, Scheme,
};

fn rel(a: &Field, b: &Field) -> f64 {
    norm_l2(&a.sub(b).unwrap()) / norm_l2(b)
}

fn setup(n: usize, amplitude: f64) -> (DirichletLaplacian, Field) {
    let grid = Grid::line(1.0, n).unwrap();
    let u0 = Field::from_fn(grid, |x| amplitude * (PI * x[0]).sin()).unwrap();
    (DirichletLaplacian::assemble(grid), u0)
}

#[test]
fn tighter_tolerance_agrees() {
    let (l, u0) = setup(99, 0.5);
    let phi = catalog("quadratic", &[]).unwrap();
    let e = EvolutionConfig::new(0.1, 400);
    let loose = picard_solve(&l, &phi, &u0, &e, &PicardConfig::default()).unwrap();
    let tight = picard_solve(
        &l,
        &phi,
        &u0,
        &e,
        &PicardConfig {
            tol: 1e-13,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(loose.converged && tight.converged);
    assert!(rel(&loose.u_t, &tight.u_t) <= 1e-8);
}

#[test]
fn finer_time_step_is_first_order_consistent() {
    // IE error is C·Δt, so differences between runs scale with the
    // difference of their steps: (1e-3 − 1e-4) / (1e-4 − 5e-5) = 18.
    let (l, u0) = setup(99, 0.5);
    let phi = catalog("quadratic", &[]).unwrap();
    let solve = |steps| {
        picard_solve(
            &l,
            &phi,
            &u0,
            &EvolutionConfig::new(0.1, steps),
            &PicardConfig::default(),
        )
        .unwrap()
        .u_t
    };
    let (c, f, ff) = (solve(100), solve(1000), solve(2000));
    let d1 = rel(&c, &f);
    let d2 = rel(&f, &ff);
    assert!(d1 < 1e-2, "{d1}");
    let ratio = d1 / d2;
    assert!((16.0..20.0).contains(&ratio), "{ratio}");
}

#[test]
fn damped_iteration_reaches_the_same_fixed_point() {
    let (l, u0) = setup(63, 1.0);
    let phi = catalog("absval", &[]).unwrap();
    let e = EvolutionConfig::new(0.2, 200).with_scheme(Scheme::CrankNicolson);
    let plain = picard_solve(&l, &phi, &u0, &e, &PicardConfig::default()).unwrap();
    let damped = picard_solve(
        &l,
        &phi,
        &u0,
        &e,
        &PicardConfig {
            damping: 0.5,
            initial_guess: InitialGuess::ScaledDatum,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(plain.converged && damped.converged);
    assert!(damped.iterations > plain.iterations);
    assert!(rel(&plain.u_t, &damped.u_t) <= 1e-8);
    let (again, _) = phi_map(&l, &phi, &u0, &damped.u_t, &e).unwrap();
    assert!(rel(&again, &damped.u_t) <= 2e-10);
}

#[test]
fn rectangle_with_constant_potential_matches_separable_form() {
    // u⁰ = sin(πx/2) sin(πy): with φ ≡ c the integral is
    // ((1 − e^{−μT})/μ) u⁰ with μ = π²/4 + π² + c.
    let grid = Grid::rectangle([2.0, 1.0], [39, 19]).unwrap();
    let l = DirichletLaplacian::assemble(grid);
    let u0 = Field::from_fn(grid, |x| (PI * x[0] / 2.0).sin() * (PI * x[1]).sin()).unwrap();
    let phi = catalog("constant", &[3.0]).unwrap();
    let e = EvolutionConfig::new(0.05, 400).with_scheme(Scheme::CrankNicolson);
    let r = picard_solve(&l, &phi, &u0, &e, &PicardConfig::default()).unwrap();
    let mu = PI * PI / 4.0 + PI * PI + 3.0;
    let exact = u0.scaled((1.0 - (-mu * 0.05).exp()) / mu);
    assert_eq!(r.iterations, 2);
    assert!(rel(&r.u_t, &exact) < 2e-3, "{}", rel(&r.u_t, &exact));
}
