use std::f64::consts::PI;

use kst_core::bvp_solver::{newton_solve, ode_residual, BvpProblem, Dirichlet, FnSystem};

#[test]
fn constant_forcing_matches_quadratic() {
    let (z0, len, c) = (0.05, 1.0, -0.7);
    let sys = FnSystem(move |_, _, w| [w, c]);
    let bc = Dirichlet::homogeneous();
    let p = BvpProblem::new(z0, z0 + len, 1001, &sys, &bc).unwrap();
    let sol = newton_solve(&p, 1e-10, 10, None).unwrap();
    assert!(sol.report.converged);
    for (z, u) in sol.nodes.iter().zip(&sol.u) {
        let s = z - z0;
        let exact = 0.5 * c * s * (s - len);
        assert!((u - exact).abs() < 1e-8, "z = {z}: {u} vs {exact}");
    }
}

fn sine_error(nodes: usize) -> f64 {
    // U'' = -π² sin(πz), U = sin(πz)
    let sys = FnSystem(|z: f64, _, w| [w, -PI * PI * (PI * z).sin()]);
    let bc = Dirichlet::homogeneous();
    let p = BvpProblem::new(0.0, 1.0, nodes, &sys, &bc).unwrap();
    let sol = newton_solve(&p, 1e-11, 10, None).unwrap();
    sol.nodes
        .iter()
        .zip(&sol.u)
        .map(|(z, u)| (u - (PI * z).sin()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn second_order_accuracy() {
    let coarse = sine_error(41);
    let fine = sine_error(81);
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn linear_problem_settles_after_one_step() {
    // U'' + U' - 2U = 1 with non-zero Dirichlet data
    let sys = FnSystem(|_, u, w| [w, 1.0 - w + 2.0 * u]);
    let bc = Dirichlet {
        left: 0.3,
        right: -0.2,
    };
    let p = BvpProblem::new(0.0, 2.0, 401, &sys, &bc).unwrap();
    let one = newton_solve(&p, 1e-300, 1, None).unwrap();
    let two = newton_solve(&p, 1e-300, 2, None).unwrap();
    let scale = one.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let change = one
        .u
        .iter()
        .zip(&two.u)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    // forward-difference Jacobian entries carry ~1e-9 relative rounding
    assert!(change <= 1e-8 * scale, "second step moved U by {change}");
    assert!(two.report.final_residual < 1e-8);
    assert!((two.u[0] - 0.3).abs() < 1e-12);
}

#[test]
fn state_independent_forcing_settles_to_round_off() {
    let sys = FnSystem(|z: f64, _, w| [w, (3.0 * z).cos()]);
    let bc = Dirichlet::homogeneous();
    let p = BvpProblem::new(0.0, 1.0, 1001, &sys, &bc).unwrap();
    let one = newton_solve(&p, 1e-300, 1, None).unwrap();
    let two = newton_solve(&p, 1e-300, 2, None).unwrap();
    let scale = one.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let change = one
        .u
        .iter()
        .zip(&two.u)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(change <= 1e-10 * scale, "second step moved U by {change}");
}

#[test]
fn max_iter_exhaustion_is_reported_not_raised() {
    // U'' = e^U: nonlinear, one step cannot reach 1e-14
    let sys = FnSystem(|_, u: f64, w| [w, 5.0 * u.exp()]);
    let bc = Dirichlet::homogeneous();
    let p = BvpProblem::new(0.0, 1.0, 101, &sys, &bc).unwrap();
    let sol = newton_solve(&p, 1e-14, 1, None).unwrap();
    assert!(!sol.report.converged);
    assert_eq!(sol.report.iterations, 1);
    let full = newton_solve(&p, 1e-10, 20, None).unwrap();
    assert!(full.report.converged);
    assert!(full.report.residual_history.len() > 2);
}

#[test]
fn residual_of_zero_state_is_forcing_scale() {
    let sys = FnSystem(|z: f64, _, w| [w, 3.0 + z]);
    let bc = Dirichlet::homogeneous();
    let p = BvpProblem::new(0.0, 1.0, 101, &sys, &bc).unwrap();
    let mut sol = newton_solve(&p, 1e-10, 5, None).unwrap();
    assert!(ode_residual(&sol, &p).unwrap() <= 1e-10);
    sol.u.iter_mut().for_each(|u| *u = 0.0);
    sol.w.iter_mut().for_each(|w| *w = 0.0);
    let r = ode_residual(&sol, &p).unwrap();
    // largest midpoint average of the forcing, 3 + (1 - h/2)
    assert!((r - 3.995).abs() < 1e-12, "{r}");
}

#[test]
fn perturbation_sensitivity_scales_inversely_with_step() {
    // first-order collocation rows divide differences by h once
    let eps = 1e-6;
    let mut growth = Vec::new();
    for nodes in [101, 201, 401] {
        let sys = FnSystem(|_, _, w| [w, 1.0]);
        let bc = Dirichlet::homogeneous();
        let p = BvpProblem::new(0.0, 1.0, nodes, &sys, &bc).unwrap();
        let mut sol = newton_solve(&p, 1e-11, 5, None).unwrap();
        let base = ode_residual(&sol, &p).unwrap();
        sol.u[nodes / 2] += eps;
        let bumped = ode_residual(&sol, &p).unwrap();
        growth.push((bumped - base) * p.step() / eps);
    }
    for g in growth {
        assert!((g - 1.0).abs() < 1e-3, "{g}");
    }
}

#[test]
fn mesh_mismatch_rejected() {
    let sys = FnSystem(|_, _, w| [w, 1.0]);
    let bc = Dirichlet::homogeneous();
    let a = BvpProblem::new(0.0, 1.0, 11, &sys, &bc).unwrap();
    let b = BvpProblem::new(0.0, 1.0, 21, &sys, &bc).unwrap();
    let c = BvpProblem::new(0.0, 2.0, 11, &sys, &bc).unwrap();
    let sol = newton_solve(&a, 1e-10, 5, None).unwrap();
    assert!(ode_residual(&sol, &b).is_err());
    assert!(ode_residual(&sol, &c).is_err());
}
