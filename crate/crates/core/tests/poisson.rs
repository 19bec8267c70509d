use std::f64::consts::PI;

use kst_core::bvp_solver::{ode_residual, BvpProblem};
use kst_core::poisson::{
    first_order_system, quadrature_transfer, reconstruct_field, solve_slice, sweep,
    verify_variational, x2_grid, SignConvention, SliceProblem, Source,
};
use kst_core::{build_psi, KstParams, PsiTable};

fn setup(k: u32) -> (KstParams, PsiTable) {
    let params = KstParams::new(2, 10, k, 4).unwrap();
    let table = build_psi(&params).unwrap();
    (params, table)
}

/// U″ = sin(πs/α1) sin(πx̃2)/(α1²+α2²), U(0) = U(α1) = 0, s = z − z_min.
fn closed_form(s: f64, x2: f64, a1: f64, a2: f64) -> f64 {
    -(a1 / PI).powi(2) * (PI * s / a1).sin() * (PI * x2).sin() / (a1 * a1 + a2 * a2)
}

#[test]
fn identity_slice_matches_closed_form() {
    let (params, table) = setup(1);
    let (a1, a2) = (params.alpha()[0], params.alpha()[1]);
    let out = solve_slice(0.5, &params, &table, Source::SinSin, 1001, 1e-10, 10).unwrap();
    assert!(out.report.converged);
    assert!(out.report.iterations <= 3);
    assert!(out.report.final_residual <= 1e-8);
    let z_min = out.report.z_min;
    let err = out
        .solution
        .nodes
        .iter()
        .zip(&out.solution.u)
        .map(|(z, u)| (u - closed_form(z - z_min, 0.5, a1, a2)).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
    assert!(out.report.linf_vs_reduced <= 1e-6);
    assert!(out.report.max_abs_c1 < 1e-9 && out.report.max_abs_c0 < 1e-9);
}

#[test]
fn identity_slice_shape_against_analytic_restriction() {
    let (params, table) = setup(1);
    let (a1, a2) = (params.alpha()[0], params.alpha()[1]);
    let out = solve_slice(0.5, &params, &table, Source::SinSin, 1001, 1e-10, 10).unwrap();
    let r = &out.report;
    assert_eq!(r.interior_extrema_numeric, 1);
    assert_eq!(r.interior_extrema_analytic, 1);
    assert!((r.extremum_z_numeric.unwrap() - r.extremum_z_analytic.unwrap()).abs() <= 0.01);
    let ratio = r.amplitude_ratio.unwrap();
    // both negative; reduced amplitude 1/(π²(α1²+α2²)) against 1/(2π²)
    assert!(ratio > 0.0);
    let expected = 2.0 * a1.powi(4) / (a1 * a1 + a2 * a2);
    assert!((ratio - expected).abs() < 1e-3, "{ratio} vs {expected}");
    assert!(out.solution.u[0].abs() < 1e-12 && out.solution.u[1000].abs() < 1e-12);
}

#[test]
fn zero_source_slice_is_zero() {
    let (params, table) = setup(1);
    let out = solve_slice(0.0, &params, &table, Source::SinSin, 1001, 1e-10, 10).unwrap();
    assert!(out.solution.u.iter().all(|u| u.abs() <= 1e-12));
    assert_eq!(out.report.linf_vs_analytic, 0.0);
    let out = solve_slice(0.3, &params, &table, Source::Zero, 201, 1e-10, 10).unwrap();
    assert!(out.solution.u.iter().all(|u| u.abs() <= 1e-12));
}

#[test]
fn residual_of_solved_slice() {
    let (params, table) = setup(1);
    let slice = SliceProblem::new(0.5, &params, &table, Source::SinSin).unwrap();
    let system = first_order_system(&slice).unwrap();
    let bc = slice.boundary_conditions().unwrap();
    let problem = BvpProblem::new(slice.z_min(), slice.z_max(), 1001, &system, &bc).unwrap();
    let out = solve_slice(0.5, &params, &table, Source::SinSin, 1001, 1e-10, 10).unwrap();
    assert!(ode_residual(&out.solution, &problem).unwrap() <= 1e-10);
}

#[test]
fn quadrature_transfer_exact_for_cubics() {
    let (params, table) = setup(1);
    for x2 in [0.0, 0.25, 0.5, 0.9] {
        let slice = SliceProblem::new(x2, &params, &table, Source::SinSin).unwrap();
        for coeffs in [[1.0, 0.0, 0.0, 0.0], [0.3, -1.2, 2.5, 4.0], [0.0, 0.0, 0.0, -7.0]] {
            let (direct, moved) = quadrature_transfer(&coeffs, &slice, 8).unwrap();
            assert!((direct - moved).abs() <= 1e-10, "{direct} vs {moved}");
        }
    }
}

#[test]
fn sweep_and_field() {
    let (params, table) = setup(1);
    let rows = x2_grid(21);
    let outcomes = sweep(&rows, &params, &table, Source::SinSin, 201, 1e-10, 10, Some(3)).unwrap();
    assert_eq!(outcomes.len(), 21);
    for (x2, out) in rows.iter().zip(&outcomes) {
        assert_eq!(out.report.x2, *x2);
        assert!(out.report.converged);
    }
    let slices: Vec<(f64, &_)> = rows.iter().zip(&outcomes).map(|(x, o)| (*x, &o.solution)).collect();
    let field = reconstruct_field(&slices, &rows, 41, &params, &table).unwrap();
    for j in 0..field.ny() {
        assert!(field.get(0, j).abs() <= 1e-10);
        assert!(field.get(40, j).abs() <= 1e-10);
    }
    assert!((0..field.nx()).all(|i| field.get(i, 0) == 0.0));
    // interior value equals direct lookup on the slice
    let (a1, a2) = (params.alpha()[0], params.alpha()[1]);
    let j = 7;
    let z = a1 * table.eval(field.x1()[13]) + a2 * table.eval(rows[j]);
    assert_eq!(field.get(13, j), outcomes[j].solution.interpolate_u(z));
    assert!(reconstruct_field(&slices, &[0.33], 11, &params, &table).is_err());
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let (params, table) = setup(2);
    let rows = x2_grid(6);
    let a = sweep(&rows, &params, &table, Source::SinSin, 101, 1e-10, 10, Some(1)).unwrap();
    let b = sweep(&rows, &params, &table, Source::SinSin, 101, 1e-10, 10, Some(4)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn variational_sign_finding() {
    let finding = verify_variational(101, 10, 1e-5, 2024).unwrap();
    let stationary = finding.stationary_under();
    assert_eq!(stationary, vec![SignConvention::FlippedSource]);
    assert!(finding.laplacian_defect_plus_f <= 1e-5);
}
