//! Slice solves, reference solutions, error metrics and field assembly.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{first_order_system, SliceProblem, Source};
use crate::bvp_solver::{newton_solve, BvpProblem, BvpSolution};
use crate::error::{KstError, Result};
use crate::kst_inner::{KstParams, PsiTable};

/// `u*(x_1, x_2) = sin(πx_1) sin(πx_2) / (−2π²)`, which satisfies `Δu* = f`
/// for the default source with zero boundary values.
pub fn analytic_solution(x1: f64, x2: f64) -> f64 {
    (PI * x1).sin() * (PI * x2).sin() / (-2.0 * PI * PI)
}

/// Largest `|Δ_h u* − f|` and `|Δ_h u* + f|` over the interior of a uniform
/// grid with the given spacing (five-point Laplacian).
pub fn analytic_laplacian_defect(step: f64) -> (f64, f64) {
    let n = (1.0 / step).round() as usize + 1;
    let h = 1.0 / (n - 1) as f64;
    let s: Vec<f64> = (0..n).map(|i| (PI * i as f64 * h).sin()).collect();
    let u = |i: usize, j: usize| s[i] * s[j] / (-2.0 * PI * PI);
    let mut vs_plus = 0.0f64;
    let mut vs_minus = 0.0f64;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let lap = (u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * u(i, j)) / (h * h);
            let f = s[i] * s[j];
            vs_plus = vs_plus.max((lap - f).abs());
            vs_minus = vs_minus.max((lap + f).abs());
        }
    }
    (vs_plus, vs_minus)
}

/// Values on a rectangular grid; row `j` holds `x_2 = x2[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    x1: Vec<f64>,
    x2: Vec<f64>,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != x1.len() * x2.len() {
            return Err(KstError::LengthMismatch {
                expected: x1.len() * x2.len(),
                got: values.len(),
            });
        }
        Ok(Self { x1, x2, values })
    }

    /// Uniform `nx × ny` grid on the unit square filled from `f(x_1, x_2)`.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let x1 = unit_grid(nx);
        let x2 = unit_grid(ny);
        let values = x2
            .iter()
            .flat_map(|&b| x1.iter().map(move |&a| (a, b)))
            .map(|(a, b)| f(a, b))
            .collect();
        Self { x1, x2, values }
    }

    pub fn nx(&self) -> usize {
        self.x1.len()
    }

    pub fn ny(&self) -> usize {
        self.x2.len()
    }

    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn x2(&self) -> &[f64] {
        &self.x2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx() + i]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx() || j + 1 == self.ny()
    }

    pub fn same_mesh(&self, other: &Field2D) -> bool {
        self.x1 == other.x1 && self.x2 == other.x2
    }

    pub(crate) fn combine(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        Field2D {
            x1: self.x1.clone(),
            x2: self.x2.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

fn unit_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// `rows` equally spaced values of `x̃_2` in [0, 1].
pub fn x2_grid(rows: usize) -> Vec<f64> {
    unit_grid(rows)
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, intervals: usize) -> Result<f64> {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// `∫₀¹ p(x_1) dx_1` in closed form and the same integral transferred to the
/// slice variable, `∫ p(x_1(z)) dx_1/dz dz`, by Simpson's rule.
pub fn quadrature_transfer(coefficients: &[f64], slice: &SliceProblem, intervals: usize) -> Result<(f64, f64)> {
    let poly = |x: f64| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let direct: f64 = coefficients.iter().enumerate().map(|(i, c)| c / (i + 1) as f64).sum();
    let transferred = simpson(
        |z| Ok(poly(slice.x1_of_z(z)?) * slice.jacobian_factor(z)?),
        slice.z_min(),
        slice.z_max(),
        intervals,
    )?;
    Ok((direct, transferred))
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Solution of `U″ = g/c2` with `U = 0` at both ends on `mesh`, by
/// Green's function quadrature (five-point Gauss per mesh interval).
///
/// This is the reduced equation itself whenever `c1` and `c0` vanish, as they
/// do for the identity inner function.
pub fn reduced_reference(slice: &SliceProblem, mesh: &[f64]) -> Result<Vec<f64>> {
    let coeffs = slice.coefficients()?;
    let forcing = |z: f64| -> Result<f64> {
        let c = coeffs.at(z)?;
        Ok(c.g / c.c2)
    };
    let (a, b) = (mesh[0], mesh[mesh.len() - 1]);
    let len = b - a;
    // P_i = ∫_a^{z_i} (s − a) F ds,  Q_i = ∫_a^{z_i} (b − s) F ds
    let mut p = vec![0.0; mesh.len()];
    let mut q = vec![0.0; mesh.len()];
    for i in 1..mesh.len() {
        let (lo, hi) = (mesh[i - 1], mesh[i]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let (mut dp, mut dq) = (0.0, 0.0);
        for (t, w) in GAUSS5 {
            let s = (mid + half * t).clamp(a, b);
            let f = forcing(s)?;
            dp += w * (s - a) * f;
            dq += w * (b - s) * f;
        }
        p[i] = p[i - 1] + half * dp;
        q[i] = q[i - 1] + half * dq;
    }
    let total_q = q[mesh.len() - 1];
    Ok(mesh
        .iter()
        .enumerate()
        .map(|(i, &z)| -((b - z) * p[i] + (z - a) * (total_q - q[i])) / len)
        .collect())
}

/// Error metrics and diagnostics for one solved slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub x2: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub bracket_left: f64,
    pub bracket_right: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub linf_vs_analytic: f64,
    pub l2_vs_analytic: f64,
    pub linf_vs_reduced: f64,
    pub l2_vs_reduced: f64,
    /// Numeric extremum over analytic extremum; absent when the latter is 0.
    pub amplitude_ratio: Option<f64>,
    pub extremum_z_numeric: Option<f64>,
    pub extremum_z_analytic: Option<f64>,
    pub interior_extrema_numeric: usize,
    pub interior_extrema_analytic: usize,
    pub max_abs_c1: f64,
    pub max_abs_c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceOutcome {
    pub solution: BvpSolution,
    pub analytic: Vec<f64>,
    pub report: SliceReport,
}

fn trapezoid_l2(mesh: &[f64], diff: &[f64]) -> f64 {
    let sum: f64 = mesh
        .windows(2)
        .zip(diff.windows(2))
        .map(|(z, d)| 0.5 * (z[1] - z[0]) * (d[0] * d[0] + d[1] * d[1]))
        .sum();
    sum.sqrt()
}

/// Interior local extrema, ignoring steps below 1e−14 of the peak.
fn interior_extrema(values: &[f64]) -> usize {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * peak;
    let mut count = 0;
    let mut last_sign = 0.0;
    for pair in values.windows(2) {
        let d = pair[1] - pair[0];
        if d.abs() <= floor {
            continue;
        }
        let sign = d.signum();
        if last_sign != 0.0 && sign != last_sign {
            count += 1;
        }
        last_sign = sign;
    }
    count
}

/// Signed value of largest magnitude and its position.
fn extremum(mesh: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let (i, v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    (*v != 0.0).then_some((mesh[i], *v))
}

/// Compares a slice solution with the analytic restriction `u*(x_1(z), x̃_2)`
/// and with [`reduced_reference`].
pub fn compare_slice(solution: &BvpSolution, slice: &SliceProblem) -> Result<(SliceReport, Vec<f64>)> {
    let mesh = &solution.nodes;
    let analytic = mesh
        .iter()
        .map(|&z| slice.analytic_restriction(z))
        .collect::<Result<Vec<f64>>>()?;
    let reduced = reduced_reference(slice, mesh)?;
    let diff_a: Vec<f64> = solution.u.iter().zip(&analytic).map(|(u, a)| u - a).collect();
    let diff_r: Vec<f64> = solution.u.iter().zip(&reduced).map(|(u, r)| u - r).collect();
    let linf = |d: &[f64]| d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let coeffs = slice.coefficients()?;
    let (mut max_c1, mut max_c0) = (0.0f64, 0.0f64);
    for &z in mesh {
        let c = coeffs.at(z)?;
        max_c1 = max_c1.max(c.c1.abs());
        max_c0 = max_c0.max(c.c0.abs());
    }
    let bc = slice.boundary_conditions()?;
    let num_ext = extremum(mesh, &solution.u);
    let ana_ext = extremum(mesh, &analytic);
    let report = SliceReport {
        x2: slice.x2(),
        z_min: slice.z_min(),
        z_max: slice.z_max(),
        bracket_left: bc.left,
        bracket_right: bc.right,
        nodes: mesh.len(),
        iterations: solution.report.iterations,
        converged: solution.report.converged,
        final_residual: solution.report.final_residual,
        linf_vs_analytic: linf(&diff_a),
        l2_vs_analytic: trapezoid_l2(mesh, &diff_a),
        linf_vs_reduced: linf(&diff_r),
        l2_vs_reduced: trapezoid_l2(mesh, &diff_r),
        amplitude_ratio: match (num_ext, ana_ext) {
            (Some((_, n)), Some((_, a))) => Some(n / a),
            (None, Some(_)) => Some(0.0),
            _ => None,
        },
        extremum_z_numeric: num_ext.map(|e| e.0),
        extremum_z_analytic: ana_ext.map(|e| e.0),
        interior_extrema_numeric: interior_extrema(&solution.u),
        interior_extrema_analytic: interior_extrema(&analytic),
        max_abs_c1: max_c1,
        max_abs_c0: max_c0,
    };
    Ok((report, analytic))
}

/// Builds and solves the slice at `x̃_2`, then compares it.
pub fn solve_slice(
    x2: f64,
    params: &KstParams,
    table: &PsiTable,
    source: Source,
    nodes: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SliceOutcome> {
    let slice = SliceProblem::new(x2, params, table, source)?;
    let system = first_order_system(&slice)?;
    let bc = slice.boundary_conditions()?;
    let problem = BvpProblem::new(slice.z_min(), slice.z_max(), nodes, &system, &bc)?;
    let solution = newton_solve(&problem, tol, max_iter, None)?;
    let (report, analytic) = compare_slice(&solution, &slice)?;
    Ok(SliceOutcome {
        solution,
        analytic,
        report,
    })
}

/// Solves every slice in parallel on `jobs` worker threads (rayon's default
/// when `None`). Results keep the order of `x2s`.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    x2s: &[f64],
    params: &KstParams,
    table: &PsiTable,
    source: Source,
    nodes: usize,
    tol: f64,
    max_iter: usize,
    jobs: Option<usize>,
) -> Result<Vec<SliceOutcome>> {
    let run = || {
        x2s.par_iter()
            .map(|&x2| solve_slice(x2, params, table, source, nodes, tol, max_iter))
            .collect::<Result<Vec<_>>>()
    };
    match jobs {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| KstError::InvalidParameter {
                name: "jobs",
                reason: e.to_string(),
            })?
            .install(run),
        None => run(),
    }
}

/// `u(x_1, x_2) = U_{x_2}(α_1ψ(x_1) + α_2ψ(x_2))` on an `nx`-column grid
/// whose rows are the `x̃_2` of the given slices.
pub fn reconstruct_field(
    slices: &[(f64, &BvpSolution)],
    rows: &[f64],
    nx: usize,
    params: &KstParams,
    table: &PsiTable,
) -> Result<Field2D> {
    let x1 = unit_grid(nx);
    let (a1, a2) = (params.alpha()[0], params.alpha()[1]);
    let psi1: Vec<f64> = x1.iter().map(|&x| table.eval(x)).collect();
    let mut values = Vec::with_capacity(nx * rows.len());
    for &x2 in rows {
        let (_, solution) = slices
            .iter()
            .find(|(s, _)| (s - x2).abs() <= 1e-12)
            .ok_or(KstError::MissingSlice { x2 })?;
        let offset = a2 * table.eval(x2);
        values.extend(psi1.iter().map(|&p| solution.interpolate_u(a1 * p + offset)));
    }
    Field2D::new(x1, rows.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kst_inner::build_psi;

    #[test]
    fn analytic_values() {
        assert!((analytic_solution(0.5, 0.5) + 1.0 / (2.0 * PI * PI)).abs() < 1e-16);
        assert_eq!(analytic_solution(0.0, 0.3), 0.0);
    }

    #[test]
    fn analytic_laplacian_by_differences() {
        let h = 1e-3;
        let (x, y) = (0.3, 0.7);
        let u = analytic_solution;
        let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
        assert!((lap - (PI * x).sin() * (PI * y).sin()).abs() < 1e-6);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| Ok(x * x * x - 2.0 * x), 0.0, 2.0, 3).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn extrema_counting() {
        assert_eq!(interior_extrema(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(interior_extrema(&[0.0, -1.0, -2.0, -1.0, 0.0]), 1);
        assert_eq!(interior_extrema(&[0.0, 1.0, 0.0, 1.0, 0.0]), 3);
    }

    #[test]
    fn reduced_reference_quadratic() {
        // constant forcing g/c2 = 1/(α1² + α2²) when the source is 1
        let params = KstParams::new(2, 10, 1, 4).unwrap();
        let table = build_psi(&params).unwrap();
        let slice = SliceProblem::new(0.2, &params, &table, Source::Custom(|_, _| 1.0)).unwrap();
        let (a1, a2) = (params.alpha()[0], params.alpha()[1]);
        let c = 1.0 / (a1 * a1 + a2 * a2);
        let mesh: Vec<f64> = (0..=20).map(|i| slice.z_min() + i as f64 * 0.05).collect();
        let reference = reduced_reference(&slice, &mesh).unwrap();
        for (z, r) in mesh.iter().zip(&reference) {
            let s = z - slice.z_min();
            assert!((r - 0.5 * c * s * (s - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_layout() {
        let f = Field2D::from_fn(3, 2, |a, b| a + 10.0 * b);
        assert_eq!(f.get(2, 1), 11.0);
        assert!(f.is_boundary(0, 0) && f.is_boundary(1, 1));
        assert!(Field2D::new(vec![0.0], vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
