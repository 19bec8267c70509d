//! Discrete check of the integral functional whose extremals should solve
//! the Poisson problem.
//!
//! The integrand is `−u_x² − u_y² ∓ 2fu − 2u u_xx − 2u u_yy`. Taken as
//! written (`−2fu`) its first variation is `−2∫(Δu + f)δ`, which vanishes
//! for `Δu = −f`; with the source sign flipped it vanishes for `Δu = f`.
//! Both are evaluated and the verifier reports which one `u*` extremizes.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::{analytic_laplacian_defect, analytic_solution, Field2D, Source};
use crate::error::{KstError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `−2fu` in the integrand.
    AsPrinted,
    /// `+2fu` in the integrand.
    FlippedSource,
}

impl SignConvention {
    pub const ALL: [SignConvention; 2] = [SignConvention::AsPrinted, SignConvention::FlippedSource];

    fn source_sign(self) -> f64 {
        match self {
            SignConvention::AsPrinted => -1.0,
            SignConvention::FlippedSource => 1.0,
        }
    }
}

fn spacing(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(KstError::MeshMismatch(format!(
            "need at least 4 nodes per direction, got {}",
            values.len()
        )));
    }
    let h = values[1] - values[0];
    let uniform = values
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
    if !uniform || h <= 0.0 {
        return Err(KstError::MeshMismatch("grid is not uniform and increasing".into()));
    }
    Ok(h)
}

/// First and second derivatives along a strided line; second-order one-sided
/// formulas at the ends.
fn line_derivatives(v: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
    d2[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / (h * h);
    (d1, d2)
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal quadrature of the integrand over the field's grid.
pub fn variational_functional(u: &Field2D, source: Source, convention: SignConvention) -> Result<f64> {
    let (nx, ny) = (u.nx(), u.ny());
    let hx = spacing(u.x1())?;
    let hy = spacing(u.x2())?;
    let mut ux = vec![0.0; nx * ny];
    let mut uxx = vec![0.0; nx * ny];
    for j in 0..ny {
        let row = &u.values()[j * nx..(j + 1) * nx];
        let (d1, d2) = line_derivatives(row, hx);
        ux[j * nx..(j + 1) * nx].copy_from_slice(&d1);
        uxx[j * nx..(j + 1) * nx].copy_from_slice(&d2);
    }
    let sign = convention.source_sign();
    let mut total = 0.0;
    for i in 0..nx {
        let column: Vec<f64> = (0..ny).map(|j| u.get(i, j)).collect();
        let (uy, uyy) = line_derivatives(&column, hy);
        for j in 0..ny {
            let k = j * nx + i;
            let v = column[j];
            let f = source.eval(u.x1()[i], u.x2()[j]);
            let integrand = -ux[k] * ux[k] - uy[j] * uy[j] + sign * 2.0 * f * v
                - 2.0 * uxx[k] * v
                - 2.0 * uyy[j] * v;
            total += trapezoid_weight(i, nx) * trapezoid_weight(j, ny) * integrand;
        }
    }
    Ok(total * hx * hy)
}

/// `(Ξ[u + hδ] − Ξ[u − hδ]) / (2h)`.
pub fn first_variation(
    u: &Field2D,
    direction: &Field2D,
    h: f64,
    source: Source,
    convention: SignConvention,
) -> Result<f64> {
    if !u.same_mesh(direction) {
        return Err(KstError::MeshMismatch(
            "field and direction live on different grids".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(KstError::InvalidParameter {
            name: "h",
            reason: format!("step must be positive, got {h}"),
        });
    }
    let plus = u.combine(direction, |a, d| a + h * d);
    let minus = u.combine(direction, |a, d| a - h * d);
    Ok((variational_functional(&plus, source, convention)?
        - variational_functional(&minus, source, convention)?)
        / (2.0 * h))
}

/// Discrete L2 norm with trapezoidal weights.
fn l2_norm(field: &Field2D) -> Result<f64> {
    let hx = spacing(field.x1())?;
    let hy = spacing(field.x2())?;
    let (nx, ny) = (field.nx(), field.ny());
    let mut sum = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let v = field.get(i, j);
            sum += trapezoid_weight(i, nx) * trapezoid_weight(j, ny) * v * v;
        }
    }
    Ok((sum * hx * hy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionResult {
    pub convention: SignConvention,
    /// `max |first variation| / ‖δ‖` over the sampled directions.
    pub worst_ratio: f64,
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalFinding {
    pub grid: usize,
    pub directions: usize,
    pub step: f64,
    pub threshold: f64,
    pub conventions: Vec<ConventionResult>,
    /// `max |Δ_h u* − f|` on a grid of spacing 1e−3.
    pub laplacian_defect_plus_f: f64,
    /// `max |Δ_h u* + f|` on the same grid.
    pub laplacian_defect_minus_f: f64,
}

impl VariationalFinding {
    /// Conventions under which `u*` passed the stationarity check.
    pub fn stationary_under(&self) -> Vec<SignConvention> {
        self.conventions
            .iter()
            .filter(|c| c.stationary)
            .map(|c| c.convention)
            .collect()
    }
}

/// Random combination of `sin(aπx_1) sin(bπx_2)` with `a, b ≤ 2`; vanishes
/// on the boundary.
fn random_direction(grid: usize, rng: &mut impl Rng) -> Field2D {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field2D::from_fn(grid, grid, |x, y| {
        let pi = std::f64::consts::PI;
        let mut v = 0.0;
        for a in 1..=2 {
            for b in 1..=2 {
                v += c[(a - 1) * 2 + (b - 1)] * (a as f64 * pi * x).sin() * (b as f64 * pi * y).sin();
            }
        }
        v
    })
}

/// Evaluates the first variation at `u*` on a `grid × grid` mesh along
/// `directions` random admissible directions, under both conventions.
pub fn verify_variational(grid: usize, directions: usize, step: f64, seed: u64) -> Result<VariationalFinding> {
    let threshold = 1e-3;
    let u = Field2D::from_fn(grid, grid, analytic_solution);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let dirs: Vec<Field2D> = (0..directions).map(|_| random_direction(grid, &mut rng)).collect();
    let mut conventions = Vec::new();
    for convention in SignConvention::ALL {
        let mut worst = 0.0f64;
        for d in &dirs {
            let var = first_variation(&u, d, step, Source::SinSin, convention)?;
            worst = worst.max(var.abs() / l2_norm(d)?);
        }
        conventions.push(ConventionResult {
            convention,
            worst_ratio: worst,
            stationary: worst <= threshold,
        });
    }
    let (vs_plus, vs_minus) = analytic_laplacian_defect(1e-3);
    Ok(VariationalFinding {
        grid,
        directions,
        step,
        threshold,
        conventions,
        laplacian_defect_plus_f: vs_plus,
        laplacian_defect_minus_f: vs_minus,
    })
}
