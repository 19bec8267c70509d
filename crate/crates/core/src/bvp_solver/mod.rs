//! Two-point boundary value problems `U′ = W`, `W′ = F(z, U, W)` solved by
//! Newton iteration on the trapezoidal collocation residual.

mod banded;

pub use banded::{BandLu, BandMatrix};

use serde::Serialize;

use crate::error::{KstError, Result};

/// Right-hand side `(z, U, W) ↦ (U′, W′)`.
pub trait FirstOrderSystem {
    fn rhs(&self, z: f64, u: f64, w: f64) -> Result<[f64; 2]>;
}

/// Adapts an infallible closure.
pub struct FnSystem<F>(pub F);

impl<F> FirstOrderSystem for FnSystem<F>
where
    F: Fn(f64, f64, f64) -> [f64; 2],
{
    fn rhs(&self, z: f64, u: f64, w: f64) -> Result<[f64; 2]> {
        Ok((self.0)(z, u, w))
    }
}

/// Residuals of the two endpoint conditions; zero when satisfied.
pub trait EndpointConditions {
    fn left(&self, u: f64, w: f64) -> f64;
    fn right(&self, u: f64, w: f64) -> f64;
}

/// `U(z_min) = left`, `U(z_max) = right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirichlet {
    pub left: f64,
    pub right: f64,
}

impl Dirichlet {
    pub fn homogeneous() -> Self {
        Self {
            left: 0.0,
            right: 0.0,
        }
    }
}

impl EndpointConditions for Dirichlet {
    fn left(&self, u: f64, _w: f64) -> f64 {
        u - self.left
    }

    fn right(&self, u: f64, _w: f64) -> f64 {
        u - self.right
    }
}

pub struct BvpProblem<'a> {
    z_min: f64,
    z_max: f64,
    nodes: usize,
    system: &'a dyn FirstOrderSystem,
    bc: &'a dyn EndpointConditions,
}

impl<'a> BvpProblem<'a> {
    pub fn new(
        z_min: f64,
        z_max: f64,
        nodes: usize,
        system: &'a dyn FirstOrderSystem,
        bc: &'a dyn EndpointConditions,
    ) -> Result<Self> {
        if nodes < 3 {
            return Err(KstError::InvalidParameter {
                name: "mesh",
                reason: format!("need at least 3 nodes, got {nodes}"),
            });
        }
        if !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(KstError::InvalidParameter {
                name: "interval",
                reason: format!("need z_min < z_max, got [{z_min}, {z_max}]"),
            });
        }
        Ok(Self {
            z_min,
            z_max,
            nodes,
            system,
            bc,
        })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn step(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nodes - 1) as f64
    }

    /// Uniform mesh; the last node is `z_max` exactly.
    pub fn mesh(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes)
            .map(|i| {
                if i + 1 == self.nodes {
                    self.z_max
                } else {
                    self.z_min + i as f64 * h
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// ∞-norm of the residual before the first step and after each step.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvpSolution {
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub report: NewtonReport,
}

impl BvpSolution {
    /// Piecewise-linear `U` at `z`, clamped to the mesh.
    pub fn interpolate_u(&self, z: f64) -> f64 {
        let n = self.nodes.len();
        let (z0, z1) = (self.nodes[0], self.nodes[n - 1]);
        let t = ((z - z0) / (z1 - z0) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        self.u[i] + frac * (self.u[i + 1] - self.u[i])
    }
}

/// Interleaved state `[U_0, W_0, U_1, W_1, …]`.
struct Collocation<'p, 'a> {
    problem: &'p BvpProblem<'a>,
    mesh: Vec<f64>,
    h: f64,
}

impl Collocation<'_, '_> {
    fn rhs_at(&self, state: &[f64], node: usize) -> Result<[f64; 2]> {
        self.problem
            .system
            .rhs(self.mesh[node], state[2 * node], state[2 * node + 1])
    }

    /// Rows `1 + 2i` and `2 + 2i` for interval `i`.
    fn interval_rows(&self, state: &[f64], i: usize, fa: [f64; 2], fb: [f64; 2]) -> [f64; 2] {
        let (u0, w0, u1, w1) = (state[2 * i], state[2 * i + 1], state[2 * i + 2], state[2 * i + 3]);
        [
            (u1 - u0) / self.h - 0.5 * (fa[0] + fb[0]),
            (w1 - w0) / self.h - 0.5 * (fa[1] + fb[1]),
        ]
    }

    fn residual(&self, state: &[f64]) -> Result<Vec<f64>> {
        let n = self.problem.nodes;
        let mut out = vec![0.0; 2 * n];
        out[0] = self.problem.bc.left(state[0], state[1]);
        let mut fa = self.rhs_at(state, 0)?;
        for i in 0..n - 1 {
            let fb = self.rhs_at(state, i + 1)?;
            let rows = self.interval_rows(state, i, fa, fb);
            out[1 + 2 * i] = rows[0];
            out[2 + 2 * i] = rows[1];
            fa = fb;
        }
        out[2 * n - 1] = self.problem.bc.right(state[2 * n - 2], state[2 * n - 1]);
        Ok(out)
    }

    /// Forward-difference Jacobian; perturbing node `p` touches only the
    /// intervals `p − 1`, `p` and the adjacent boundary row.
    fn jacobian(&self, state: &[f64], residual: &[f64]) -> Result<BandMatrix> {
        let n = self.problem.nodes;
        let size = 2 * n;
        let mut jac = BandMatrix::zeros(size, 2, 2);
        let f: Vec<[f64; 2]> = (0..n).map(|p| self.rhs_at(state, p)).collect::<Result<_>>()?;
        let mut work = state.to_vec();
        for col in 0..size {
            let p = col / 2;
            let original = work[col];
            let step = 1e-7 * (1.0 + original.abs());
            work[col] = original + step;
            let actual = work[col] - original;
            let fp = self.rhs_at(&work, p)?;
            if p == 0 {
                let v = self.problem.bc.left(work[0], work[1]);
                jac.set(0, col, (v - residual[0]) / actual);
            }
            if p + 1 == n {
                let v = self.problem.bc.right(work[size - 2], work[size - 1]);
                jac.set(size - 1, col, (v - residual[size - 1]) / actual);
            }
            if p > 0 {
                let i = p - 1;
                let rows = self.interval_rows(&work, i, f[i], fp);
                jac.set(1 + 2 * i, col, (rows[0] - residual[1 + 2 * i]) / actual);
                jac.set(2 + 2 * i, col, (rows[1] - residual[2 + 2 * i]) / actual);
            }
            if p + 1 < n {
                let i = p;
                let rows = self.interval_rows(&work, i, fp, f[i + 1]);
                jac.set(1 + 2 * i, col, (rows[0] - residual[1 + 2 * i]) / actual);
                jac.set(2 + 2 * i, col, (rows[1] - residual[2 + 2 * i]) / actual);
            }
            work[col] = original;
        }
        Ok(jac)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton iteration from `initial_guess` (zero state when `None`).
///
/// At least one step is always taken. A step that increases the residual
/// is halved up to ten times. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn newton_solve(
    problem: &BvpProblem,
    tol: f64,
    max_iter: usize,
    initial_guess: Option<(&[f64], &[f64])>,
) -> Result<BvpSolution> {
    if !(tol > 0.0) {
        return Err(KstError::InvalidParameter {
            name: "tol",
            reason: format!("tolerance must be positive, got {tol}"),
        });
    }
    let n = problem.nodes;
    let colloc = Collocation {
        problem,
        mesh: problem.mesh(),
        h: problem.step(),
    };
    let mut state = vec![0.0; 2 * n];
    if let Some((u, w)) = initial_guess {
        if u.len() != n || w.len() != n {
            return Err(KstError::LengthMismatch {
                expected: n,
                got: u.len().min(w.len()),
            });
        }
        for i in 0..n {
            state[2 * i] = u[i];
            state[2 * i + 1] = w[i];
        }
    }
    let mut residual = colloc.residual(&state)?;
    let mut norm = inf_norm(&residual);
    let mut history = vec![norm];
    let mut iterations = 0;
    while iterations < max_iter {
        let lu = colloc.jacobian(&state, &residual)?.factor()?;
        let mut delta: Vec<f64> = residual.iter().map(|r| -r).collect();
        lu.solve(&mut delta);
        let mut lambda = 1.0;
        let (mut trial, mut trial_residual, mut trial_norm);
        loop {
            trial = state.iter().zip(&delta).map(|(s, d)| s + lambda * d).collect::<Vec<_>>();
            trial_residual = colloc.residual(&trial)?;
            trial_norm = inf_norm(&trial_residual);
            if trial_norm <= norm || lambda < 1.0 / 512.0 {
                break;
            }
            lambda *= 0.5;
        }
        state = trial;
        residual = trial_residual;
        norm = trial_norm;
        history.push(norm);
        iterations += 1;
        if norm <= tol {
            break;
        }
    }
    let (u, w) = state.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
    Ok(BvpSolution {
        nodes: colloc.mesh,
        u,
        w,
        report: NewtonReport {
            iterations,
            residual_history: history,
            converged: norm <= tol,
            final_residual: norm,
        },
    })
}

/// ∞-norm of the collocation residual of `solution` for `problem`,
/// boundary rows included.
pub fn ode_residual(solution: &BvpSolution, problem: &BvpProblem) -> Result<f64> {
    let n = problem.nodes;
    if solution.nodes.len() != n || solution.u.len() != n || solution.w.len() != n {
        return Err(KstError::MeshMismatch(format!(
            "solution has {} nodes, problem expects {n}",
            solution.nodes.len()
        )));
    }
    let mesh = problem.mesh();
    let tol = 1e-12 * (1.0 + problem.z_max.abs().max(problem.z_min.abs()));
    if solution.nodes.iter().zip(&mesh).any(|(a, b)| (a - b).abs() > tol) {
        return Err(KstError::MeshMismatch(
            "solution nodes differ from the problem mesh".into(),
        ));
    }
    let colloc = Collocation {
        problem,
        mesh,
        h: problem.step(),
    };
    let state: Vec<f64> = solution
        .u
        .iter()
        .zip(&solution.w)
        .flat_map(|(&u, &w)| [u, w])
        .collect();
    Ok(inf_norm(&colloc.residual(&state)?))
}
