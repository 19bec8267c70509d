//! Zero-order reduction of `Δu = f` on the unit square to a one-dimensional
//! boundary value problem in `z = α_1ψ(x_1) + α_2ψ(x_2)` per fixed `x̃_2`.

mod analysis;
mod variational;

pub use analysis::{
    analytic_laplacian_defect, analytic_solution, compare_slice, quadrature_transfer,
    reconstruct_field, reduced_reference, simpson, solve_slice, sweep, x2_grid, Field2D,
    SliceOutcome, SliceReport,
};
pub use variational::{
    first_variation, variational_functional, verify_variational, ConventionResult,
    SignConvention, VariationalFinding,
};

use std::f64::consts::PI;

use crate::bvp_solver::{EndpointConditions, FirstOrderSystem};
use crate::error::{KstError, Result};
use crate::kst_inner::{KstParams, PsiTable};

/// Below this magnitude a boundary bracket no longer pins `U`.
pub const DEGENERATE_BRACKET: f64 = 1e-12;

/// Right-hand side `f(x_1, x_2)` of `Δu = f`.
#[derive(Debug, Clone, Copy, Default)]
pub enum Source {
    /// `sin(πx_1) sin(πx_2)`.
    #[default]
    SinSin,
    Zero,
    Custom(fn(f64, f64) -> f64),
}

impl Source {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Source::SinSin => (PI * x1).sin() * (PI * x2).sin(),
            Source::Zero => 0.0,
            Source::Custom(f) => f(x1, x2),
        }
    }
}

/// `(z_min, z_max) = (α_2ψ(x̃_2), α_1 + α_2ψ(x̃_2))`.
pub fn slice_bounds(x2: f64, params: &KstParams, table: &PsiTable) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x2) {
        return Err(KstError::OutOfRange {
            value: x2,
            min: 0.0,
            max: 1.0,
        });
    }
    let offset = params.alpha()[1] * table.eval(x2);
    Ok((offset, params.alpha()[0] + offset))
}

/// One fixed-`x̃_2` slice of the reduced problem.
#[derive(Debug, Clone)]
pub struct SliceProblem<'a> {
    x2: f64,
    z_min: f64,
    z_max: f64,
    params: &'a KstParams,
    table: &'a PsiTable,
    source: Source,
}

impl<'a> SliceProblem<'a> {
    pub fn new(x2: f64, params: &'a KstParams, table: &'a PsiTable, source: Source) -> Result<Self> {
        if params.n() != 2 {
            return Err(KstError::InvalidParameter {
                name: "n",
                reason: format!("the Poisson reduction is two-dimensional, got n = {}", params.n()),
            });
        }
        let (z_min, z_max) = slice_bounds(x2, params, table)?;
        Ok(Self {
            x2,
            z_min,
            z_max,
            params,
            table,
            source,
        })
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn params(&self) -> &KstParams {
        self.params
    }

    pub fn table(&self) -> &PsiTable {
        self.table
    }

    pub fn source(&self) -> Source {
        self.source
    }

    fn alpha(&self) -> (f64, f64) {
        (self.params.alpha()[0], self.params.alpha()[1])
    }

    /// `x_1 = ψ^(−1)((z − α_2ψ(x̃_2))/α_1)`.
    pub fn x1_of_z(&self, z: f64) -> Result<f64> {
        let slack = 1e-12 * (1.0 + self.z_max.abs());
        if !(z >= self.z_min - slack && z <= self.z_max + slack) {
            return Err(KstError::OutOfRange {
                value: z,
                min: self.z_min,
                max: self.z_max,
            });
        }
        let (a1, _) = self.alpha();
        let y = ((z - self.z_min) / a1).clamp(0.0, 1.0);
        self.table.inverse(y)
    }

    /// `dx_1/dz = 1/(α_1ψ′(x_1(z)))`.
    pub fn jacobian_factor(&self, z: f64) -> Result<f64> {
        let x1 = self.x1_of_z(z)?;
        let slope = self.table.derivative(1, x1)?;
        if slope == 0.0 || !slope.is_finite() {
            return Err(KstError::SingularJacobian { z, x1, slope });
        }
        Ok(1.0 / (self.alpha().0 * slope))
    }

    pub fn coefficients(&self) -> Result<OdeCoefficients<'_, 'a>> {
        Ok(OdeCoefficients {
            slice: self,
            d1_x2: self.table.derivative(1, self.x2)?,
            d2_x2: self.table.derivative(2, self.x2)?,
        })
    }

    /// Boundary bracket at `x_1 = edge` (0 or 1).
    pub fn bracket(&self, edge: f64) -> Result<f64> {
        let (a1, a2) = self.alpha();
        let d1 = self.table.derivative(1, edge)?;
        let d2 = self.table.derivative(2, edge)?;
        let e1 = self.table.derivative(1, self.x2)?;
        let e2 = self.table.derivative(2, self.x2)?;
        Ok((a2 * a2 * e1 * e1 * d2 + a1 * a2 * d1 * d1 * e2) / (a1 * a1 * d1.powi(3))
            + a1 * d1
            + a2 * a2 * e1 * e1 / (a1 * d1))
    }

    /// Endpoint conditions; a near-zero bracket is an error.
    pub fn boundary_conditions(&self) -> Result<SliceBoundary> {
        let left = self.bracket(0.0)?;
        if left.abs() < DEGENERATE_BRACKET {
            return Err(KstError::DegenerateBoundary { side: "left", value: left });
        }
        let right = self.bracket(1.0)?;
        if right.abs() < DEGENERATE_BRACKET {
            return Err(KstError::DegenerateBoundary { side: "right", value: right });
        }
        Ok(SliceBoundary { left, right })
    }

    pub fn analytic_restriction(&self, z: f64) -> Result<f64> {
        Ok(analytic_solution(self.x1_of_z(z)?, self.x2))
    }
}

/// Values of the second-order equation `c2 U″ + c1 U′ + c0 U = g` at one `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub x1: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub g: f64,
}

/// Coefficient functions of the reduced equation on one slice.
#[derive(Debug, Clone)]
pub struct OdeCoefficients<'s, 'a> {
    slice: &'s SliceProblem<'a>,
    d1_x2: f64,
    d2_x2: f64,
}

impl OdeCoefficients<'_, '_> {
    pub fn at(&self, z: f64) -> Result<CoefficientValues> {
        let s = self.slice;
        let (a1, a2) = s.alpha();
        let x1 = s.x1_of_z(z)?;
        let p0 = s.table.eval(x1);
        let p1 = s.table.derivative(1, x1)?;
        let p2 = s.table.derivative(2, x1)?;
        let p3 = s.table.derivative(3, x1)?;
        if p1 == 0.0 || !p1.is_finite() {
            return Err(KstError::SingularJacobian { z, x1, slope: p1 });
        }
        let (e1, e2) = (self.d1_x2, self.d2_x2);
        let c2 = (a1 * a1 * p1 * p1 + a2 * a2 * e1 * e1) / (a1 * p1);
        let c1 = (a1 * a1 * p1 * p1 * p2 - a2 * a2 * e1 * e1 * p2) / (a1 * a1 * p1.powi(3));
        let c0 = (a1 * a2 * p1 * p1 * p2 * e2 + a2 * a2 * e1 * e1 * (3.0 * p2 - p0 * p3))
            / (a1.powi(3) * p1.powi(5));
        let g = s.source.eval(x1, s.x2) / (a1 * p1);
        Ok(CoefficientValues { x1, c2, c1, c0, g })
    }
}

/// Builds the first-order system for a slice.
pub fn first_order_system<'s, 'a>(slice: &'s SliceProblem<'a>) -> Result<SliceSystem<'s, 'a>> {
    Ok(SliceSystem {
        coefficients: slice.coefficients()?,
    })
}

/// `U′ = W`, `W′ = (g − c1W − c0U)/c2` on one slice.
#[derive(Debug, Clone)]
pub struct SliceSystem<'s, 'a> {
    coefficients: OdeCoefficients<'s, 'a>,
}

impl SliceSystem<'_, '_> {
    pub fn coefficients(&self) -> &OdeCoefficients<'_, '_> {
        &self.coefficients
    }
}

impl FirstOrderSystem for SliceSystem<'_, '_> {
    fn rhs(&self, z: f64, u: f64, w: f64) -> Result<[f64; 2]> {
        let c = self.coefficients.at(z)?;
        if c.c2 == 0.0 || !c.c2.is_finite() {
            return Err(KstError::SingularSystem { z });
        }
        Ok([w, (c.g - c.c1 * w - c.c0 * u) / c.c2])
    }
}

/// Bracket values at both ends; the conditions themselves are `U = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceBoundary {
    pub left: f64,
    pub right: f64,
}

impl EndpointConditions for SliceBoundary {
    fn left(&self, u: f64, _w: f64) -> f64 {
        u
    }

    fn right(&self, u: f64, _w: f64) -> f64 {
        u
    }
}
