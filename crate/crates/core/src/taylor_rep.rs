//! Taylor expansion of the superposition in the shift parameter `a`.
//!
//! With `z = Σ_p α_p ψ(x_p)` the `m`-th `a`-derivative of
//! `Σ_q Φ_q(Σ_p α_p ψ(x_p + a q))` at `a = 0` factors through the
//! q-independent aggregates `B̃_{m,k}`, so the truncated series is
//! `Σ_{m≤M} Σ_{k≤m} B̃_{m,k}(x) Σ_q (a^m q^m / m!) Φ_q^(k)(z)`.

use crate::combinatorics::bell_polynomial;
use crate::error::{KstError, Result};
use crate::kst_inner::{z_map, KstParams, PsiTable, MAX_DERIVATIVE_ORDER};

/// The `2n+1` outer functions with derivatives up to some order.
pub trait OuterFunctionSet {
    /// Number of functions, `2n+1` for an `n`-dimensional superposition.
    fn count(&self) -> usize;

    /// Highest derivative order [`OuterFunctionSet::derivative`] supports.
    fn max_order(&self) -> usize;

    /// `Φ_q^(order)(z)`.
    fn derivative(&self, q: usize, order: usize, z: f64) -> f64;
}

/// Outer functions given as polynomials, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialOuter {
    coefficients: Vec<Vec<f64>>,
}

impl PolynomialOuter {
    pub fn new(coefficients: Vec<Vec<f64>>) -> Self {
        Self { coefficients }
    }

    /// All `count` functions identically zero.
    pub fn zero(count: usize) -> Self {
        Self::new(vec![vec![0.0]; count])
    }
}

impl OuterFunctionSet for PolynomialOuter {
    fn count(&self) -> usize {
        self.coefficients.len()
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, q: usize, order: usize, z: f64) -> f64 {
        // Horner on the differentiated coefficients
        self.coefficients[q]
            .iter()
            .enumerate()
            .skip(order)
            .rev()
            .fold(0.0, |acc, (power, &c)| {
                let falling: f64 = (power - order + 1..=power).map(|v| v as f64).product();
                acc * z + c * falling
            })
    }
}

/// Truncation order `M` and an optional replacement for the shift `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorConfig {
    pub order: usize,
    pub a_override: Option<f64>,
}

impl TaylorConfig {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            a_override: None,
        }
    }

    pub fn with_shift(mut self, a: f64) -> Self {
        self.a_override = Some(a);
        self
    }

    fn shift(&self, params: &KstParams) -> f64 {
        self.a_override.unwrap_or_else(|| params.a_f64())
    }
}

/// `A_i = Σ_p α_p ψ^(i)(x_p)` for `i = 1..=max`.
fn psi_aggregates(
    max: usize,
    x: &[f64],
    table: &PsiTable,
    params: &KstParams,
) -> Result<Vec<f64>> {
    (1..=max)
        .map(|order| {
            params
                .alpha()
                .iter()
                .zip(x)
                .map(|(alpha, &xp)| Ok(alpha * table.derivative(order, xp)?))
                .sum()
        })
        .collect()
}

/// `B̃_{m,k}(x) = B_{m,k}(A_1, …, A_{m−k+1})`.
pub fn bell_tilde(
    m: usize,
    k: usize,
    x: &[f64],
    table: &PsiTable,
    params: &KstParams,
) -> Result<f64> {
    if x.len() != params.n() {
        return Err(KstError::LengthMismatch {
            expected: params.n(),
            got: x.len(),
        });
    }
    if k > m {
        return Err(KstError::PartitionOrder { m, k });
    }
    if k == 0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let needed = m - k + 1;
    if needed > MAX_DERIVATIVE_ORDER {
        return Err(KstError::UnsupportedOrder {
            order: needed,
            min: 1,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    let aggregates = psi_aggregates(needed, x, table, params)?;
    bell_polynomial(m, k, &aggregates)
}

fn check_outer(outer: &dyn OuterFunctionSet, params: &KstParams, order: usize) -> Result<()> {
    let expected = 2 * params.n() + 1;
    if outer.count() != expected {
        return Err(KstError::LengthMismatch {
            expected,
            got: outer.count(),
        });
    }
    if outer.max_order() < order {
        return Err(KstError::UnsupportedOrder {
            order,
            min: 0,
            max: outer.max_order(),
        });
    }
    Ok(())
}

/// Truncated Taylor form of the superposition at `x`.
pub fn taylor_kst_eval(
    outer: &dyn OuterFunctionSet,
    x: &[f64],
    cfg: &TaylorConfig,
    table: &PsiTable,
    params: &KstParams,
) -> Result<f64> {
    check_outer(outer, params, cfg.order)?;
    let z = z_map(params, table, x)?;
    let a = cfg.shift(params);
    if cfg.order == 0 {
        return Ok((0..outer.count()).map(|q| outer.derivative(q, 0, z)).sum());
    }
    let mut total = 0.0;
    let mut factorial = 1.0;
    for m in 0..=cfg.order {
        if m > 0 {
            factorial *= m as f64;
        }
        for k in 0..=m {
            let tilde = bell_tilde(m, k, x, table, params)?;
            if tilde == 0.0 {
                continue;
            }
            let inner: f64 = (0..outer.count())
                .map(|q| (a * q as f64).powi(m as i32) / factorial * outer.derivative(q, k, z))
                .sum();
            total += tilde * inner;
        }
    }
    Ok(total)
}

/// Untruncated superposition `Σ_q Φ_q(Σ_p α_p ψ(x_p + a q))`.
pub fn shifted_kst_eval(
    outer: &dyn OuterFunctionSet,
    x: &[f64],
    a: f64,
    table: &PsiTable,
    params: &KstParams,
) -> Result<f64> {
    check_outer(outer, params, 0)?;
    if x.len() != params.n() {
        return Err(KstError::LengthMismatch {
            expected: params.n(),
            got: x.len(),
        });
    }
    Ok((0..outer.count())
        .map(|q| {
            let shift = a * q as f64;
            let z: f64 = params
                .alpha()
                .iter()
                .zip(x)
                .map(|(alpha, &xp)| alpha * table.eval(xp + shift))
                .sum();
            outer.derivative(q, 0, z)
        })
        .sum())
}

/// Least-squares slope of `log error` against `log step`.
pub fn observed_order(steps: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .map(|(s, e)| (s.ln(), e.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Truncation error of the order-`M` form against the shifted form at each
/// shift in `shifts`, followed by the fitted order.
pub fn truncation_study(
    outer: &dyn OuterFunctionSet,
    x: &[f64],
    order: usize,
    shifts: &[f64],
    table: &PsiTable,
    params: &KstParams,
) -> Result<(Vec<f64>, f64)> {
    let errors = shifts
        .iter()
        .map(|&a| {
            let cfg = TaylorConfig::new(order).with_shift(a);
            let truncated = taylor_kst_eval(outer, x, &cfg, table, params)?;
            let exact = shifted_kst_eval(outer, x, a, table, params)?;
            Ok((exact - truncated).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let fitted = observed_order(shifts, &errors);
    Ok((errors, fitted))
}

/// Deterministic cubic outer functions `Φ_q(z) = c0 + c1 z + c2 z² + c3 z³`
/// used by the order checks.
pub fn synthetic_cubics(count: usize) -> PolynomialOuter {
    PolynomialOuter::new(
        (0..count)
            .map(|q| {
                let q = q as f64;
                vec![0.25 * q - 0.5, 1.0 - 0.1 * q, 0.5 + 0.2 * q, 0.3 - 0.05 * q]
            })
            .collect(),
    )
}
