//! Sprecher constants and the Köppen-corrected inner function ψ.

mod grid;
mod psi;

pub use grid::{build_grid, GridD, MAX_GRID_NODES};
pub use psi::{build_psi, PsiTable, MAX_DERIVATIVE_ORDER};

use num_rational::Ratio;

use crate::error::{KstError, Result};

/// Global configuration of the superposition: dimension, base, depth and the
/// constants `a` and `α_p` derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct KstParams {
    n: usize,
    gamma: u64,
    depth: u32,
    a: Ratio<u64>,
    alpha: Vec<f64>,
    series_terms: u32,
}

impl KstParams {
    /// Constants for dimension `n` and base `gamma` at depth `k`.
    pub fn new(n: usize, gamma: u64, k: u32, series_terms: u32) -> Result<Self> {
        compute_constants(n, gamma, series_terms)?.with_depth(k)
    }

    /// Same constants, different table depth.
    pub fn with_depth(mut self, k: u32) -> Result<Self> {
        build_grid(self.gamma, k)?;
        self.depth = k;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> u64 {
        self.gamma
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `a = 1/(γ(γ−1))`, exact.
    pub fn a(&self) -> Ratio<u64> {
        self.a
    }

    pub fn a_f64(&self) -> f64 {
        *self.a.numer() as f64 / *self.a.denom() as f64
    }

    /// `α_1 … α_n`, zero-based.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn series_terms(&self) -> u32 {
        self.series_terms
    }
}

/// Exponent `(n^r − 1)/(n − 1)` (equal to `r` when `n = 1`).
pub fn beta(n: usize, r: u32) -> Option<u64> {
    let n = n as u64;
    if n == 1 {
        return Some(r as u64);
    }
    n.checked_pow(r).map(|p| (p - 1) / (n - 1))
}

/// Computes `a` exactly and `α_p` as the truncated series
/// `Σ_{r=1}^{terms} γ^(−(p−1)(n^r−1)/(n−1))`, with `α_1 = 1`.
///
/// The series is summed in f64 in ascending `r`. The returned parameters
/// have depth 1; use [`KstParams::with_depth`] for deeper tables.
pub fn compute_constants(n: usize, gamma: u64, series_terms: u32) -> Result<KstParams> {
    if n == 0 {
        return Err(KstError::InvalidParameter {
            name: "n",
            reason: "dimension must be at least 1".into(),
        });
    }
    let required = 2 * n as u64 + 2;
    if gamma < required {
        return Err(KstError::BaseTooSmall {
            gamma,
            n,
            required,
        });
    }
    if series_terms < 1 {
        return Err(KstError::InvalidParameter {
            name: "series_terms",
            reason: "need at least one series term".into(),
        });
    }
    let a = Ratio::new(1, gamma * (gamma - 1));
    let alpha = (1..=n as u64)
        .map(|p| alpha_series(n, gamma, p, series_terms))
        .collect();
    Ok(KstParams {
        n,
        gamma,
        depth: 1,
        a,
        alpha,
        series_terms,
    })
}

fn alpha_series(n: usize, gamma: u64, p: u64, terms: u32) -> f64 {
    if p == 1 {
        return 1.0;
    }
    let base = gamma as f64;
    let mut sum = 0.0;
    for r in 1..=terms {
        let exponent = match beta(n, r).and_then(|b| b.checked_mul(p - 1)) {
            Some(e) if e <= 1100 => e as i32,
            // every later term is below the smallest subnormal
            _ => break,
        };
        let scale = base.powi(exponent);
        let term = if scale.is_finite() {
            1.0 / scale
        } else {
            base.powf(-(exponent as f64))
        };
        sum += term;
    }
    sum
}

/// `z = Σ_p α_p ψ(x_p)`.
pub fn z_map(params: &KstParams, table: &PsiTable, x: &[f64]) -> Result<f64> {
    if x.len() != params.n() {
        return Err(KstError::LengthMismatch {
            expected: params.n(),
            got: x.len(),
        });
    }
    Ok(params
        .alpha()
        .iter()
        .zip(x)
        .map(|(alpha, &xp)| alpha * table.eval(xp))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_is_one_ninetieth() {
        let params = compute_constants(2, 10, 4).unwrap();
        assert_eq!(params.a(), Ratio::new(1, 90));
    }

    #[test]
    fn alpha_one_is_one() {
        let params = compute_constants(2, 10, 4).unwrap();
        assert_eq!(params.alpha()[0], 1.0);
    }

    #[test]
    fn alpha_two_series_terms() {
        // 0.1 + 0.001 + 1e-7 + 1e-15, summed left to right
        let three = compute_constants(2, 10, 3).unwrap().alpha()[1];
        let four = compute_constants(2, 10, 4).unwrap().alpha()[1];
        assert_eq!(format!("{three:?}"), "0.10100010000000001");
        assert_eq!(format!("{four:?}"), "0.10100010000000101");
        assert_eq!(four, 0.1 + 0.001 + 1e-7 + 1e-15);
        // the r = 5 term is 1e-31, far below one ulp
        assert_eq!(compute_constants(2, 10, 12).unwrap().alpha()[1], four);
    }

    #[test]
    fn alpha_decreasing() {
        let params = compute_constants(3, 8, 6).unwrap();
        let alpha = params.alpha();
        assert_eq!(alpha[0], 1.0);
        for pair in alpha.windows(2) {
            assert!(pair[1] > 0.0 && pair[1] < pair[0]);
        }
    }

    #[test]
    fn rejects_small_base() {
        assert_eq!(
            compute_constants(2, 3, 4),
            Err(KstError::BaseTooSmall {
                gamma: 3,
                n: 2,
                required: 6
            })
        );
        assert!(compute_constants(2, 6, 4).is_ok());
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta(2, 1), Some(1));
        assert_eq!(beta(2, 4), Some(15));
        assert_eq!(beta(3, 3), Some(13));
        assert_eq!(beta(1, 5), Some(5));
    }

    #[test]
    fn z_map_cases() {
        let params = compute_constants(2, 10, 4).unwrap();
        let table = build_psi(&params).unwrap();
        assert_eq!(z_map(&params, &table, &[0.0, 0.0]).unwrap(), 0.0);
        let z = z_map(&params, &table, &[1.0, 0.5]).unwrap();
        assert!((z - (1.0 + 0.5 * params.alpha()[1])).abs() < 1e-15);
        assert!(matches!(
            z_map(&params, &table, &[0.1]),
            Err(KstError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn z_map_deep_table_against_raw_nodes() {
        let params = KstParams::new(2, 10, 4, 4).unwrap();
        let table = build_psi(&params).unwrap();
        let alpha = params.alpha();
        // 0.375 and 0.625 are exactly nodes 3750 and 6250
        let expected = alpha[0] * table.node_value(3750) + alpha[1] * table.node_value(6250);
        let z = z_map(&params, &table, &[0.375, 0.625]).unwrap();
        assert!((z - expected).abs() < 1e-15);

        // 0.3 and 0.7 are not binary fractions: interpolate the raw nodes by hand
        let raw = |x: f64| {
            let t = twofloat::TwoFloat::new_mul(x, 1e4);
            let i = t.floor();
            let w = f64::from(t - i);
            let i = i.hi() as usize;
            let (lo, hi) = (table.node_value(i), table.node_value(i + 1));
            lo + w * (hi - lo)
        };
        let expected = alpha[0] * raw(0.3) + alpha[1] * raw(0.7);
        let z = z_map(&params, &table, &[0.3, 0.7]).unwrap();
        assert!((z - expected).abs() < 1e-14, "{z} vs {expected}");
    }
}
