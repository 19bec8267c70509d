//! Partial Bell polynomials and the Faà di Bruno composition rule.

use std::fmt;

use serde::Serialize;

use crate::error::{KstError, Result};

/// Largest order whose coefficients still fit the exact integer path.
pub const MAX_ORDER: usize = 20;

/// Exponent vector `(j_1, …, j_{m−k+1})` with `Σ j_i = k` and `Σ i·j_i = m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(j: Vec<u32>) -> Self {
        Self(j)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `Σ j_i`.
    pub fn block_count(&self) -> u64 {
        self.0.iter().map(|&j| j as u64).sum()
    }

    /// `Σ i·j_i` with one-based `i`.
    pub fn weight(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &j)| (i as u64 + 1) * j as u64)
            .sum()
    }

    /// Number of set partitions of an `m`-set with `j_i` blocks of size `i`:
    /// `m! / Π (j_i! (i!)^{j_i})`, computed exactly.
    pub fn coefficient(&self) -> u128 {
        let m = self.weight();
        let mut value = factorial(m);
        for (i, &j) in self.0.iter().enumerate() {
            value /= factorial(j as u64);
            for _ in 0..j {
                value /= factorial(i as u64 + 1);
            }
        }
        value
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

fn check_order(m: usize) -> Result<()> {
    if m > MAX_ORDER {
        return Err(KstError::InvalidParameter {
            name: "m",
            reason: format!("order {m} exceeds {MAX_ORDER}"),
        });
    }
    Ok(())
}

/// All exponent vectors for `B_{m,k}`, in ascending lexicographic order.
///
/// `k > m` is an error; `m > 0, k = 0` has no solutions and yields an
/// empty list, while `m = k = 0` yields the single vector `(0)`.
pub fn enumerate_partitions(m: usize, k: usize) -> Result<Vec<MultiIndex>> {
    if k > m {
        return Err(KstError::PartitionOrder { m, k });
    }
    check_order(m)?;
    let len = m - k + 1;
    let mut out = Vec::new();
    let mut current = vec![0u32; len];
    descend(1, len, k, m, &mut current, &mut out);
    Ok(out)
}

fn descend(
    position: usize,
    len: usize,
    blocks_left: usize,
    weight_left: usize,
    current: &mut [u32],
    out: &mut Vec<MultiIndex>,
) {
    if position > len {
        if blocks_left == 0 && weight_left == 0 {
            out.push(MultiIndex(current.to_vec()));
        }
        return;
    }
    let max_here = blocks_left.min(weight_left / position);
    for j in 0..=max_here {
        let blocks = blocks_left - j;
        let weight = weight_left - j * position;
        // the remaining blocks all have size in (position, len]
        let feasible = if position == len {
            blocks == 0 && weight == 0
        } else {
            weight >= blocks * (position + 1) && weight <= blocks * len
        };
        if feasible {
            current[position - 1] = j as u32;
            descend(position + 1, len, blocks, weight, current, out);
        }
    }
    current[position - 1] = 0;
}

/// Partial Bell polynomial `B_{m,k}(x_1, …, x_{m−k+1})`.
///
/// `B_{0,0} = 1` and `B_{m,0} = 0` for `m > 0` read no arguments.
pub fn bell_polynomial(m: usize, k: usize, args: &[f64]) -> Result<f64> {
    let partitions = enumerate_partitions(m, k)?;
    if k == 0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let needed = m - k + 1;
    if args.len() < needed {
        return Err(KstError::LengthMismatch {
            expected: needed,
            got: args.len(),
        });
    }
    Ok(partitions
        .iter()
        .map(|index| {
            let product: f64 = index
                .as_slice()
                .iter()
                .zip(args)
                .map(|(&j, &x)| x.powi(j as i32))
                .product();
            index.coefficient() as f64 * product
        })
        .sum())
}

/// Derivatives of a univariate function at one point; index `i` holds the
/// `i`-th derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeJet(Vec<f64>);

impl DerivativeJet {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Highest derivative order held.
    pub fn order(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn get(&self, order: usize) -> Option<f64> {
        self.0.get(order).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `d^m/dx^m f(g(x)) = Σ_k f^(k)(g(x)) B_{m,k}(g′(x), …, g^(m−k+1)(x))`.
///
/// `f_jet` holds `f, f′, …, f^(m)` evaluated at `g(x)`; `g_jet` holds
/// `g^(0..=m)` at `x` (its value slot is not read).
pub fn faa_di_bruno(m: usize, f_jet: &DerivativeJet, g_jet: &DerivativeJet) -> Result<f64> {
    if f_jet.0.len() < m + 1 {
        return Err(KstError::LengthMismatch {
            expected: m + 1,
            got: f_jet.0.len(),
        });
    }
    if m == 0 {
        return Ok(f_jet.0[0]);
    }
    if g_jet.0.len() < m + 1 {
        return Err(KstError::LengthMismatch {
            expected: m + 1,
            got: g_jet.0.len(),
        });
    }
    let g_derivs = &g_jet.0[1..];
    (1..=m)
        .map(|k| Ok(f_jet.0[k] * bell_polynomial(m, k, g_derivs)?))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Every j-vector with `j_i ≤ m / i`, filtered by both constraints.
    fn brute_force(m: usize, k: usize) -> BTreeSet<Vec<u32>> {
        let len = m - k + 1;
        let mut found = BTreeSet::new();
        let mut j = vec![0u32; len];
        loop {
            let blocks: usize = j.iter().map(|&v| v as usize).sum();
            let weight: usize = j.iter().enumerate().map(|(i, &v)| (i + 1) * v as usize).sum();
            if blocks == k && weight == m {
                found.insert(j.clone());
            }
            let mut pos = 0;
            loop {
                if pos == len {
                    return found;
                }
                if (j[pos] as usize) < m / (pos + 1) {
                    j[pos] += 1;
                    break;
                }
                j[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Set partitions of {0..m} counted by restricted growth strings.
    fn set_partitions(m: usize) -> u64 {
        fn grow(pos: usize, m: usize, max_label: usize) -> u64 {
            if pos == m {
                return 1;
            }
            (0..=max_label + 1)
                .map(|label| grow(pos + 1, m, max_label.max(label)))
                .sum()
        }
        if m == 0 {
            1
        } else {
            grow(1, m, 0)
        }
    }

    #[test]
    fn small_cases() {
        let p = enumerate_partitions(3, 2).unwrap();
        assert_eq!(p, vec![MultiIndex::new(vec![1, 1])]);
        let p = enumerate_partitions(4, 2).unwrap();
        assert_eq!(
            p,
            vec![MultiIndex::new(vec![0, 2, 0]), MultiIndex::new(vec![1, 0, 1])]
        );
        for m in 0..=6 {
            assert_eq!(
                enumerate_partitions(m, m).unwrap(),
                vec![MultiIndex::new(vec![m as u32])]
            );
        }
        assert!(enumerate_partitions(3, 0).unwrap().is_empty());
        assert_eq!(
            enumerate_partitions(2, 3),
            Err(KstError::PartitionOrder { m: 2, k: 3 })
        );
    }

    #[test]
    fn matches_brute_force_up_to_eight() {
        for m in 0..=8 {
            for k in 0..=m {
                let fast: BTreeSet<Vec<u32>> = enumerate_partitions(m, k)
                    .unwrap()
                    .into_iter()
                    .map(|p| p.0)
                    .collect();
                assert_eq!(fast, brute_force(m, k), "m = {m}, k = {k}");
            }
        }
    }

    #[test]
    fn enumeration_is_sorted_and_valid() {
        for m in 0..=10 {
            for k in 0..=m {
                let p = enumerate_partitions(m, k).unwrap();
                assert!(p.windows(2).all(|w| w[0] < w[1]));
                for index in &p {
                    assert_eq!(index.block_count(), k as u64);
                    assert_eq!(index.weight(), m as u64);
                }
            }
        }
    }

    #[test]
    fn bell_values() {
        assert_eq!(bell_polynomial(3, 2, &[2.0, 5.0]).unwrap(), 30.0);
        assert_eq!(bell_polynomial(4, 4, &[2.0]).unwrap(), 16.0);
        assert_eq!(bell_polynomial(0, 0, &[]).unwrap(), 1.0);
        assert_eq!(bell_polynomial(3, 0, &[]).unwrap(), 0.0);
        let total: f64 = (0..=4)
            .map(|k| bell_polynomial(4, k, &[1.0; 5]).unwrap())
            .sum();
        assert_eq!(total, 15.0);
        assert!(matches!(
            bell_polynomial(4, 1, &[1.0, 1.0]),
            Err(KstError::LengthMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn bell_numbers_from_set_partitions() {
        for m in 0..=8 {
            let total: f64 = (0..=m)
                .map(|k| bell_polynomial(m, k, &vec![1.0; m + 1]).unwrap())
                .sum();
            assert_eq!(total, set_partitions(m) as f64, "m = {m}");
        }
    }

    #[test]
    fn chain_rule() {
        let f = DerivativeJet::new(vec![0.3, 2.5]);
        let g = DerivativeJet::new(vec![0.0, -1.5]);
        assert_eq!(faa_di_bruno(1, &f, &g).unwrap(), 2.5 * -1.5);
    }

    #[test]
    fn exp_of_exp_second_derivative() {
        let e = std::f64::consts::E;
        let f = DerivativeJet::new(vec![e; 3]);
        let g = DerivativeJet::new(vec![1.0; 3]);
        assert!((faa_di_bruno(2, &f, &g).unwrap() - 2.0 * e).abs() < 1e-14);
    }

    #[test]
    fn exp_of_sin_fourth_derivative_vs_finite_difference() {
        let x = 0.3f64;
        let s = x.sin();
        let f = DerivativeJet::new(vec![s.exp(); 5]);
        let g = DerivativeJet::new(vec![x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()]);
        let exact = faa_di_bruno(4, &f, &g).unwrap();
        let h: f64 = 1e-2;
        let c = |t: f64| t.sin().exp();
        let fd = (c(x - 2.0 * h) - 4.0 * c(x - h) + 6.0 * c(x) - 4.0 * c(x + h) + c(x + 2.0 * h))
            / h.powi(4);
        assert!(((exact - fd) / exact).abs() < 1e-4, "{exact} vs {fd}");
    }

    #[test]
    fn jet_length_checked() {
        let short = DerivativeJet::new(vec![1.0, 1.0]);
        let long = DerivativeJet::new(vec![1.0; 4]);
        assert!(faa_di_bruno(3, &short, &long).is_err());
        assert!(faa_di_bruno(3, &long, &short).is_err());
    }

    #[test]
    fn coefficient_is_set_partition_count() {
        // B_{4,2}: {1,3} shapes → 4, {2,2} shapes → 3
        assert_eq!(MultiIndex::new(vec![1, 0, 1]).coefficient(), 4);
        assert_eq!(MultiIndex::new(vec![0, 2, 0]).coefficient(), 3);
        assert_eq!(MultiIndex::new(vec![1, 0, 1]).to_string(), "1;0;1");
    }
}
