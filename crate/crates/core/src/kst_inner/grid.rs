//! Terminating base-γ rationals of fixed depth.

use num_rational::Ratio;

use crate::error::{KstError, Result};

/// Upper bound on γ^k so a table of double-double values stays in memory.
pub const MAX_GRID_NODES: u64 = 1 << 24;

/// The set D_k of k-digit base-γ fractions `0.i_1 i_2 … i_k`.
///
/// Node `i` is the rational `i / γ^k`; its base-γ digits are the digits of
/// the integer `i`, so digit extraction never touches floating point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridD {
    gamma: u64,
    depth: u32,
    len: u64,
}

impl GridD {
    pub fn gamma(&self) -> u64 {
        self.gamma
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of nodes, γ^k.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Node spacing γ^(−k).
    pub fn spacing(&self) -> Ratio<u64> {
        Ratio::new(1, self.len)
    }

    pub fn point(&self, index: usize) -> Ratio<u64> {
        Ratio::new(index as u64, self.len)
    }

    /// All nodes in ascending order.
    pub fn points(&self) -> Vec<Ratio<u64>> {
        (0..self.len).map(|i| Ratio::new(i, self.len)).collect()
    }

    /// Base-γ digits `(i_1, …, i_k)` of node `index`, most significant first.
    pub fn digits(&self, index: usize) -> Vec<u64> {
        let mut rest = index as u64;
        let mut out = vec![0; self.depth as usize];
        for slot in out.iter_mut().rev() {
            *slot = rest % self.gamma;
            rest /= self.gamma;
        }
        out
    }
}

/// Builds D_k for base `gamma` and depth `k`.
pub fn build_grid(gamma: u64, k: u32) -> Result<GridD> {
    if gamma < 2 {
        return Err(KstError::InvalidParameter {
            name: "gamma",
            reason: format!("base must be at least 2, got {gamma}"),
        });
    }
    if k < 1 {
        return Err(KstError::InvalidParameter {
            name: "k",
            reason: "depth must be at least 1".into(),
        });
    }
    let len = gamma
        .checked_pow(k)
        .filter(|&len| len <= MAX_GRID_NODES)
        .ok_or_else(|| KstError::InvalidParameter {
            name: "k",
            reason: format!("gamma^k = {gamma}^{k} exceeds {MAX_GRID_NODES} nodes"),
        })?;
    Ok(GridD {
        gamma,
        depth: k,
        len,
    })
}
