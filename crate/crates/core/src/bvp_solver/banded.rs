//! Band matrix with in-place LU factorisation (partial pivoting).

use crate::error::{KstError, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored by columns
/// with `kl` extra super-diagonals reserved for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.kl + self.ku >= j && j + self.kl >= i);
        j * self.ld + self.kl + self.ku + i - j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.kl + self.ku < j || j + self.kl < i {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j <= i + self.ku && i <= j + self.kl,
            "({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    /// Factorises in place and returns the factors.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(KstError::SingularMatrix { pivot: k });
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let diag = self.get(k, k);
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.data[s] / diag;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let upper = self.data[self.slot(k, j)];
                    let t = self.slot(i, j);
                    self.data[t] -= l * upper;
                }
            }
        }
        Ok(BandLu {
            matrix: self,
            pivots,
        })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    matrix: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.matrix;
        let n = a.n;
        let reach = a.kl + a.ku;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for (i, bi) in b.iter_mut().enumerate().take((k + a.kl).min(n - 1) + 1).skip(k + 1) {
                *bi -= a.get(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for (j, bj) in b.iter().enumerate().take((k + reach).min(n - 1) + 1).skip(k + 1) {
                acc -= a.get(k, j) * bj;
            }
            b[k] = acc / a.get(k, k);
        }
    }
}
