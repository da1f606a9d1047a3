use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Structure constants `c[k][i][j]` with `[e_i, e_j] = Σ_k c[k][i][j] e_k`.
///
/// Only the `i < j` half is stored; the other half is read back with a sign
/// flip, so antisymmetry holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    n: usize,
    upper: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(n: usize) -> Self {
        StructureConstants { n, upper: vec![0.0; n * n * n.saturating_sub(1) / 2] }
    }

    /// Builds constants from structure equations `dω^i = Σ coeff · ω^j ∧ ω^k`,
    /// read as Maurer–Cartan equations `dω + ½[ω, ω] = 0`.
    pub fn from_structure_equations(n: usize, terms: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = Self::zeros(n);
        for &(i, j, k, coeff) in terms {
            if i >= n || j >= n || k >= n {
                return Err(Error::BadParams(format!("index out of range in term ({i},{j},{k})")));
            }
            if j == k {
                continue;
            }
            let prev = c.get(i, j, k);
            c.set(i, j, k, prev - coeff);
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        let pairs = self.n * (self.n - 1) / 2;
        // Row-major index of the pair (i, j) in the strict upper triangle.
        let pair = i * (2 * self.n - i - 1) / 2 + (j - i - 1);
        k * pairs + pair
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[self.slot(k, i, j)],
            Greater => -self.upper[self.slot(k, j, i)],
            Equal => 0.0,
        }
    }

    /// Sets `c[k][i][j]` (and therefore `c[k][j][i] = -value`). Diagonal
    /// entries are structurally zero and ignored.
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => {
                let s = self.slot(k, i, j);
                self.upper[s] = value;
            }
            Greater => {
                let s = self.slot(k, j, i);
                self.upper[s] = -value;
            }
            Equal => {}
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.upper
            .iter()
            .zip(&other.upper)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Largest cyclic-sum violation of the Jacobi identity over all index tuples.
pub fn jacobi_defect(c: &StructureConstants) -> f64 {
    let n = c.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += c.get(m, i, j) * c.get(l, m, k)
                            + c.get(m, j, k) * c.get(l, m, i)
                            + c.get(m, k, i) * c.get(l, m, j);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Constants of the same algebra in the basis `e'_i = Σ_j P[j][i] e_j`.
pub fn transform_constants(c: &StructureConstants, p: &DMatrix<f64>) -> Result<StructureConstants> {
    let n = c.dim();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::BadParams(format!("change of basis must be {n}×{n}")));
    }
    if p.determinant().abs() <= 1e-12 {
        return Err(Error::SingularMatrix("change-of-basis matrix".into()));
    }
    let pinv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("change-of-basis matrix".into()))?;
    let mut out = StructureConstants::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            // Old-basis coordinates of [e'_i, e'_j].
            let mut old = vec![0.0; n];
            for a in 0..n {
                for b in 0..n {
                    let w = p[(a, i)] * p[(b, j)];
                    if w == 0.0 {
                        continue;
                    }
                    for (m, o) in old.iter_mut().enumerate() {
                        *o += w * c.get(m, a, b);
                    }
                }
            }
            for l in 0..n {
                let v: f64 = (0..n).map(|m| pinv[(l, m)] * old[m]).sum();
                out.set(l, i, j, v);
            }
        }
    }
    Ok(out)
}
