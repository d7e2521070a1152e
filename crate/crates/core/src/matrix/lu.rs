use num_complex::Complex64;

use super::{ComplexMatrix, ABS_FLOOR, ZERO};
use crate::error::{Error, Result};

/// Condition estimates above this are reported through `log::warn!`.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Relative pivot threshold; a pivot below `PIVOT_TOL * max|A|` is singular.
const PIVOT_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// Unit-lower `L` below the diagonal and `U` on and above it.
    packed: ComplexMatrix,
    perm: Vec<usize>,
    norm_one: f64,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        let n = a.require_square()?;
        let norm_one = a.norm_one();
        let threshold = PIVOT_TOL * a.max_abs().max(ABS_FLOOR);
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, m[(i, k)].norm()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot <= threshold {
                return Err(Error::SingularMatrix { column: k, pivot });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = m[(k, j)];
                    m[(k, j)] = m[(p, j)];
                    m[(p, j)] = tmp;
                }
            }
            let inv_pivot = m[(k, k)].inv();
            for i in (k + 1)..n {
                let factor = m[(i, k)] * inv_pivot;
                m[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = m[(k, j)];
                    m[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self {
            n,
            packed: m,
            perm,
            norm_one,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.packed[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.packed[(i, j)] * x[j];
            }
            x[i] = s / self.packed[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("length {}", self.n),
                found: format!("length {}", b.len()),
            });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.n),
                found: format!("{} rows", b.rows()),
            });
        }
        let mut out = ComplexMatrix::zeros(self.n, b.cols());
        let mut x = vec![ZERO; self.n];
        for j in 0..b.cols() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = b[(self.perm[i], j)];
            }
            self.solve_in_place(&mut x);
            for (i, &xi) in x.iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve(&ComplexMatrix::identity(self.n))
            .expect("identity has matching rows")
    }

    /// 1-norm condition number computed from the explicit inverse.
    pub fn condition_one(&self) -> f64 {
        self.norm_one * self.inverse().norm_one()
    }
}

/// Inverts `a`. Condition numbers above [`DEFAULT_CONDITION_CAP`] are logged
/// as a warning and the result is still returned.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = Lu::factor(a)?;
    let inv = lu.inverse();
    let cond = lu.norm_one * inv.norm_one();
    if cond > DEFAULT_CONDITION_CAP {
        log::warn!("IllConditioned: 1-norm condition estimate {cond:e}");
    }
    Ok(inv)
}

/// Solves `A X = B`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = Lu::factor(a)?;
    lu.solve(b)
}
