//! Hermitian eigen-decomposition by cyclic complex Jacobi rotations, and the
//! principal square root of a positive definite matrix built on top of it.

use num_complex::Complex64;

use super::{ComplexMatrix, ABS_FLOOR, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Default Hermiticity tolerance, relative to `max(||A||_F, ABS_FLOOR)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative positivity threshold for [`sqrtm_positive`].
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column j is the unit eigenvector of `eigenvalues[j]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `U diag(f(lambda)) U^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(f(l), 0.0))
            .collect();
        let ud = self.vectors.scale_columns(&d);
        &ud * &self.vectors.adjoint()
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// The Hermitian part `(A + A^H)/2` is diagonalized after checking that
/// `max|A - A^H| <= HERMITIAN_TOL * ||A||_F`.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    eig_hermitian_with(a, HERMITIAN_TOL)
}

pub fn eig_hermitian_with(a: &ComplexMatrix, rel_tol: f64) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    let defect = a.hermiticity_defect();
    if defect > rel_tol * a.frobenius_norm().max(ABS_FLOOR) {
        return Err(Error::NotHermitian { residual: defect });
    }
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    let mut converged = n == 1 || scale == 0.0;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&m);
        if off <= f64::EPSILON * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q, scale);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > f64::EPSILON * scale {
        return Err(Error::ConvergenceFailure {
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen {
        eigenvalues,
        vectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `m[(p, q)]`, accumulated into `v`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, scale: f64) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag <= 1e-300 || mag <= f64::EPSILON * 1e-3 * scale {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase.conj() * (-s);
    let jqq = phase.conj() * c;

    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * jpp + akq * jqp;
        m[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Principal (Hermitian positive definite) square root.
pub fn sqrtm_positive(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(a)?;
    let min_eig = eig.eigenvalues[0];
    if min_eig <= POSITIVITY_TOL * a.frobenius_norm().max(ABS_FLOOR) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    Ok(eig.reconstruct_with(f64::sqrt).hermitian_part())
}

/// Eigenvalues (ascending) of the Hermitian-definite pencil `h x = l w x`,
/// computed as the spectrum of `w^-1/2 h w^-1/2`.
pub fn hermitian_pencil_eigenvalues(h: &ComplexMatrix, w: &ComplexMatrix) -> Result<Vec<f64>> {
    let w_eig = eig_hermitian(w)?;
    let min_eig = w_eig.eigenvalues[0];
    if min_eig <= POSITIVITY_TOL * w.frobenius_norm().max(ABS_FLOOR) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let w_inv_sqrt = w_eig.reconstruct_with(|l| 1.0 / l.sqrt());
    let reduced = &(&w_inv_sqrt * &h.hermitian_part()) * &w_inv_sqrt;
    Ok(eig_hermitian_with(&reduced.hermitian_part(), HERMITIAN_TOL)?.eigenvalues)
}
