//! Non-Hermitian eigen-decomposition: Householder reduction to upper
//! Hessenberg form, complex single-shift QR to Schur form, back-substitution
//! for the eigenvectors of the triangular factor.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::lu::Lu;
use super::{vnorm, ComplexMatrix, ABS_FLOOR, ZERO};
use crate::error::{Error, Result};

/// Default relative eigenvalue-gap threshold for rejecting degenerate spectra.
pub const DEGENERACY_TOL: f64 = 1e-8;

const ITERATIONS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct GeneralEigenDecomposition {
    /// Ascending by real part, ties broken by imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// `S`: column j is the right eigenvector of `eigenvalues[j]`, unit 2-norm,
    /// largest-modulus component real and positive.
    pub right_vectors: ComplexMatrix,
    /// `S^-1`: row j is the left functional paired with column j of `S`.
    pub left_rows: ComplexMatrix,
}

impl GeneralEigenDecomposition {
    /// `||A S - S diag(lambda)||_F`.
    pub fn residual(&self, a: &ComplexMatrix) -> f64 {
        let av = a * &self.right_vectors;
        let vl = self.right_vectors.scale_columns(&self.eigenvalues);
        (&av - &vl).frobenius_norm()
    }

    /// `max |L S - I|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let ls = &self.left_rows * &self.right_vectors;
        (&ls - &ComplexMatrix::identity(ls.rows())).max_abs()
    }
}

/// Orders complex numbers by real part, then imaginary part.
pub fn cmp_spectral(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn eig_general(a: &ComplexMatrix) -> Result<GeneralEigenDecomposition> {
    eig_general_with(a, DEGENERACY_TOL)
}

/// Eigen-decomposition of a general square matrix with a simple spectrum.
///
/// Spectra whose minimum pairwise gap is `<= degeneracy_tol * max|lambda|`
/// are rejected. The left functionals are the rows of the inverse of the
/// right-eigenvector matrix.
pub fn eig_general_with(
    a: &ComplexMatrix,
    degeneracy_tol: f64,
) -> Result<GeneralEigenDecomposition> {
    let n = a.require_square()?;
    let (mut t, mut z) = hessenberg(a);
    schur_qr(&mut t, &mut z)?;

    let raw_values = t.diagonal();
    let raw_vectors = triangular_eigenvectors(&t);
    let s_unsorted = &z * &raw_vectors;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_spectral(&raw_values[i], &raw_values[j]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| raw_values[i]).collect();

    let max_mod = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = degeneracy_tol * max_mod.max(ABS_FLOOR);
    let gap = min_gap(&eigenvalues);
    if gap <= threshold {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }

    let mut right_vectors = ComplexMatrix::from_fn(n, n, |i, j| s_unsorted[(i, order[j])]);
    for j in 0..n {
        normalize_column(&mut right_vectors, j);
    }
    let left_rows = match Lu::factor(&right_vectors) {
        Ok(lu) => lu.inverse(),
        Err(Error::SingularMatrix { .. }) => return Err(Error::SingularEigenbasis),
        Err(e) => return Err(e),
    };
    Ok(GeneralEigenDecomposition {
        eigenvalues,
        right_vectors,
        left_rows,
    })
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Unit 2-norm; the first component of largest modulus made real positive.
fn normalize_column(m: &mut ComplexMatrix, j: usize) {
    let col = m.column(j);
    let norm = vnorm(&col);
    let mut pivot = 0;
    for (i, z) in col.iter().enumerate() {
        if z.norm() > col[pivot].norm() * (1.0 + 1e-12) {
            pivot = i;
        }
    }
    let phase = col[pivot] / col[pivot].norm();
    let factor = phase.conj() / norm;
    for i in 0..m.rows() {
        m[(i, j)] *= factor;
    }
}

/// Householder reduction `A = Q T Q^H` with `T` upper Hessenberg.
fn hessenberg(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut t = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = ((k + 1)..n).map(|i| t[(i, k)]).collect();
        let alpha = vnorm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        // v = x + e^{i arg x0} ||x|| e1
        let mut v = x;
        v[0] += phase * alpha;
        let vn = vnorm(&v);
        if vn == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        // T <- P T P with P = I - 2 v v^H acting on rows/cols k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                s += vi.conj() * t[(k + 1 + idx, j)];
            }
            s *= 2.0;
            for (idx, vi) in v.iter().enumerate() {
                t[(k + 1 + idx, j)] -= vi * s;
            }
        }
        for m in [&mut t, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (idx, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + idx)] * vi;
                }
                s *= 2.0;
                for (idx, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + idx)] -= s * vi.conj();
                }
            }
        }
        for i in (k + 2)..n {
            t[(i, k)] = ZERO;
        }
    }
    (t, q)
}

/// Unitary rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let r = an.hypot(b.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let p = (a - d) * 0.5;
    let disc = (p * p + b * c).sqrt();
    let denom = if (p + disc).norm() >= (p - disc).norm() {
        p + disc
    } else {
        p - disc
    };
    if denom.norm() == 0.0 {
        d
    } else {
        d - b * c / denom
    }
}

/// Complex shifted QR on an upper Hessenberg `t`, driving it to upper
/// triangular Schur form; the unitary transformations accumulate into `z`.
fn schur_qr(t: &mut ComplexMatrix, z: &mut ComplexMatrix) -> Result<()> {
    let n = t.rows();
    if n == 1 {
        return Ok(());
    }
    let max_total = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(n);

    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let local = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if sub <= f64::EPSILON * local || sub < f64::MIN_POSITIVE {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= max_total {
            return Err(Error::ConvergenceFailure { iterations: total });
        }
        total += 1;
        since_deflation += 1;

        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            t[(hi, hi)] + Complex64::new(t[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(
                t[(hi - 1, hi - 1)],
                t[(hi - 1, hi)],
                t[(hi, hi - 1)],
                t[(hi, hi)],
            )
        };

        for k in lo..=hi {
            t[(k, k)] -= mu;
        }
        rotations.clear();
        for k in lo..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            rotations.push((c, s));
            for j in k..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = x * c + s * y;
                t[(k + 1, j)] = -s.conj() * x + y * c;
            }
            t[(k + 1, k)] = ZERO;
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + idx;
            let row_end = (k + 2).min(hi + 1);
            for i in 0..row_end {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * c + y * s.conj();
                t[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in lo..=hi {
            t[(k, k)] += mu;
        }
    }
    // Clean the strictly lower part left by rounding.
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Eigenvectors of an upper triangular matrix, column k for `t[(k, k)]`.
fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let small = f64::EPSILON * t.frobenius_norm().max(ABS_FLOOR);
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = ZERO;
            for m in (j + 1)..=k {
                s += t[(j, m)] * y[(m, k)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[(j, k)] = -s / denom;
        }
    }
    y
}
