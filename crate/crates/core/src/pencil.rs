//! The Sturm-Schrodinger doublet `H|l> = l W|l>`, `H^H|l>> = l W^H|l>>`
//! and the biorthogonal families built from one eigensolve of `W^-1 H`.
//!
//! Notation used in field names:
//!
//! | field               | symbol  | definition                         |
//! |---------------------|---------|------------------------------------|
//! | `right_kets`        | `|l>`   | right eigenvectors of `W^-1 H`      |
//! | `left_functionals`  | `{{l|`  | rows of `S^-1`                      |
//! | `dual_kets`         | `|l>>`  | `W^-H {{l|^H`                        |
//! | `curly_kets`        | `|l}`   | `W |l>`                             |
//! | `curly_dual_kets`   | `|l}}`  | `W^H |l>> = {{l|^H`                   |

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    eig_general_with, scaled_difference, vdot, vnorm, ComplexMatrix, Lu, ABS_FLOOR, DEGENERACY_TOL,
};

/// Default reality tolerance: `|Im l| <= REALITY_TOL * max(1, |Re l|)`.
pub const REALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Dressed,
    Hermitian,
    Liouville,
    File,
    Canned,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Dressed => "dressed",
            Provenance::Hermitian => "hermitian",
            Provenance::Liouville => "liouville",
            Provenance::File => "file",
            Provenance::Canned => "canned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "dressed" => Provenance::Dressed,
            "hermitian" => Provenance::Hermitian,
            "liouville" => Provenance::Liouville,
            "file" => Provenance::File,
            "canned" => Provenance::Canned,
            _ => return None,
        })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A pair `(H, W)` of square operators of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmianPencil {
    pub h: ComplexMatrix,
    pub w: ComplexMatrix,
    pub provenance: Provenance,
    pub label: String,
}

impl SturmianPencil {
    pub fn new(
        h: ComplexMatrix,
        w: ComplexMatrix,
        provenance: Provenance,
        label: impl Into<String>,
    ) -> Result<Self> {
        h.require_square()?;
        w.require_square()?;
        h.require_same_shape(&w)?;
        Ok(Self {
            h,
            w,
            provenance,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }
}

#[derive(Debug, Clone)]
pub struct BiorthogonalSystem {
    /// Ascending generalized eigenvalues.
    pub lambdas: Vec<f64>,
    pub right_kets: ComplexMatrix,
    pub left_functionals: ComplexMatrix,
    pub dual_kets: ComplexMatrix,
    pub curly_kets: ComplexMatrix,
    pub curly_dual_kets: ComplexMatrix,
    /// Largest `|Im l|` seen before the imaginary parts were dropped.
    pub reality_residual: f64,
    /// `||M - M^H||_F / ||M||_F` for `M = <<l|l'>` after mode balancing;
    /// zero up to rounding when the pencil admits a common metric.
    pub balance_residual: f64,
}

impl BiorthogonalSystem {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    fn lambda_diag(&self) -> Vec<Complex64> {
        self.lambdas
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect()
    }

    /// Rescales mode `j`: `|l_j> -> c |l_j>`, with `{{l_j|`, `|l_j>>` and the
    /// curly families updated so that `L R = I` still holds.
    pub fn rescale_mode(&mut self, j: usize, c: Complex64, pencil: &SturmianPencil) -> Result<()> {
        if c.norm() == 0.0 {
            return Err(Error::InvalidShape("zero rescaling factor".into()));
        }
        let n = self.n();
        let inv = c.inv();
        for i in 0..n {
            self.right_kets[(i, j)] *= c;
            self.left_functionals[(j, i)] *= inv;
        }
        let row = self.left_functionals.row(j);
        let dual = Lu::factor(&pencil.w.adjoint())
            .map_err(|_| Error::SingularWeight)?
            .solve_vec(&row.iter().map(|z| z.conj()).collect::<Vec<_>>())?;
        let curly = pencil.w.matvec(&self.right_kets.column(j))?;
        for i in 0..n {
            self.dual_kets[(i, j)] = dual[i];
            self.curly_kets[(i, j)] = curly[i];
            self.curly_dual_kets[(i, j)] = row[i].conj();
        }
        Ok(())
    }
}

/// Solves the pencil by reduction to `A = W^-1 H`.
///
/// Right kets are first scaled so that `|<l|W|l>| = 1` (falling back to unit
/// 2-norm when that product vanishes numerically), then rebalanced mode by
/// mode so that the pairing matrix `<<l|l'>` is Hermitian. For a pencil with
/// a common metric this realizes `<l|Theta W|l> = const`; for a Hermitian
/// pencil with `W > 0` the kets come out `W`-orthonormal.
pub fn solve_pencil(pencil: &SturmianPencil, reality_tol: f64) -> Result<BiorthogonalSystem> {
    solve_pencil_with(pencil, reality_tol, DEGENERACY_TOL)
}

pub fn solve_pencil_with(
    pencil: &SturmianPencil,
    reality_tol: f64,
    degeneracy_tol: f64,
) -> Result<BiorthogonalSystem> {
    let n = pencil.n();
    let w_lu = Lu::factor(&pencil.w).map_err(|_| Error::SingularWeight)?;
    let a = w_lu.solve(&pencil.h)?;
    let dec = eig_general_with(&a, degeneracy_tol)?;

    let offending: Vec<Complex64> = dec
        .eigenvalues
        .iter()
        .copied()
        .filter(|z| z.im.abs() > reality_tol * z.re.abs().max(1.0))
        .collect();
    if !offending.is_empty() {
        return Err(Error::ComplexSpectrum { offending });
    }
    let reality_residual = dec
        .eigenvalues
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    let lambdas: Vec<f64> = dec.eigenvalues.iter().map(|z| z.re).collect();

    let w_scale = pencil.w.frobenius_norm();
    let mut scales = Vec::with_capacity(n);
    for j in 0..n {
        let s = dec.right_vectors.column(j);
        let ws = pencil.w.matvec(&s)?;
        let q = vdot(&s, &ws).norm();
        let sn = vnorm(&s);
        let c = if q > 1e-12 * w_scale * sn * sn {
            1.0 / q.sqrt()
        } else {
            1.0
        };
        scales.push(c);
    }
    let wh_lu = Lu::factor(&pencil.w.adjoint()).map_err(|_| Error::SingularWeight)?;
    let rescale = |scales: &[f64], right: &ComplexMatrix, left: &ComplexMatrix| -> Result<_> {
        let col: Vec<Complex64> = scales.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        let row: Vec<Complex64> = scales
            .iter()
            .map(|&c| Complex64::new(1.0 / c, 0.0))
            .collect();
        let right = right.scale_columns(&col);
        let left = left.scale_rows(&row);
        let dual = wh_lu.solve(&left.adjoint())?;
        Ok((right, left, dual))
    };
    let (right, left, dual) = rescale(&scales, &dec.right_vectors, &dec.left_rows)?;

    // Rebalance so that sum_l |l>>{{l| is Hermitian whenever a common metric
    // exists, i.e. <l|Theta W|l> takes the same value for every mode.
    let pairing = &dual.adjoint() * &right;
    let log_weights = balancing_log_weights(&pairing)?;
    let balance: Vec<f64> = log_weights.iter().map(|x| (-0.5 * x).exp()).collect();
    let (right_kets, left_functionals, dual_kets) = rescale(&balance, &right, &left)?;

    let curly_dual_kets = left_functionals.adjoint();
    let curly_kets = &pencil.w * &right_kets;
    let balanced = &dual_kets.adjoint() * &right_kets;
    let balance_residual =
        scaled_difference(&balanced, &balanced.adjoint(), balanced.frobenius_norm());

    Ok(BiorthogonalSystem {
        lambdas,
        right_kets,
        left_functionals,
        dual_kets,
        curly_kets,
        curly_dual_kets,
        reality_residual,
        balance_residual,
    })
}

/// Log-weights `x` such that `diag(e^x) M` is as close to Hermitian as the
/// moduli allow: `x_k - x_j = ln|M_jk| - ln|M_kj|`, solved by weighted least
/// squares over pairs with `|M_jk||M_kj|` above noise. Pairs below noise
/// leave their modes at `x = 0`.
fn balancing_log_weights(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.rows();
    let diag_scale = (0..n)
        .map(|j| m[(j, j)].norm())
        .fold(0.0, f64::max)
        .max(ABS_FLOOR);
    let noise = (1e-10 * diag_scale).powi(2);
    let mut lap = ComplexMatrix::zeros(n, n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut max_weight: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let a = m[(j, k)].norm();
            let b = m[(k, j)].norm();
            let weight = a * b;
            if weight <= noise {
                continue;
            }
            max_weight = max_weight.max(weight);
            let r = a.ln() - b.ln();
            lap[(j, j)] += weight;
            lap[(k, k)] += weight;
            lap[(j, k)] -= weight;
            lap[(k, j)] -= weight;
            rhs[k] += weight * r;
            rhs[j] -= weight * r;
        }
    }
    if max_weight == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let shift = 1e-14 * max_weight;
    for j in 0..n {
        lap[(j, j)] += shift;
    }
    let x = Lu::factor(&lap)?.solve_vec(&rhs)?;
    Ok(x.iter().map(|z| z.re).collect())
}

/// Scaled residuals of the orthogonality, completeness and spectral
/// reconstruction identities for a solved pencil.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    /// `||L R - I||_F / sqrt(n)`.
    pub orthogonality: f64,
    /// `||<<L| curly - I||_F / sqrt(n)`, i.e. `<<l|l'} = delta`.
    pub dual_curly_pairing: f64,
    /// `||R L - I||_F / sqrt(n)`: `I = sum |l>{{l|`.
    pub completeness_kets: f64,
    /// `||curly D^H - I||_F / sqrt(n)`: `I = sum |l}<<l|`.
    pub completeness_curly: f64,
    /// `||sum |l}{{l| - W||_F / ||W||_F`.
    pub weight_reconstruction: f64,
    /// `||sum |l} l {{l| - H||_F / ||H||_F`.
    pub hamiltonian_reconstruction: f64,
    /// `||H R - W R diag(l)||_F / ((||H||_F + ||W||_F) ||R||_F)`.
    pub right_problem: f64,
    /// `||H^H D - W^H D diag(l)||_F / ((||H||_F + ||W||_F) ||D||_F)`.
    pub dual_problem: f64,
    /// `{{l|l'>` in full.
    pub pairing: ComplexMatrix,
}

impl ConsistencyReport {
    pub fn named(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("orthogonality", self.orthogonality),
            ("dualCurlyPairing", self.dual_curly_pairing),
            ("completenessKets", self.completeness_kets),
            ("completenessCurly", self.completeness_curly),
            ("weightReconstruction", self.weight_reconstruction),
            ("hamiltonianReconstruction", self.hamiltonian_reconstruction),
            ("rightProblem", self.right_problem),
            ("dualProblem", self.dual_problem),
        ])
    }

    pub fn worst(&self) -> f64 {
        self.named().values().copied().fold(0.0, f64::max)
    }
}

pub fn consistency_report(
    sys: &BiorthogonalSystem,
    pencil: &SturmianPencil,
) -> Result<ConsistencyReport> {
    let n = pencil.n();
    if sys.n() != n || sys.right_kets.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("system of dimension {n}"),
            found: format!("dimension {}", sys.n()),
        });
    }
    let identity = ComplexMatrix::identity(n);
    let root_n = (n as f64).sqrt();
    let lam = sys.lambda_diag();

    let pairing = &sys.left_functionals * &sys.right_kets;
    let dual_curly = &sys.dual_kets.adjoint() * &sys.curly_kets;
    let rl = &sys.right_kets * &sys.left_functionals;
    let curly_dual = &sys.curly_kets * &sys.dual_kets.adjoint();
    let w_rebuilt = &sys.curly_kets * &sys.left_functionals;
    let h_rebuilt = &sys.curly_kets.scale_columns(&lam) * &sys.left_functionals;

    let hr = &pencil.h * &sys.right_kets;
    let wrl = (&pencil.w * &sys.right_kets).scale_columns(&lam);
    let hd = &pencil.h.adjoint() * &sys.dual_kets;
    let wdl = (&pencil.w.adjoint() * &sys.dual_kets).scale_columns(&lam);
    let op_scale = pencil.h.frobenius_norm() + pencil.w.frobenius_norm();

    Ok(ConsistencyReport {
        orthogonality: scaled_difference(&pairing, &identity, root_n),
        dual_curly_pairing: scaled_difference(&dual_curly, &identity, root_n),
        completeness_kets: scaled_difference(&rl, &identity, root_n),
        completeness_curly: scaled_difference(&curly_dual, &identity, root_n),
        weight_reconstruction: scaled_difference(&w_rebuilt, &pencil.w, pencil.w.frobenius_norm()),
        hamiltonian_reconstruction: scaled_difference(
            &h_rebuilt,
            &pencil.h,
            pencil.h.frobenius_norm().max(ABS_FLOOR),
        ),
        right_problem: scaled_difference(&hr, &wrl, op_scale * sys.right_kets.frobenius_norm()),
        dual_problem: scaled_difference(&hd, &wdl, op_scale * sys.dual_kets.frobenius_norm()),
        pairing,
    })
}
