//! Metric operators for a solved pencil.
//!
//! The single-series metric is `Theta = sum_l d_l |l>> {{l|`, the weighted
//! form of the sum over dual kets and left functionals; `d = 1` is the plain
//! formula. The double-series form is `Theta = sum |l}} M_{l l'} {{l'|`.
//! Neither construction assumes the pencil admits a common metric for `H`
//! and `W`; [`verify_metric`] decides that after the fact.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    eig_hermitian_with, hermitian_pencil_eigenvalues, inverse, scaled_difference, sqrtm_positive,
    vdot, vnorm, ComplexMatrix, Lu, ABS_FLOOR,
};
use crate::pencil::{BiorthogonalSystem, SturmianPencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMethod {
    SingleSeries,
    DoubleSeries,
    GroundTruth,
    File,
}

impl MetricMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricMethod::SingleSeries => "single-series",
            MetricMethod::DoubleSeries => "double-series",
            MetricMethod::GroundTruth => "ground-truth",
            MetricMethod::File => "file",
        }
    }
}

impl fmt::Display for MetricMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct MetricCandidate {
    pub theta: ComplexMatrix,
    /// Strictly positive per-mode weights `d_l`.
    pub mode_weights: Vec<f64>,
    pub method: MetricMethod,
}

impl MetricCandidate {
    /// Wraps an externally supplied metric (ground truth, file input).
    pub fn external(theta: ComplexMatrix, method: MetricMethod) -> Result<Self> {
        let n = theta.require_square()?;
        Ok(Self {
            theta,
            mode_weights: vec![1.0; n],
            method,
        })
    }
}

pub fn unit_weights(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} mode weights"),
            found: format!("{}", weights.len()),
        });
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, &d)| !(d > 0.0) || !d.is_finite())
    {
        return Err(Error::NonpositiveWeight { index, value });
    }
    Ok(())
}

/// Adds the rank-one terms `d_j |j>> {{j|` for `j` in `range`.
fn accumulate_single(
    acc: &mut ComplexMatrix,
    sys: &BiorthogonalSystem,
    weights: &[f64],
    range: std::ops::Range<usize>,
) {
    for j in range {
        acc.add_outer(
            Complex64::new(weights[j], 0.0),
            &sys.dual_kets.column(j),
            &sys.left_functionals.row(j),
        );
    }
}

/// `Theta = sum_j d_j |l_j>> {{l_j|`, summed in ascending-eigenvalue order.
pub fn build_metric_single(
    sys: &BiorthogonalSystem,
    mode_weights: &[f64],
) -> Result<MetricCandidate> {
    let n = sys.n();
    check_weights(mode_weights, n)?;
    let mut theta = ComplexMatrix::zeros(n, n);
    accumulate_single(&mut theta, sys, mode_weights, 0..n);
    Ok(MetricCandidate {
        theta,
        mode_weights: mode_weights.to_vec(),
        method: MetricMethod::SingleSeries,
    })
}

/// The two evaluation routes of the double-series coefficients.
#[derive(Debug, Clone)]
pub struct MCoefficients {
    /// `M_{l l'} = <<l|l'>`, evaluated as `D^H R`.
    pub pairing_form: ComplexMatrix,
    /// `M_{l l'} = {{l| W^-1 |l'>`, evaluated as `L (W^-1 R)`.
    pub resolvent_form: ComplexMatrix,
}

impl MCoefficients {
    /// `||pairing - resolvent||_F / ||pairing||_F`.
    pub fn disagreement(&self) -> f64 {
        scaled_difference(
            &self.pairing_form,
            &self.resolvent_form,
            self.pairing_form.frobenius_norm(),
        )
    }
}

pub fn compute_m_forms(sys: &BiorthogonalSystem, pencil: &SturmianPencil) -> Result<MCoefficients> {
    if sys.n() != pencil.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {}", pencil.n()),
            found: format!("{}", sys.n()),
        });
    }
    let w_lu = Lu::factor(&pencil.w).map_err(|_| Error::SingularWeight)?;
    let w_inv_r = w_lu.solve(&sys.right_kets)?;
    Ok(MCoefficients {
        pairing_form: &sys.dual_kets.adjoint() * &sys.right_kets,
        resolvent_form: &sys.left_functionals * &w_inv_r,
    })
}

/// `M_{l l'} = <<l|l'>` (the pairing form of [`compute_m_forms`]).
pub fn compute_m(sys: &BiorthogonalSystem, pencil: &SturmianPencil) -> Result<ComplexMatrix> {
    Ok(compute_m_forms(sys, pencil)?.pairing_form)
}

/// `Theta = sum_{l l'} |l}} M_{l l'} {{l'|`.
pub fn build_metric_double(sys: &BiorthogonalSystem, m: &ComplexMatrix) -> Result<MetricCandidate> {
    let n = sys.n();
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n} coefficient matrix"),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let theta = &(&sys.curly_dual_kets * m) * &sys.left_functionals;
    Ok(MetricCandidate {
        theta,
        mode_weights: unit_weights(n),
        method: MetricMethod::DoubleSeries,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Bound on `||Theta - Theta^H||_F / ||Theta||_F`.
    pub hermiticity: f64,
    /// Bound on both scaled intertwining residuals.
    pub intertwine: f64,
    /// `minEig / ||X||_F` must exceed this to count as positive definite.
    pub positive: f64,
    /// Below `-negative_floor` (relative) the matrix is indefinite; between
    /// that and `positive` it is numerically singular.
    pub negative_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-9,
            intertwine: 1e-9,
            positive: 1e-12,
            negative_floor: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            hermiticity: tol,
            intertwine: tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    /// Smallest eigenvalue is numerically zero: rank deficient.
    Singular,
    Indefinite,
}

impl Definiteness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Definiteness::Positive => "positive",
            Definiteness::Singular => "singular",
            Definiteness::Indefinite => "indefinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub hermitian: bool,
    pub intertwines_h: bool,
    pub intertwines_w: bool,
    pub theta_positive: bool,
    pub theta_w_positive: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.hermitian
            && self.intertwines_h
            && self.intertwines_w
            && self.theta_positive
            && self.theta_w_positive
    }
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    /// `||Theta - Theta^H||_F / ||Theta||_F`.
    pub hermiticity_residual: f64,
    /// `max |Theta - Theta^H|`, unscaled.
    pub hermiticity_max: f64,
    /// `||H^H Theta - Theta H||_F / (||H||_F ||Theta||_F)`.
    pub intertwine_h: f64,
    /// `||W^H Theta - Theta W||_F / (||W||_F ||Theta||_F)`.
    pub intertwine_w: f64,
    pub min_eig_theta: f64,
    pub min_eig_theta_w: f64,
    pub theta_definiteness: Definiteness,
    pub theta_w_definiteness: Definiteness,
    pub verdict: Verdict,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn classify(x: &ComplexMatrix, tol: &Tolerances) -> (f64, Definiteness) {
    let herm = x.hermitian_part();
    let scale = herm.frobenius_norm().max(ABS_FLOOR);
    let min_eig = match eig_hermitian_with(&herm, f64::INFINITY) {
        Ok(e) => e.eigenvalues[0],
        Err(_) => return (f64::NAN, Definiteness::Indefinite),
    };
    let rel = min_eig / scale;
    let class = if rel > tol.positive {
        Definiteness::Positive
    } else if rel >= -tol.negative_floor {
        Definiteness::Singular
    } else {
        Definiteness::Indefinite
    };
    (min_eig, class)
}

/// Diagnoses a candidate metric against a pencil. Only a shape mismatch is an
/// error; a bad metric yields a failing report.
pub fn verify_metric(
    pencil: &SturmianPencil,
    cand: &MetricCandidate,
    tol: &Tolerances,
) -> Result<MetricReport> {
    let theta = &cand.theta;
    pencil.h.require_same_shape(theta)?;
    let theta_norm = theta.frobenius_norm();
    let theta_h = theta.adjoint();

    let hermiticity_residual = scaled_difference(theta, &theta_h, theta_norm);
    let hermiticity_max = (theta - &theta_h).max_abs();
    let intertwine = |op: &ComplexMatrix| {
        let lhs = &op.adjoint() * theta;
        let rhs = theta * op;
        scaled_difference(&lhs, &rhs, op.frobenius_norm() * theta_norm)
    };
    let intertwine_h = intertwine(&pencil.h);
    let intertwine_w = intertwine(&pencil.w);
    let (min_eig_theta, theta_definiteness) = classify(theta, tol);
    let (min_eig_theta_w, theta_w_definiteness) = classify(&(theta * &pencil.w), tol);

    let verdict = Verdict {
        hermitian: hermiticity_residual <= tol.hermiticity,
        intertwines_h: intertwine_h <= tol.intertwine,
        intertwines_w: intertwine_w <= tol.intertwine,
        theta_positive: theta_definiteness == Definiteness::Positive,
        theta_w_positive: theta_w_definiteness == Definiteness::Positive,
    };
    Ok(MetricReport {
        hermiticity_residual,
        hermiticity_max,
        intertwine_h,
        intertwine_w,
        min_eig_theta,
        min_eig_theta_w,
        theta_definiteness,
        theta_w_definiteness,
        verdict,
    })
}

/// `<<psi|phi> = psi^H Theta phi`.
pub fn inner_product_s(
    cand: &MetricCandidate,
    psi: &[Complex64],
    phi: &[Complex64],
) -> Result<Complex64> {
    if psi.len() != cand.theta.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", cand.theta.rows()),
            found: format!("length {}", psi.len()),
        });
    }
    let theta_phi = cand.theta.matvec(phi)?;
    Ok(vdot(psi, &theta_phi))
}

/// Result of mapping a pencil through `Omega = Theta^1/2`.
#[derive(Debug, Clone)]
pub struct Dressing {
    pub omega: ComplexMatrix,
    /// `Omega H Omega^-1`.
    pub h: ComplexMatrix,
    /// `Omega W Omega^-1`.
    pub w: ComplexMatrix,
    /// `||h - h^H||_F / ||h||_F`.
    pub h_residual: f64,
    /// `||w - w^H||_F / ||w||_F`.
    pub w_residual: f64,
    /// Ascending eigenvalues of the Hermitized `(h, w)` pencil.
    pub spectrum: Vec<f64>,
}

impl Dressing {
    /// `max_j |spectrum_j - lambda_j| / max(1, |lambda_j|)`.
    pub fn isospectrality_defect(&self, lambdas: &[f64]) -> f64 {
        if lambdas.len() != self.spectrum.len() {
            return f64::INFINITY;
        }
        self.spectrum
            .iter()
            .zip(lambdas)
            .map(|(s, l)| (s - l).abs() / l.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

pub fn dress(pencil: &SturmianPencil, cand: &MetricCandidate) -> Result<Dressing> {
    pencil.h.require_same_shape(&cand.theta)?;
    let omega = sqrtm_positive(&cand.theta)?;
    let omega_inv = inverse(&omega)?;
    let h = &(&omega * &pencil.h) * &omega_inv;
    let w = &(&omega * &pencil.w) * &omega_inv;
    let h_residual = scaled_difference(&h, &h.adjoint(), h.frobenius_norm());
    let w_residual = scaled_difference(&w, &w.adjoint(), w.frobenius_norm());
    let spectrum = hermitian_pencil_eigenvalues(&h.hermitian_part(), &w.hermitian_part())?;
    Ok(Dressing {
        omega,
        h,
        w,
        h_residual,
        w_residual,
        spectrum,
    })
}

#[derive(Debug, Clone)]
pub struct TruncationPoint {
    /// Number of lowest modes kept.
    pub k: usize,
    pub report: MetricReport,
}

impl TruncationPoint {
    pub fn rank_deficient(&self) -> bool {
        self.report.theta_definiteness != Definiteness::Positive
    }
}

/// Partial sums `Theta_K = sum_{j < K} d_j |l_j>> {{l_j|` for `K = 0..=n`.
/// `K = 0` is the empty sum `Theta = 0`. The last entry is built with the
/// same summation order as [`build_metric_single`], so it matches the full
/// metric bit for bit.
pub fn truncate_scan(
    sys: &BiorthogonalSystem,
    pencil: &SturmianPencil,
    mode_weights: &[f64],
    tol: &Tolerances,
) -> Result<Vec<TruncationPoint>> {
    let n = sys.n();
    check_weights(mode_weights, n)?;
    let mut theta = ComplexMatrix::zeros(n, n);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            accumulate_single(&mut theta, sys, mode_weights, k - 1..k);
        }
        let cand = MetricCandidate {
            theta: theta.clone(),
            mode_weights: mode_weights.to_vec(),
            method: MetricMethod::SingleSeries,
        };
        out.push(TruncationPoint {
            k,
            report: verify_metric(pencil, &cand, tol)?,
        });
    }
    Ok(out)
}

/// How well `Theta |l_j>` lines up with the computed dual ket `|l_j>>`.
#[derive(Debug, Clone, Copy)]
pub struct ModeAlignment {
    /// `c` minimizing `|| |l_j>> - c Theta|l_j> ||`.
    pub ratio: Complex64,
    /// `|| |l_j>> - c Theta|l_j> || / || |l_j>> ||`.
    pub residual: f64,
}

impl ModeAlignment {
    /// Parallel with a positive real ratio, to relative tolerance `tol`.
    pub fn positive_parallel(&self, tol: f64) -> bool {
        self.residual <= tol
            && self.ratio.re > 0.0
            && self.ratio.im.abs() <= tol * self.ratio.norm()
    }
}

pub fn mode_alignment(
    theta: &ComplexMatrix,
    sys: &BiorthogonalSystem,
) -> Result<Vec<ModeAlignment>> {
    (0..sys.n())
        .map(|j| {
            let t_ket = theta.matvec(&sys.right_kets.column(j))?;
            let dual = sys.dual_kets.column(j);
            let ratio = vdot(&t_ket, &dual) / vdot(&t_ket, &t_ket);
            let diff: Vec<Complex64> = dual
                .iter()
                .zip(&t_ket)
                .map(|(d, t)| d - ratio * t)
                .collect();
            Ok(ModeAlignment {
                ratio,
                residual: vnorm(&diff) / vnorm(&dual).max(ABS_FLOOR),
            })
        })
        .collect()
}
