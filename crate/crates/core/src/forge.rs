//! Seeded fixtures: Dyson-dressed compatible pencils with a known metric,
//! Hermitian-definite pencils, and a canned incompatible pair.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the user seed; every
//! generated matrix draws from its own stream so that adding a draw to one
//! matrix never shifts the others.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{eig_hermitian, hermitian_pencil_eigenvalues, inverse, ComplexMatrix};
use crate::pencil::{Provenance, SturmianPencil};

const STREAM_H: u64 = 0;
const STREAM_W: u64 = 1;
const STREAM_OMEGA: u64 = 2;

const MAX_ATTEMPTS: usize = 64;

pub const DEFAULT_CONDITION_CAP: f64 = 100.0;

/// A pencil `H = Omega^-1 h Omega`, `W = Omega^-1 w Omega` together with the
/// Hermitian data and Dyson map it was built from.
#[derive(Debug, Clone)]
pub struct DressedModel {
    pub pencil: SturmianPencil,
    pub omega_true: ComplexMatrix,
    /// `Omega^H Omega`.
    pub theta_true: ComplexMatrix,
    pub h_hermitian: ComplexMatrix,
    pub w_hermitian: ComplexMatrix,
    /// Ascending eigenvalues of the `(h, w)` pencil.
    pub spectrum_true: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct DressedConfig {
    pub n: usize,
    pub seed: u64,
    pub condition_cap: f64,
    /// Dressing strength; `None` means `0.3 / sqrt(n)`.
    pub epsilon: Option<f64>,
}

impl DressedConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            condition_cap: DEFAULT_CONDITION_CAP,
            epsilon: None,
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform_complex(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re = rng.gen_range(-1.0..1.0);
        let im = rng.gen_range(-1.0..1.0);
        Complex64::new(re, im)
    })
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidShape(format!("model dimension {n} < 2")));
    }
    Ok(())
}

/// Random Hermitian `h` from stream `STREAM_H`.
fn random_hermitian(seed: u64, n: usize) -> ComplexMatrix {
    uniform_complex(&mut stream(seed, STREAM_H), n).hermitian_part()
}

/// `w = B^H B + I` with `B` shrunk so that `cond(w) <= cap`.
fn random_weight(seed: u64, n: usize, cap: f64) -> Result<ComplexMatrix> {
    let b = uniform_complex(&mut stream(seed, STREAM_W), n).scale_real(1.0 / (n as f64).sqrt());
    let mut bb = (&b.adjoint() * &b).hermitian_part();
    let top = *eig_hermitian(&bb)?.eigenvalues.last().expect("n >= 2");
    if 1.0 + top > cap {
        let shrink = ((cap - 1.0).max(0.0) / top) * (1.0 - 1e-12);
        bb = bb.scale_real(shrink);
    }
    Ok(&bb + &ComplexMatrix::identity(n))
}

/// 2-norm condition number of an invertible matrix.
fn condition(m: &ComplexMatrix) -> Result<f64> {
    let eig = eig_hermitian(&(&m.adjoint() * m).hermitian_part())?;
    let lo = eig.eigenvalues[0];
    let hi = *eig.eigenvalues.last().expect("non-empty");
    Ok(if lo <= 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    })
}

pub fn gen_dressed(n: usize, seed: u64, condition_cap: f64) -> Result<DressedModel> {
    gen_dressed_with(&DressedConfig {
        n,
        seed,
        condition_cap,
        epsilon: None,
    })
}

pub fn gen_dressed_with(cfg: &DressedConfig) -> Result<DressedModel> {
    let n = cfg.n;
    check_size(n)?;
    if !(cfg.condition_cap >= 1.0) {
        return Err(Error::InvalidShape(format!(
            "condition cap {} < 1",
            cfg.condition_cap
        )));
    }
    let h = random_hermitian(cfg.seed, n);
    let w = random_weight(cfg.seed, n, cfg.condition_cap)?;

    let eps = cfg.epsilon.unwrap_or(0.3 / (n as f64).sqrt());
    let identity = ComplexMatrix::identity(n);
    let mut omega_rng = stream(cfg.seed, STREAM_OMEGA);
    let mut omega = None;
    for _ in 0..MAX_ATTEMPTS {
        let g = uniform_complex(&mut omega_rng, n);
        let candidate = &identity + &g.scale_real(eps);
        if condition(&candidate)? <= cfg.condition_cap {
            omega = Some(candidate);
            break;
        }
    }
    let omega = omega.ok_or(Error::ConditioningFailure {
        cap: cfg.condition_cap,
        attempts: MAX_ATTEMPTS,
    })?;
    let omega_inv = inverse(&omega)?;

    let big_h = &(&omega_inv * &h) * &omega;
    let big_w = &(&omega_inv * &w) * &omega;
    let theta_true = (&omega.adjoint() * &omega).hermitian_part();
    let spectrum_true = hermitian_pencil_eigenvalues(&h, &w)?;
    let pencil = SturmianPencil::new(
        big_h,
        big_w,
        Provenance::Dressed,
        format!("dressed-n{n}-seed{}", cfg.seed),
    )?;
    Ok(DressedModel {
        pencil,
        omega_true: omega,
        theta_true,
        h_hermitian: h,
        w_hermitian: w,
        spectrum_true,
        seed: cfg.seed,
    })
}

/// Hermitian `H` and Hermitian positive definite `W` (condition <= 100).
pub fn gen_hermitian_pencil(n: usize, seed: u64) -> Result<SturmianPencil> {
    check_size(n)?;
    let h = random_hermitian(seed, n);
    let w = random_weight(seed, n, DEFAULT_CONDITION_CAP)?;
    SturmianPencil::new(
        h,
        w,
        Provenance::Hermitian,
        format!("hermitian-n{n}-seed{seed}"),
    )
}

/// `H = [[1,1],[0,2]]`, `W = [[1,1],[0,1]]`: real spectrum `{1, 2}` but no
/// common metric.
pub fn canned_incompatible() -> SturmianPencil {
    SturmianPencil::new(
        ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 2.0]]),
        ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]),
        Provenance::Canned,
        "incompatible-2x2",
    )
    .expect("2x2 literal")
}
