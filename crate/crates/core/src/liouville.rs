//! Liouville change of variables and finite-difference Sturm-Liouville
//! problems.
//!
//! Substituting `r = g(x)` and `psi1(g(x)) = g'(x)^(1/2) psi2(x)` turns
//! `-psi1'' + V1 psi1 = E psi1` into `-psi2'' + V2 psi2 = E W psi2` with
//! `W = g'^2` and `V2 = g'^2 V1(g) + (3/4)(g''/g')^2 - (1/2) g'''/g'`.
//! Both sides are discretized with the three-point stencil and Dirichlet
//! ends; spectra come from Sturm-sequence bisection on the tridiagonal
//! pencil, so grids of several thousand points stay cheap.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ABS_FLOOR};
use crate::pencil::{Provenance, SturmianPencil};

/// Largest interior size [`DiscretizedProblem::to_pencil`] will densify.
pub const DENSE_LIMIT: usize = 400;

/// Uniform grid `x_0 < ... < x_{N+1}`; the `N` interior points are the unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub a: f64,
    pub b: f64,
    pub interior: usize,
}

impl UniformGrid {
    pub fn new(a: f64, b: f64, interior: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidShape(format!(
                "interval ({a}, {b}) is not a finite increasing pair"
            )));
        }
        if interior < 3 {
            return Err(Error::GridTooSmall { points: interior });
        }
        Ok(Self { a, b, interior })
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.interior + 1) as f64
    }

    /// `x_i` for `i = 0..=N+1`; the last point is `b` exactly.
    pub fn point(&self, i: usize) -> f64 {
        if i == self.interior + 1 {
            self.b
        } else {
            self.a + i as f64 * self.spacing()
        }
    }

    /// All `N + 2` points including both ends.
    pub fn points(&self) -> Vec<f64> {
        (0..self.interior + 2).map(|i| self.point(i)).collect()
    }

    /// Same interval with the spacing halved (`N -> 2N + 1`).
    pub fn refined(&self) -> Self {
        Self {
            interior: 2 * self.interior + 1,
            ..*self
        }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().into_iter().map(f).collect()
    }
}

/// Built-in monotone substitutions `r = g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedMap {
    Identity,
    Exp,
    /// `g(x) = x + x^3 / 3`.
    Cubic,
}

impl NamedMap {
    pub fn as_str(&self) -> &'static str {
        match self {
            NamedMap::Identity => "identity",
            NamedMap::Exp => "exp",
            NamedMap::Cubic => "cubic",
        }
    }

    /// `(g, g', g'', g''')` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        match self {
            NamedMap::Identity => [x, 1.0, 0.0, 0.0],
            NamedMap::Exp => {
                let e = x.exp();
                [e, e, e, e]
            }
            NamedMap::Cubic => [x + x * x * x / 3.0, 1.0 + x * x, 2.0 * x, 2.0],
        }
    }

    /// `g^-1(r)`, or `None` when `r` is outside the range of `g`.
    pub fn inverse(&self, r: f64) -> Option<f64> {
        match self {
            NamedMap::Identity => Some(r),
            NamedMap::Exp => (r > 0.0).then(|| r.ln()),
            NamedMap::Cubic => {
                // x^3 + 3x - 3r = 0 has one real root; Cardano, then Newton polish
                let q = 1.5 * r;
                let s = (q * q + 1.0).sqrt();
                let mut x = (q + s).cbrt() + (q - s).cbrt();
                for _ in 0..8 {
                    let [g, g1, _, _] = self.derivatives(x);
                    x -= (g - r) / g1;
                }
                Some(x)
            }
        }
    }

    /// Preimage of the `r` interval under the map.
    pub fn preimage(&self, r_domain: (f64, f64)) -> Result<(f64, f64)> {
        match (self.inverse(r_domain.0), self.inverse(r_domain.1)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidShape(format!(
                "domain ({}, {}) is outside the range of the {} map",
                r_domain.0,
                r_domain.1,
                self.as_str()
            ))),
        }
    }
}

impl FromStr for NamedMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(NamedMap::Identity),
            "exp" => Ok(NamedMap::Exp),
            "cubic" => Ok(NamedMap::Cubic),
            other => Err(Error::InvalidShape(format!("unknown map '{other}'"))),
        }
    }
}

impl fmt::Display for NamedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Built-in potentials `V1(r)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `V(r) = r^2`.
    Harmonic,
    /// `c0 + c1 r + c2 r^2 + ...`.
    Polynomial(Vec<f64>),
}

impl Potential {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic => r * r,
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * r + ci),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Potential::Zero => "zero".into(),
            Potential::Harmonic => "harmonic".into(),
            Potential::Polynomial(c) => {
                let coeffs: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                format!("poly:{}", coeffs.join(","))
            }
        }
    }
}

impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Potential::Zero),
            "harmonic" => Ok(Potential::Harmonic),
            _ => {
                let body = s
                    .strip_prefix("poly:")
                    .ok_or_else(|| Error::InvalidShape(format!("unknown potential '{s}'")))?;
                let coeffs = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| {
                        Error::InvalidShape(format!("bad polynomial coefficients '{body}': {e}"))
                    })?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidShape(format!(
                        "bad polynomial coefficients '{body}'"
                    )));
                }
                Ok(Potential::Polynomial(coeffs))
            }
        }
    }
}

/// Samples of `r = g(x)` and its first three derivatives on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleMap {
    pub grid: UniformGrid,
    pub g: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
}

impl LiouvilleMap {
    pub fn from_samples(
        grid: UniformGrid,
        g: Vec<f64>,
        g1: Vec<f64>,
        g2: Vec<f64>,
        g3: Vec<f64>,
    ) -> Result<Self> {
        let len = grid.interior + 2;
        for v in [&g, &g1, &g2, &g3] {
            if v.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: format!("{len} map samples"),
                    found: format!("{}", v.len()),
                });
            }
            if let Some(i) = v.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
        }
        Ok(Self {
            grid,
            g,
            g1,
            g2,
            g3,
        })
    }

    pub fn named(map: NamedMap, grid: UniformGrid) -> Self {
        let d: Vec<[f64; 4]> = grid
            .points()
            .into_iter()
            .map(|x| map.derivatives(x))
            .collect();
        Self {
            grid,
            g: d.iter().map(|v| v[0]).collect(),
            g1: d.iter().map(|v| v[1]).collect(),
            g2: d.iter().map(|v| v[2]).collect(),
            g3: d.iter().map(|v| v[3]).collect(),
        }
    }
}

/// `(V2, W)` on the map's grid.
pub fn transform_potential(
    v1: impl Fn(f64) -> f64,
    map: &LiouvilleMap,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some((index, &value)) = map.g1.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::NonMonotoneMap { index, value });
    }
    let mut v2 = Vec::with_capacity(map.g.len());
    let mut w = Vec::with_capacity(map.g.len());
    for i in 0..map.g.len() {
        let g1 = map.g1[i];
        let ratio2 = map.g2[i] / g1;
        let weight = g1 * g1;
        v2.push(weight * v1(map.g[i]) + 0.75 * ratio2 * ratio2 - 0.5 * map.g3[i] / g1);
        w.push(weight);
    }
    Ok((v2, w))
}

/// `H = -d^2/dx^2 + V` and diagonal `W` on the interior points, Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedProblem {
    pub grid: UniformGrid,
    /// `2/h^2 + V(x_i)`.
    pub diag: Vec<f64>,
    /// The constant off-diagonal `-1/h^2`.
    pub offdiag: f64,
    pub weight: Vec<f64>,
    pub meta: String,
}

fn check_samples(grid: &UniformGrid, v: &[f64], what: &str) -> Result<()> {
    if v.len() != grid.interior + 2 {
        return Err(Error::DimensionMismatch {
            expected: format!("{} {what} samples (grid including ends)", grid.interior + 2),
            found: format!("{}", v.len()),
        });
    }
    if let Some(i) = v.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(())
}

/// `V` is sampled on all `N + 2` grid points; the end values are unused.
pub fn discretize_schrodinger(
    v: &[f64],
    grid: UniformGrid,
    meta: impl Into<String>,
) -> Result<DiscretizedProblem> {
    discretize_sturmian(v, &vec![1.0; v.len()], grid, meta)
}

pub fn discretize_sturmian(
    v2: &[f64],
    w: &[f64],
    grid: UniformGrid,
    meta: impl Into<String>,
) -> Result<DiscretizedProblem> {
    if grid.interior < 3 {
        return Err(Error::GridTooSmall {
            points: grid.interior,
        });
    }
    check_samples(&grid, v2, "potential")?;
    check_samples(&grid, w, "weight")?;
    let inner = 1..=grid.interior;
    if let Some(i) = inner.clone().find(|&i| !(w[i] > 0.0)) {
        return Err(Error::NonpositiveWeight {
            index: i,
            value: w[i],
        });
    }
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    Ok(DiscretizedProblem {
        grid,
        diag: inner.clone().map(|i| 2.0 * inv_h2 + v2[i]).collect(),
        offdiag: -inv_h2,
        weight: inner.map(|i| w[i]).collect(),
        meta: meta.into(),
    })
}

impl DiscretizedProblem {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        let n = self.n();
        let mut h = ComplexMatrix::from_real_diag(&self.diag);
        for i in 0..n - 1 {
            h[(i, i + 1)].re = self.offdiag;
            h[(i + 1, i)].re = self.offdiag;
        }
        h
    }

    pub fn weight_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&self.weight)
    }

    /// Dense pencil for the dense solvers; refuses grids above [`DENSE_LIMIT`].
    pub fn to_pencil(&self, label: impl Into<String>) -> Result<SturmianPencil> {
        if self.n() > DENSE_LIMIT {
            return Err(Error::InvalidShape(format!(
                "{} interior points exceed the dense limit {DENSE_LIMIT}",
                self.n()
            )));
        }
        SturmianPencil::new(
            self.hamiltonian(),
            self.weight_matrix(),
            Provenance::Liouville,
            label,
        )
    }

    /// Number of eigenvalues of `(H, W)` below `sigma`, from the inertia of
    /// the LDL^T factorization of `H - sigma W`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let e2 = self.offdiag * self.offdiag;
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.n() {
            let shifted = self.diag[i] - sigma * self.weight[i];
            d = if i == 0 { shifted } else { shifted - e2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (shifted.abs() + e2.sqrt()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin bounds on the spectrum of `W^-1/2 H W^-1/2`.
    fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.n();
        let e = self.offdiag.abs();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += e / (self.weight[i] * self.weight[i - 1]).sqrt();
            }
            if i + 1 < n {
                radius += e / (self.weight[i] * self.weight[i + 1]).sqrt();
            }
            let centre = self.diag[i] / self.weight[i];
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        (lo, hi)
    }

    /// The `k` lowest eigenvalues in ascending order, bisected to full precision.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("at most {} eigenvalues", self.n()),
                found: format!("{k}"),
            });
        }
        let (lo0, hi0) = self.spectral_bounds();
        let pad = ABS_FLOOR.max(1e-12 * (lo0.abs() + hi0.abs()));
        let (lo0, hi0) = (lo0 - pad, hi0 + pad);
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let mut lo = out.last().copied().unwrap_or(lo0).min(hi0);
            let mut hi = hi0;
            // invariant: count_below(lo) <= j < count_below(hi)
            if self.count_below(lo) > j {
                lo = lo0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsospectralComparison {
    pub original: Vec<f64>,
    pub transformed: Vec<f64>,
    /// `|transformed - original| / |original|` per mode.
    pub relative_differences: Vec<f64>,
    pub max_relative_difference: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn isospectral_check(
    p1: &DiscretizedProblem,
    p2: &DiscretizedProblem,
    k: usize,
    tol: f64,
) -> Result<IsospectralComparison> {
    if k == 0 || k > p1.n().min(p2.n()) {
        return Err(Error::DimensionMismatch {
            expected: format!("1..={} modes", p1.n().min(p2.n())),
            found: format!("{k}"),
        });
    }
    let original = p1.lowest_eigenvalues(k)?;
    let transformed = p2.lowest_eigenvalues(k)?;
    let relative_differences: Vec<f64> = original
        .iter()
        .zip(&transformed)
        .map(|(a, b)| (b - a).abs() / a.abs().max(ABS_FLOOR))
        .collect();
    let max_relative_difference = relative_differences.iter().copied().fold(0.0, f64::max);
    Ok(IsospectralComparison {
        original,
        transformed,
        relative_differences,
        max_relative_difference,
        tol,
        passed: max_relative_difference <= tol,
    })
}

/// A Schrodinger problem on an `r` interval and its Liouville image.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleSetup {
    pub potential: Potential,
    pub map: NamedMap,
    pub r_domain: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct LiouvillePair {
    pub original: DiscretizedProblem,
    pub transformed: DiscretizedProblem,
}

impl LiouvilleSetup {
    /// Both problems with `n` interior points each, the `x` grid spanning
    /// the preimage of the `r` interval.
    pub fn discretize(&self, n: usize) -> Result<LiouvillePair> {
        let r_grid = UniformGrid::new(self.r_domain.0, self.r_domain.1, n)?;
        let (xa, xb) = self.map.preimage(self.r_domain)?;
        let x_grid = UniformGrid::new(xa, xb, n)?;
        let v1 = r_grid.sample(|r| self.potential.eval(r));
        let original = discretize_schrodinger(&v1, r_grid, self.potential.describe())?;
        let map = LiouvilleMap::named(self.map, x_grid);
        let (v2, w) = transform_potential(|r| self.potential.eval(r), &map)?;
        let transformed = discretize_sturmian(
            &v2,
            &w,
            x_grid,
            format!("{} under {} map", self.potential.describe(), self.map),
        )?;
        Ok(LiouvillePair {
            original,
            transformed,
        })
    }
}

/// Disagreements at `N` and `2N + 1` and their ratios per mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementStudy {
    pub coarse_points: usize,
    pub fine_points: usize,
    pub coarse: IsospectralComparison,
    pub fine: IsospectralComparison,
    /// `coarse / fine` per mode; `None` where both agree to rounding.
    pub ratios: Vec<Option<f64>>,
}

impl RefinementStudy {
    /// Every mode converges by at least `factor`, or already agrees exactly.
    pub fn converges_by(&self, factor: f64) -> bool {
        self.ratios.iter().all(|r| r.is_none_or(|r| r >= factor))
    }
}

pub fn refinement_study(
    setup: &LiouvilleSetup,
    n: usize,
    k: usize,
    tol: f64,
) -> Result<RefinementStudy> {
    let coarse_pair = setup.discretize(n)?;
    let coarse = isospectral_check(&coarse_pair.original, &coarse_pair.transformed, k, tol)?;
    let fine_n = 2 * n + 1;
    let fine_pair = setup.discretize(fine_n)?;
    let fine = isospectral_check(&fine_pair.original, &fine_pair.transformed, k, tol)?;
    let ratios = coarse
        .relative_differences
        .iter()
        .zip(&fine.relative_differences)
        .map(|(&c, &f)| {
            if c <= 1e-13 && f <= 1e-13 {
                None
            } else {
                Some(c / f)
            }
        })
        .collect();
    Ok(RefinementStudy {
        coarse_points: n,
        fine_points: fine_n,
        coarse,
        fine,
        ratios,
    })
}
