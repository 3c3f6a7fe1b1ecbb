//! Dense complex matrix kernel.
//!
//! Operators are `nalgebra::DMatrix<Complex64>`; all dimensions in this crate are at most
//! `3⁴ = 81`, so dense `O(dim³)` algorithms are used throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A dense `dim × dim` complex operator.
pub type Operator = DMatrix<C64>;

/// Absolute tolerance (scaled by the largest entry) for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on `max |U†U − I|` for accepting an operator as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn ensure_square(m: &Operator) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

/// `max |M − M†|` entrywise.
pub fn hermiticity_defect(m: &Operator) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &Operator) -> Result<()> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// `max |U†U − I|` entrywise.
pub fn unitarity_defect(u: &Operator) -> f64 {
    let gram = u.adjoint() * u;
    let dim = u.nrows();
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn ensure_unitary(u: &Operator) -> Result<()> {
    ensure_square(u)?;
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Operator norm `max_{‖x‖=1} ‖Mx‖`, the largest singular value.
pub fn spectral_norm(m: &Operator) -> Result<f64> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().max())
}

/// Largest eigenvalue of the Hermitian part of `e^{iθ} M`.
fn rotated_hermitian_top(m: &Operator, theta: f64) -> f64 {
    let phase = C64::from_polar(1.0, theta);
    let rotated = m * phase;
    let herm = (&rotated + rotated.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().max()
}

const EXPECTATION_SAMPLES: usize = 64;
const EXPECTATION_TOL: f64 = 1e-8;

/// Numerical-range radius `max_{‖ψ‖=1} |⟨ψ|M|ψ⟩|`.
///
/// Computed as `max_θ λ_max(Re(e^{iθ}M))`: the function is sampled at 64 angles and the
/// three best samples are refined by golden-section search.
pub fn expectation_norm(m: &Operator) -> Result<f64> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let step = std::f64::consts::TAU / EXPECTATION_SAMPLES as f64;
    let mut samples: Vec<(f64, f64)> = (0..EXPECTATION_SAMPLES)
        .map(|j| {
            let theta = j as f64 * step;
            (theta, rotated_hermitian_top(m, theta))
        })
        .collect();
    samples.sort_by(|a, b| b.1.total_cmp(&a.1));
    let f = |theta: f64| rotated_hermitian_top(m, theta);
    let best = samples
        .iter()
        .take(3)
        .map(|&(theta, value)| golden_max(&f, theta - step, theta + step).max(value))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.max(0.0))
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > EXPECTATION_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// `exp(−iHt)` for Hermitian `H`, via the Hermitian eigendecomposition.
pub fn hermitian_expm(h: &Operator, t: f64) -> Result<Operator> {
    ensure_hermitian(h)?;
    let dim = h.nrows();
    if t == 0.0 || h.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(identity(dim));
    }
    let eig = h.clone().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let mut scaled = vecs.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = (-I * lambda * t).exp();
        for i in 0..dim {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Both sides of `‖A^N − B^N‖ ≤ N‖A − B‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGap {
    pub lhs: f64,
    pub rhs: f64,
}

impl PowerGap {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

pub fn unitary_power_gap(a: &Operator, b: &Operator, power: u32) -> Result<PowerGap> {
    if power == 0 {
        return Err(Error::InvalidParameter("power must be positive".into()));
    }
    ensure_unitary(a)?;
    ensure_unitary(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(a.nrows(), b.nrows()));
    }
    let mut a_pow = a.clone();
    let mut b_pow = b.clone();
    for _ in 1..power {
        a_pow = &a_pow * a;
        b_pow = &b_pow * b;
    }
    Ok(PowerGap {
        lhs: spectral_norm(&(a_pow - b_pow))?,
        rhs: power as f64 * spectral_norm(&(a - b))?,
    })
}

/// Row-major JSON form `{"dim": d, "re": [[..]], "im": [[..]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseOperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Operator> for DenseOperatorJson {
    fn from(m: &Operator) -> Self {
        let rows = |part: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<DenseOperatorJson> for Operator {
    type Error = Error;

    fn try_from(raw: DenseOperatorJson) -> Result<Self> {
        let dim = raw.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
        if !shape_ok(&raw.re) || !shape_ok(&raw.im) {
            return Err(Error::Schema {
                pointer: "/re".into(),
                message: format!("expected {dim}x{dim} real and imaginary parts"),
            });
        }
        Ok(Operator::from_fn(dim, dim, |i, j| C64::new(raw.re[i][j], raw.im[i][j])))
    }
}
