//! Seeded random instance families used by tests, campaigns and the CLI.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::{enumerate_basis, BasisLabel, CoefficientVector};
use crate::error::{Error, Result};
use crate::geodesic::StqInitialData;
use crate::linalg::{Operator, C64};
use crate::metric::{cost_f, BodySplit, PenaltyWeights, Schedule, Segment};

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Independent standard normal coefficient on every label.
pub fn gaussian_on(rng: &mut impl Rng, n: usize, labels: &[BasisLabel]) -> CoefficientVector {
    let mut out = CoefficientVector::zero(n);
    for label in labels {
        out.add_term(label.clone(), normal(rng)).expect("labels share n");
    }
    out
}

/// Gaussian vector on labels of body weight `≤ max_body` (all labels when `None`),
/// scaled to unit Euclidean coefficient norm.
pub fn unit_coefficients(rng: &mut impl Rng, n: usize, max_body: Option<usize>) -> Result<CoefficientVector> {
    let labels = enumerate_basis(n, max_body)?;
    let c = gaussian_on(rng, n, &labels);
    Ok(c.scale(1.0 / c.norm()))
}

/// Gaussian vector scaled to `F(H) = 1`.
pub fn normalized_hamiltonian(
    rng: &mut impl Rng,
    n: usize,
    max_body: Option<usize>,
    w: &PenaltyWeights,
) -> Result<CoefficientVector> {
    let labels = enumerate_basis(n, max_body)?;
    let c = gaussian_on(rng, n, &labels);
    Ok(c.scale(1.0 / cost_f(&c, w)))
}

/// Piecewise-constant schedule of `segments` pieces of width `dt`, each with `F(H) = 1`.
pub fn normalized_schedule(
    rng: &mut impl Rng,
    n: usize,
    segments: usize,
    dt: f64,
    max_body: Option<usize>,
    w: &PenaltyWeights,
) -> Result<Schedule> {
    let segs = (0..segments)
        .map(|_| normalized_hamiltonian(rng, n, max_body, w).map(|h| Segment { dt, h }))
        .collect::<Result<Vec<_>>>()?;
    Schedule::new(n, segs)
}

/// Three-qutrit momentum data: standard normal coefficients on every one-, two- and
/// three-body label, with `L₀ = S₀ + T₀ + Q₀` scaled to unit coefficient norm.
///
/// The scaling does not depend on `w`, so the same seed gives the same data for every `p`.
pub fn random_stq(rng: &mut impl Rng, w: &PenaltyWeights) -> Result<StqInitialData> {
    let l0 = unit_coefficients(rng, 3, None)?;
    StqInitialData::from_split(&BodySplit { s: l0.body_part(1), t: l0.body_part(2), q: l0.body_part(3) }, w)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with phase correction.
pub fn haar_unitary(rng: &mut impl Rng, dim: usize) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let g = Operator::from_fn(dim, dim, |_, _| Complex::new(normal(rng), normal(rng)) * (0.5f64).sqrt());
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Random Hermitian matrix with standard normal entries (GUE up to scale).
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> Operator {
    let g = Operator::from_fn(dim, dim, |_, _| Complex::new(normal(rng), normal(rng)));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}
