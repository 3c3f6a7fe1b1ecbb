//! Gell-Mann tensor-product basis of `su(3^n)`.
//!
//! Basis elements are products of *unscaled* Gell-Mann matrices on distinct sites. Under
//! the trace pairing they are orthogonal with `tr(Λ_a Λ_b) = 2^s · 3^{n−s} · δ_ab` for an
//! `s`-body label, and coefficients are extracted with that per-label normalization so the
//! coefficient map is an exact coordinate system on Hermitian traceless operators.

mod bracket;
mod closure;
mod coeffs;
mod label;
mod table;

use std::sync::OnceLock;

use nalgebra::Matrix3;

pub use bracket::{bracket, commutator_expand};
pub use closure::{verify_bracket_closure, ClosureReport};
pub use coeffs::{CoefficientVector, TermJson};
pub use label::{enumerate_basis, one_two_body_count, BasisLabel, GellMannIndex, MAX_LABEL_SITES};
pub use table::{basis_table, decode, encode, BasisTable, MAX_DENSE_SITES};

use crate::error::Result;
use crate::linalg::{Operator, C64};

/// Coefficients with magnitude at or below this are treated as exact zeros after
/// extraction from a dense operator or a bracket expansion.
pub const COEFF_EPS: f64 = 1e-14;

/// Identity (`k = 0`) or the Gell-Mann matrix `λ_k`.
pub(crate) fn local_matrix(k: u8) -> &'static Matrix3<C64> {
    static TABLE: OnceLock<[Matrix3<C64>; 9]> = OnceLock::new();
    &TABLE.get_or_init(|| {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let r3 = C64::new(1.0 / 3f64.sqrt(), 0.0);
        [
            Matrix3::identity(),
            Matrix3::new(z, o, z, o, z, z, z, z, z),
            Matrix3::new(z, -i, z, i, z, z, z, z, z),
            Matrix3::new(o, z, z, z, -o, z, z, z, z),
            Matrix3::new(z, z, o, z, z, z, o, z, z),
            Matrix3::new(z, z, -i, z, z, z, i, z, z),
            Matrix3::new(z, z, z, z, z, o, z, o, z),
            Matrix3::new(z, z, z, z, z, -i, z, i, z),
            Matrix3::new(r3, z, z, z, r3, z, z, z, -r3 * 2.0),
        ]
    })[k as usize]
}

/// The 3×3 Gell-Mann matrix `λ_k`.
pub fn gell_mann(k: GellMannIndex) -> Operator {
    let m = local_matrix(k.get());
    Operator::from_fn(3, 3, |i, j| m[(i, j)])
}

/// Dense `3^n × 3^n` operator of a label: `λ_k` on listed sites, identity elsewhere.
pub fn build_operator(label: &BasisLabel) -> Result<Operator> {
    table::ensure_dense_sites(label.n())?;
    let local = label.local_indices();
    let mut out = Operator::identity(1, 1);
    for &k in &local {
        out = out.kronecker(&gell_mann_or_identity(k));
    }
    Ok(out)
}

fn gell_mann_or_identity(k: u8) -> Operator {
    let m = local_matrix(k);
    Operator::from_fn(3, 3, |i, j| m[(i, j)])
}
