use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::coeffs::CoefficientVector;
use super::label::BasisLabel;
use super::{local_matrix, COEFF_EPS};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// `LOCAL_PRODUCTS[a][b][k]`: coefficient of `λ_k` (`λ_0 = I`) in `λ_a λ_b`.
fn local_products() -> &'static [[[C64; 9]; 9]; 9] {
    static TABLE: OnceLock<[[[C64; 9]; 9]; 9]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [[[C64::new(0.0, 0.0); 9]; 9]; 9];
        for a in 0..9u8 {
            for b in 0..9u8 {
                let prod = local_matrix(a) * local_matrix(b);
                out[a as usize][b as usize][0] = prod.trace() / 3.0;
                for k in 1..9u8 {
                    out[a as usize][b as usize][k as usize] = (local_matrix(k) * prod).trace() / 2.0;
                }
            }
        }
        out
    })
}

/// Expands the site-wise product `⊗_i (A_i B_i)` into the product basis and accumulates
/// `sign ·` its coefficients into `acc`.
fn accumulate_product(left: &[u8], right: &[u8], sign: f64, acc: &mut BTreeMap<Vec<u8>, C64>) {
    let table = local_products();
    let mut partial: Vec<(Vec<u8>, C64)> = vec![(Vec::with_capacity(left.len()), C64::new(sign, 0.0))];
    for (&a, &b) in left.iter().zip(right) {
        let expansion = &table[a as usize][b as usize];
        let mut next = Vec::with_capacity(partial.len() * 2);
        for (prefix, coeff) in &partial {
            for (k, &c) in expansion.iter().enumerate() {
                if c.norm() <= COEFF_EPS {
                    continue;
                }
                let mut idx = prefix.clone();
                idx.push(k as u8);
                next.push((idx, coeff * c));
            }
        }
        partial = next;
    }
    for (idx, coeff) in partial {
        *acc.entry(idx).or_insert(C64::new(0.0, 0.0)) += coeff;
    }
}

/// Coefficients `c` with `[Λ_a, Λ_b] = i · Σ c_σ Λ_σ`.
///
/// Each site product `λ_a λ_b` is expanded as `(2/3)δ_ab I + (d_abk + i f_abk) λ_k`
/// and the tensor factors are multiplied out; no dense `3^n` matrices are formed.
pub fn commutator_expand(a: &BasisLabel, b: &BasisLabel) -> Result<CoefficientVector> {
    if a.n() != b.n() {
        return Err(Error::SiteMismatch(a.n(), b.n()));
    }
    let n = a.n();
    let mut out = CoefficientVector::zero(n);
    if a == b {
        return Ok(out);
    }
    let la = a.local_indices();
    let lb = b.local_indices();
    let overlap = la.iter().zip(&lb).any(|(&x, &y)| x != 0 && y != 0);
    if !overlap {
        return Ok(out);
    }
    let mut acc = BTreeMap::new();
    accumulate_product(&la, &lb, 1.0, &mut acc);
    accumulate_product(&lb, &la, -1.0, &mut acc);
    for (idx, coeff) in acc {
        // [Λ_a, Λ_b] = i·c  ⇒  c = −i·[Λ_a, Λ_b]
        let c = coeff * C64::new(0.0, -1.0);
        debug_assert!(c.im.abs() < 1e-10, "bracket of Hermitian labels must be anti-Hermitian");
        if c.re.abs() <= COEFF_EPS {
            continue;
        }
        let label = BasisLabel::from_local_indices(&idx).expect("commutators are traceless");
        out.add_term(label, c.re)?;
    }
    Ok(out)
}

/// Bilinear extension of [`commutator_expand`]: `[A, B] = i · decode(bracket(a, b))`.
pub fn bracket(a: &CoefficientVector, b: &CoefficientVector) -> Result<CoefficientVector> {
    a.ensure_same_n(b)?;
    let mut out = CoefficientVector::zero(a.n());
    for (la, ha) in a.iter() {
        for (lb, hb) in b.iter() {
            for (label, c) in commutator_expand(la, lb)?.iter() {
                out.add_term(label.clone(), ha * hb * c)?;
            }
        }
    }
    Ok(out.filter_small())
}

impl CoefficientVector {
    fn filter_small(&self) -> Self {
        let scale = self.iter().fold(1.0f64, |acc, (_, h)| acc.max(h.abs()));
        self.map_coefficients(|_, h| if h.abs() <= COEFF_EPS * scale { 0.0 } else { h })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{basis_table, build_operator, decode, enumerate_basis};
    use crate::linalg::{commutator, max_abs};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn label(n: usize, f: &[(u8, u8)]) -> BasisLabel {
        BasisLabel::new(n, f).unwrap()
    }

    #[test]
    fn lambda1_lambda2_gives_two_lambda3() {
        let c = commutator_expand(&label(1, &[(1, 1)]), &label(1, &[(1, 2)])).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.get(&label(1, &[(1, 3)])) - 2.0).abs() < 1e-14);
        // Oracle: direct 3×3 product.
        let a = build_operator(&label(1, &[(1, 1)])).unwrap();
        let b = build_operator(&label(1, &[(1, 2)])).unwrap();
        let l3 = build_operator(&label(1, &[(1, 3)])).unwrap();
        let expected = l3 * C64::new(0.0, 2.0);
        assert!(max_abs(&(commutator(&a, &b) - expected)) < 1e-14);
    }

    #[test]
    fn disjoint_and_self_commute() {
        assert!(commutator_expand(&label(2, &[(1, 1)]), &label(2, &[(2, 1)])).unwrap().is_empty());
        let l = label(3, &[(1, 4), (3, 8)]);
        assert!(commutator_expand(&l, &l).unwrap().is_empty());
        assert!(commutator_expand(&label(2, &[(1, 1)]), &label(3, &[(1, 1)])).is_err());
    }

    /// Every label pair at n = 2 against the dense commutator.
    #[test]
    fn matches_dense_commutator_n2() {
        let labels = enumerate_basis(2, None).unwrap();
        let ops: Vec<_> = labels.iter().map(|l| build_operator(l).unwrap()).collect();
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                let c = commutator_expand(a, b).unwrap();
                let dense = commutator(&ops[i], &ops[j]);
                let got = decode(&c).unwrap() * C64::new(0.0, 1.0);
                assert!(max_abs(&(got - dense)) < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn matches_dense_commutator_sampled_n3() {
        let table = basis_table(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let a = &table.labels()[rng.random_range(0..table.len())];
            let b = &table.labels()[rng.random_range(0..table.len())];
            let c = commutator_expand(a, b).unwrap();
            let dense = commutator(&build_operator(a).unwrap(), &build_operator(b).unwrap());
            let got = decode(&c).unwrap() * C64::new(0.0, 1.0);
            assert!(max_abs(&(got - dense)) < 1e-12);
        }
    }

    #[test]
    fn antisymmetry() {
        let labels = enumerate_basis(2, None).unwrap();
        for a in &labels {
            for b in &labels {
                let ab = commutator_expand(a, b).unwrap();
                let ba = commutator_expand(b, a).unwrap();
                assert!(ab.add(&ba).unwrap().iter().all(|(_, h)| h.abs() < 1e-14));
            }
        }
    }

    #[test]
    fn jacobi_identity_random_triples() {
        let labels = enumerate_basis(2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pick = |rng: &mut ChaCha8Rng| CoefficientVector::single(labels[rng.random_range(0..labels.len())].clone(), 1.0);
        for _ in 0..200 {
            let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let t1 = bracket(&x, &bracket(&y, &z).unwrap()).unwrap();
            let t2 = bracket(&y, &bracket(&z, &x).unwrap()).unwrap();
            let t3 = bracket(&z, &bracket(&x, &y).unwrap()).unwrap();
            let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
            assert!(sum.iter().all(|(_, h)| h.abs() <= 1e-10));
        }
    }
}
