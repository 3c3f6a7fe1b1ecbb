use std::collections::HashMap;
use std::sync::OnceLock;

use super::coeffs::CoefficientVector;
use super::label::{enumerate_basis, BasisLabel};
use super::{local_matrix, COEFF_EPS};
use crate::error::{Error, Result};
use crate::linalg::{ensure_hermitian, max_abs, Operator, C64};

/// Largest site count for which dense operators are built (`3⁴ = 81`).
pub const MAX_DENSE_SITES: usize = 4;

pub(crate) fn ensure_dense_sites(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_SITES {
        return Err(Error::InvalidParameter(format!(
            "dense operators are supported for 1 <= n <= {MAX_DENSE_SITES}, got {n}"
        )));
    }
    Ok(())
}

/// Nonzero entries `(row, col, value)` of a basis operator.
type SparseEntries = Vec<(u32, u32, C64)>;

/// Per-`n` lookup table: canonical labels with the sparse matrix entries of each
/// basis operator, used for fast coefficient extraction and reconstruction.
#[derive(Debug)]
pub struct BasisTable {
    n: usize,
    dim: usize,
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
    entries: Vec<SparseEntries>,
    norm_sq: Vec<f64>,
}

impl BasisTable {
    fn build(n: usize) -> Self {
        let labels = enumerate_basis(n, None).expect("n validated by caller");
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let entries = labels.iter().map(|l| sparse_entries(&l.local_indices())).collect();
        let norm_sq = labels.iter().map(BasisLabel::trace_norm_sq).collect();
        Self {
            n,
            dim: 3usize.pow(n as u32),
            labels,
            index,
            entries,
            norm_sq,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension `3^n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements, `9^n − 1`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// `tr(Λ_i Λ_i)`.
    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norm_sq[i]
    }

    /// Dense coefficient array in canonical order.
    pub fn to_array(&self, c: &CoefficientVector) -> Result<Vec<f64>> {
        if c.n() != self.n {
            return Err(Error::SiteMismatch(self.n, c.n()));
        }
        let mut out = vec![0.0; self.len()];
        for (label, h) in c.iter() {
            out[self.index[label]] = h;
        }
        Ok(out)
    }

    pub fn from_array(&self, values: &[f64]) -> CoefficientVector {
        let mut out = CoefficientVector::zero(self.n);
        for (label, &h) in self.labels.iter().zip(values) {
            if h.abs() > COEFF_EPS {
                out.add_term(label.clone(), h).expect("table labels share n");
            }
        }
        out
    }

    /// `Σ_i values[i] Λ_i` as a dense operator.
    pub fn decode_array(&self, values: &[f64]) -> Operator {
        let mut out = Operator::zeros(self.dim, self.dim);
        for (entries, &h) in self.entries.iter().zip(values) {
            if h == 0.0 {
                continue;
            }
            for &(r, c, v) in entries {
                out[(r as usize, c as usize)] += v * h;
            }
        }
        out
    }

    /// Coefficients `tr(Λ_i H) / tr(Λ_i Λ_i)` without validation.
    pub fn encode_array(&self, h: &Operator) -> Vec<f64> {
        self.entries
            .iter()
            .zip(&self.norm_sq)
            .map(|(entries, &norm)| {
                let tr: C64 = entries
                    .iter()
                    .map(|&(r, c, v)| v * h[(c as usize, r as usize)])
                    .sum();
                tr.re / norm
            })
            .collect()
    }
}

fn sparse_entries(local: &[u8]) -> SparseEntries {
    let mut entries: SparseEntries = vec![(0, 0, C64::new(1.0, 0.0))];
    for &k in local {
        let m = local_matrix(k);
        let factor: Vec<(u32, u32, C64)> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)].norm() > 0.0)
            .map(|(i, j)| (i as u32, j as u32, m[(i, j)]))
            .collect();
        entries = entries
            .iter()
            .flat_map(|&(r, c, v)| factor.iter().map(move |&(i, j, w)| (3 * r + i, 3 * c + j, v * w)))
            .collect();
    }
    entries
}

/// Shared, lazily built table for `1 ≤ n ≤ 4`.
pub fn basis_table(n: usize) -> Result<&'static BasisTable> {
    static TABLES: [OnceLock<BasisTable>; MAX_DENSE_SITES] = [const { OnceLock::new() }; MAX_DENSE_SITES];
    ensure_dense_sites(n)?;
    Ok(TABLES[n - 1].get_or_init(|| BasisTable::build(n)))
}

fn site_count_for_dim(dim: usize) -> Option<usize> {
    (1..=MAX_DENSE_SITES).find(|&n| 3usize.pow(n as u32) == dim)
}

/// Coefficient vector of a Hermitian traceless `3^n × 3^n` operator.
pub fn encode(h: &Operator, n: usize) -> Result<CoefficientVector> {
    let table = basis_table(n)?;
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare(h.nrows(), h.ncols()));
    }
    if site_count_for_dim(h.nrows()).is_none() {
        return Err(Error::NotQutritDimension(h.nrows()));
    }
    if h.nrows() != table.dim() {
        return Err(Error::DimensionMismatch(h.nrows(), table.dim()));
    }
    ensure_hermitian(h)?;
    let trace = h.diagonal().sum().norm();
    if trace > crate::linalg::HERMITIAN_TOL * max_abs(h).max(1.0) * table.dim() as f64 {
        return Err(Error::NotTraceless(trace));
    }
    Ok(table.from_array(&table.encode_array(h)))
}

/// Dense operator `Σ h_σ Λ_σ`.
pub fn decode(c: &CoefficientVector) -> Result<Operator> {
    let table = basis_table(c.n())?;
    Ok(table.decode_array(&table.to_array(c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_operator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian_traceless(dim: usize, rng: &mut ChaCha8Rng) -> Operator {
        let mut m = Operator::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let shift = m.diagonal().sum() / C64::new(dim as f64, 0.0);
        for i in 0..dim {
            m[(i, i)] -= shift;
        }
        m
    }

    #[test]
    fn sparse_entries_match_kronecker() {
        let table = basis_table(2).unwrap();
        for (i, label) in table.labels().iter().enumerate() {
            let dense = build_operator(label).unwrap();
            let mut one_hot = vec![0.0; table.len()];
            one_hot[i] = 1.0;
            assert_eq!(table.decode_array(&one_hot), dense);
        }
    }

    #[test]
    fn trace_orthogonality_exhaustive_small_n() {
        for n in 1..=2 {
            let table = basis_table(n).unwrap();
            let ops: Vec<Operator> = table.labels().iter().map(|l| build_operator(l).unwrap()).collect();
            for (a, la) in table.labels().iter().enumerate() {
                for (b, _) in table.labels().iter().enumerate() {
                    let tr = (&ops[a] * &ops[b]).diagonal().sum();
                    let want = if a == b { la.trace_norm_sq() } else { 0.0 };
                    assert!((tr - C64::new(want, 0.0)).norm() < 1e-12, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn trace_orthogonality_sampled_n3() {
        let table = basis_table(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let a = rng.random_range(0..table.len());
            let b = rng.random_range(0..table.len());
            let la = &table.labels()[a];
            let tr = (build_operator(la).unwrap() * build_operator(&table.labels()[b]).unwrap())
                .diagonal()
                .sum();
            let want = if a == b { la.trace_norm_sq() } else { 0.0 };
            assert!((tr - C64::new(want, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn basis_element_round_trip() {
        let label = BasisLabel::new(2, &[(1, 1)]).unwrap();
        let c = encode(&build_operator(&label).unwrap(), 2).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.get(&label) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_operator_encodes_empty() {
        assert!(encode(&Operator::zeros(9, 9), 2).unwrap().is_empty());
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3 {
            let dim = 3usize.pow(n as u32);
            for _ in 0..100 {
                let h = random_hermitian_traceless(dim, &mut rng);
                let c = encode(&h, n).unwrap();
                let back = decode(&c).unwrap();
                assert!(max_abs(&(back - &h)) < 1e-12);
                let again = encode(&decode(&c).unwrap(), n).unwrap();
                assert!(again.max_abs_diff(&c).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn encode_validation_errors() {
        let mut m = Operator::zeros(9, 9);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(encode(&m, 2), Err(Error::NotHermitian(_))));
        let id = Operator::identity(9, 9);
        assert!(matches!(encode(&id, 2), Err(Error::NotTraceless(_))));
        assert!(matches!(encode(&Operator::zeros(4, 4), 2), Err(Error::NotQutritDimension(4))));
        assert!(matches!(encode(&Operator::zeros(27, 27), 2), Err(Error::DimensionMismatch(27, 9))));
    }
}
