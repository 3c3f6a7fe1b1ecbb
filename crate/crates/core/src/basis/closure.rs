use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bracket::commutator_expand;
use super::coeffs::CoefficientVector;
use super::label::{enumerate_basis, BasisLabel};
use crate::error::Result;

/// Pivot threshold for deciding that a reduced bracket adds a new direction.
pub const CLOSURE_PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub n: usize,
    pub generator_max_body: usize,
    pub generator_count: usize,
    pub achieved_rank: usize,
    pub target_rank: usize,
    pub depth_used: usize,
}

impl ClosureReport {
    pub fn spans(&self) -> bool {
        self.achieved_rank == self.target_rank
    }
}

/// Incrementally maintained reduced row-echelon basis over coefficient space.
struct EchelonSpan {
    dim: usize,
    rows: Vec<Vec<f64>>,
    pivot_row: Vec<Option<usize>>,
}

impl EchelonSpan {
    fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), pivot_row: vec![None; dim] }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the span and appends it if a pivot above tolerance remains.
    fn insert(&mut self, mut v: Vec<f64>) -> bool {
        let hits: Vec<(usize, f64)> = v
            .iter()
            .enumerate()
            .filter_map(|(col, &x)| (x != 0.0).then_some(col))
            .filter_map(|col| self.pivot_row[col].map(|r| (r, v[col])))
            .collect();
        for (r, factor) in hits {
            for (x, y) in v.iter_mut().zip(&self.rows[r]) {
                *x -= factor * y;
            }
        }
        let (pivot, peak) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        if peak <= CLOSURE_PIVOT_TOL {
            return false;
        }
        let inv = 1.0 / v[pivot];
        v.iter_mut().for_each(|x| *x *= inv);
        v[pivot] = 1.0;
        for row in &mut self.rows {
            let factor = row[pivot];
            if factor != 0.0 {
                for (x, y) in row.iter_mut().zip(&v) {
                    *x -= factor * y;
                }
                row[pivot] = 0.0;
            }
        }
        self.pivot_row[pivot] = Some(self.rows.len());
        self.rows.push(v);
        debug_assert!(self.rows.len() <= self.dim);
        true
    }
}

/// Closes the real span of the `≤ generator_max_body`-body labels under brackets with the
/// generators until the rank stops growing or fills `su(3^n)`.
pub fn verify_bracket_closure(n: usize, generator_max_body: usize) -> Result<ClosureReport> {
    let all = enumerate_basis(n, None)?;
    let target_rank = all.len();
    let index: HashMap<&BasisLabel, usize> = all.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let generators = enumerate_basis(n, Some(generator_max_body))?;

    let to_dense = |c: &CoefficientVector| {
        let mut v = vec![0.0; target_rank];
        for (label, h) in c.iter() {
            v[index[label]] = h;
        }
        v
    };

    let mut span = EchelonSpan::new(target_rank);
    let mut frontier = Vec::new();
    for g in &generators {
        let c = CoefficientVector::single(g.clone(), 1.0);
        if span.insert(to_dense(&c)) {
            frontier.push(c);
        }
    }

    let mut depth = 0;
    let mut memo: HashMap<(usize, BasisLabel), CoefficientVector> = HashMap::new();
    while span.rank() < target_rank && !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for (gi, g) in generators.iter().enumerate() {
            for v in &frontier {
                let mut acc = CoefficientVector::zero(n);
                for (label, h) in v.iter() {
                    let term = memo
                        .entry((gi, label.clone()))
                        .or_insert_with(|| commutator_expand(g, label).expect("same n"));
                    acc = acc.axpy(h, term)?;
                }
                if !acc.is_empty() && span.insert(to_dense(&acc)) {
                    next.push(acc);
                    if span.rank() == target_rank {
                        break;
                    }
                }
            }
            if span.rank() == target_rank {
                break;
            }
        }
        frontier = next;
    }

    Ok(ClosureReport {
        n,
        generator_max_body,
        generator_count: generators.len(),
        achieved_rank: span.rank(),
        target_rank,
        depth_used: depth,
    })
}
