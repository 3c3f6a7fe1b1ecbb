use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::label::BasisLabel;
use crate::error::{Error, Result};

/// Sparse real coefficients `h_σ` of a Hamiltonian `H = Σ h_σ Λ_σ`.
///
/// All labels share the same site count and zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    n: usize,
    terms: BTreeMap<BasisLabel, f64>,
}

impl CoefficientVector {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisLabel, f64)>,
    {
        let mut out = Self::zero(n);
        for (label, h) in terms {
            out.add_term(label, h)?;
        }
        Ok(out)
    }

    pub fn single(label: BasisLabel, h: f64) -> Self {
        let mut out = Self::zero(label.n());
        out.add_term(label, h).expect("label matches its own site count");
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, label: &BasisLabel) -> f64 {
        self.terms.get(label).copied().unwrap_or(0.0)
    }

    /// Terms in canonical label order.
    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, f64)> + '_ {
        self.terms.iter().map(|(label, &h)| (label, h))
    }

    pub fn labels(&self) -> impl Iterator<Item = &BasisLabel> + '_ {
        self.terms.keys()
    }

    /// Adds `h` to the coefficient of `label`, dropping the entry if it becomes zero.
    pub fn add_term(&mut self, label: BasisLabel, h: f64) -> Result<()> {
        if label.n() != self.n {
            return Err(Error::SiteMismatch(self.n, label.n()));
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite coefficient on {label}")));
        }
        if h == 0.0 {
            return Ok(());
        }
        let slot = self.terms.entry(label).or_insert(0.0);
        *slot += h;
        if *slot == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
        Ok(())
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.ensure_same_n(other)?;
        let mut out = self.clone();
        for (label, h) in other.iter() {
            out.add_term(label.clone(), alpha * h)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map_coefficients(|_, h| alpha * h)
    }

    /// Applies `f(label, h)` to every stored coefficient.
    pub fn map_coefficients(&self, mut f: impl FnMut(&BasisLabel, f64) -> f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(label, &h)| (label.clone(), f(label, h)))
            .filter(|(_, h)| *h != 0.0)
            .collect();
        Self { n: self.n, terms }
    }

    /// Restriction to labels satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&BasisLabel) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(label, _)| keep(label))
            .map(|(label, &h)| (label.clone(), h))
            .collect();
        Self { n: self.n, terms }
    }

    /// Restriction to labels of exactly the given body weight.
    pub fn body_part(&self, weight: usize) -> Self {
        self.filter(|label| label.body_weight() == weight)
    }

    pub fn max_body_weight(&self) -> usize {
        self.terms.keys().map(BasisLabel::body_weight).max().unwrap_or(0)
    }

    /// Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.ensure_same_n(other)?;
        Ok(self.iter().map(|(label, h)| h * other.get(label)).sum())
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_n(other)?;
        let diff = self.sub(other)?;
        Ok(diff.terms.values().fold(0.0, |acc, h| acc.max(h.abs())))
    }

    pub(crate) fn ensure_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SiteMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn to_terms_json(&self) -> Vec<TermJson> {
        self.iter()
            .map(|(label, h)| TermJson {
                sites: label.sites().to_vec(),
                gm: label.gm().iter().map(|k| k.get()).collect(),
                h,
            })
            .collect()
    }

    /// Builds a vector from JSON terms; duplicate labels are summed.
    pub fn from_terms_json(n: usize, terms: &[TermJson]) -> Result<Self> {
        let mut out = Self::zero(n);
        for term in terms {
            let label = BasisLabel::from_parts(n, term.sites.clone(), &term.gm)?;
            out.add_term(label, term.h)?;
        }
        Ok(out)
    }
}

/// One coefficient in JSON form: `{"sites": [..], "gm": [..], "h": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub sites: Vec<u8>,
    pub gm: Vec<u8>,
    pub h: f64,
}

#[derive(Serialize, Deserialize)]
struct CoefficientVectorJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl Serialize for CoefficientVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CoefficientVectorJson { n: self.n, terms: self.to_terms_json() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CoefficientVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = CoefficientVectorJson::deserialize(deserializer)?;
        CoefficientVector::from_terms_json(raw.n, &raw.terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(n: usize, f: &[(u8, u8)]) -> BasisLabel {
        BasisLabel::new(n, f).unwrap()
    }

    #[test]
    fn zeros_are_not_stored() {
        let mut c = CoefficientVector::zero(2);
        c.add_term(label(2, &[(1, 3)]), 0.0).unwrap();
        assert!(c.is_empty());
        c.add_term(label(2, &[(1, 3)]), 0.5).unwrap();
        c.add_term(label(2, &[(1, 3)]), -0.5).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn rejects_mixed_site_counts() {
        let mut c = CoefficientVector::zero(2);
        assert!(matches!(c.add_term(label(3, &[(1, 3)]), 1.0), Err(Error::SiteMismatch(2, 3))));
        let other = CoefficientVector::zero(3);
        assert!(c.add(&other).is_err());
    }

    #[test]
    fn json_shape() {
        let c = CoefficientVector::single(label(2, &[(1, 3)]), 0.5);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(text, r#"{"n":2,"terms":[{"sites":[1],"gm":[3],"h":0.5}]}"#);
        let back: CoefficientVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn arithmetic() {
        let a = CoefficientVector::from_terms(
            2,
            [(label(2, &[(1, 1)]), 1.0), (label(2, &[(1, 2), (2, 3)]), 2.0)],
        )
        .unwrap();
        let b = CoefficientVector::single(label(2, &[(1, 1)]), 1.0);
        let d = a.sub(&b).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(&label(2, &[(1, 2), (2, 3)])), 2.0);
        assert_eq!(a.body_part(2), d);
        assert_eq!(a.max_body_weight(), 2);
        assert!((a.norm() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.dot(&b).unwrap(), 1.0);
    }
}
