use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest site count for which labels are enumerated.
pub const MAX_LABEL_SITES: usize = 8;

/// Index `k` of a Gell-Mann matrix `λ_k`, `1 ≤ k ≤ 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct GellMannIndex(u8);

impl GellMannIndex {
    pub fn new(k: u8) -> Result<Self> {
        if (1..=8).contains(&k) {
            Ok(Self(k))
        } else {
            Err(Error::InvalidIndex(k))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = GellMannIndex> + Clone {
        (1..=8).map(GellMannIndex)
    }
}

impl TryFrom<u8> for GellMannIndex {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        Self::new(k)
    }
}

impl From<GellMannIndex> for u8 {
    fn from(k: GellMannIndex) -> u8 {
        k.0
    }
}

/// A multi-site Gell-Mann product `Λ = λ^{α₁}_{k₁} ⋯ λ^{α_s}_{k_s}` on `n` qutrits.
///
/// Sites are 1-based and strictly increasing, so two labels compare equal iff they
/// denote the same operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    n: usize,
    sites: Vec<u8>,
    gm: Vec<GellMannIndex>,
}

impl BasisLabel {
    pub fn new(n: usize, factors: &[(u8, u8)]) -> Result<Self> {
        let sites: Vec<u8> = factors.iter().map(|&(site, _)| site).collect();
        let gm: Vec<u8> = factors.iter().map(|&(_, k)| k).collect();
        Self::from_parts(n, sites, &gm)
    }

    pub fn from_parts(n: usize, sites: Vec<u8>, gm: &[u8]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLabel("site count must be positive".into()));
        }
        if sites.is_empty() {
            return Err(Error::InvalidLabel("label must act on at least one site".into()));
        }
        if sites.len() != gm.len() {
            return Err(Error::InvalidLabel(format!(
                "{} sites but {} Gell-Mann indices",
                sites.len(),
                gm.len()
            )));
        }
        if let Some(&bad) = sites.iter().find(|&&a| a == 0 || a as usize > n) {
            return Err(Error::InvalidLabel(format!("site {bad} outside 1..={n}")));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLabel(format!(
                "sites {sites:?} are not strictly increasing"
            )));
        }
        let gm = gm
            .iter()
            .map(|&k| GellMannIndex::new(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, sites, gm })
    }

    /// Label from a full per-site index array, `0` meaning identity on that site.
    pub(crate) fn from_local_indices(local: &[u8]) -> Option<Self> {
        let (sites, gm): (Vec<u8>, Vec<GellMannIndex>) = local
            .iter()
            .enumerate()
            .filter(|(_, &k)| k != 0)
            .map(|(i, &k)| (i as u8 + 1, GellMannIndex(k)))
            .unzip();
        if sites.is_empty() {
            None
        } else {
            Some(Self { n: local.len(), sites, gm })
        }
    }

    /// Per-site Gell-Mann index, `0` for identity.
    pub(crate) fn local_indices(&self) -> Vec<u8> {
        let mut local = vec![0u8; self.n];
        for (&site, k) in self.sites.iter().zip(&self.gm) {
            local[site as usize - 1] = k.get();
        }
        local
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    pub fn gm(&self) -> &[GellMannIndex] {
        &self.gm
    }

    pub fn factors(&self) -> impl Iterator<Item = (u8, GellMannIndex)> + '_ {
        self.sites.iter().copied().zip(self.gm.iter().copied())
    }

    /// Number of sites acted on non-trivially.
    pub fn body_weight(&self) -> usize {
        self.sites.len()
    }

    /// Number of `λ₈` factors.
    pub fn lambda8_count(&self) -> usize {
        self.gm.iter().filter(|k| k.get() == 8).count()
    }

    /// `tr(Λ Λ) = 2^s · 3^{n-s}` for an `s`-body label.
    pub fn trace_norm_sq(&self) -> f64 {
        let s = self.body_weight() as i32;
        2f64.powi(s) * 3f64.powi(self.n as i32 - s)
    }
}

impl Ord for BasisLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then(self.sites.len().cmp(&other.sites.len()))
            .then_with(|| self.sites.cmp(&other.sites))
            .then_with(|| self.gm.cmp(&other.gm))
    }
}

impl PartialOrd for BasisLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self
            .factors()
            .map(|(site, k)| format!("λ{}@{}", k.get(), site))
            .join("·");
        write!(f, "{parts}")
    }
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    n: usize,
    sites: Vec<u8>,
    gm: Vec<u8>,
}

impl Serialize for BasisLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LabelJson {
            n: self.n,
            sites: self.sites.clone(),
            gm: self.gm.iter().map(|k| k.get()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BasisLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = LabelJson::deserialize(deserializer)?;
        BasisLabel::from_parts(raw.n, raw.sites, &raw.gm).map_err(serde::de::Error::custom)
    }
}

/// Canonical enumeration of the Gell-Mann product basis of `su(3^n)`.
///
/// Ordered by body weight, then site tuple, then Gell-Mann tuple. Without a body cap the
/// count is `9^n - 1`; with `max_body = 2` it is `32n² - 24n`.
pub fn enumerate_basis(n: usize, max_body: Option<usize>) -> Result<Vec<BasisLabel>> {
    if n == 0 {
        return Err(Error::InvalidParameter("site count must be positive".into()));
    }
    if n > MAX_LABEL_SITES {
        return Err(Error::InvalidParameter(format!(
            "basis enumeration supports n <= {MAX_LABEL_SITES}, got {n}"
        )));
    }
    let top = max_body.unwrap_or(n).min(n);
    let mut labels = Vec::new();
    for s in 1..=top {
        for sites in (1..=n as u8).combinations(s) {
            for gm in (0..s).map(|_| GellMannIndex::all()).multi_cartesian_product() {
                labels.push(BasisLabel { n, sites: sites.clone(), gm });
            }
        }
    }
    Ok(labels)
}

/// `32n² − 24n`, the number of one- and two-body labels.
pub fn one_two_body_count(n: usize) -> usize {
    32 * n * n - 24 * n
}
