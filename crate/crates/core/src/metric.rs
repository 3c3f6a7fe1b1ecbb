//! Penalty metric, cost functional, curve length and schedules.
//!
//! Two diagonal metrics live here:
//!
//! * the coefficient metric behind the cost `F(H) = √(Σ' h² + p² Σ'' h²)`, with weights
//!   `s` / `1` / `p²` on one-, two- and ≥3-body coefficients (`s = 1` recovers `F²`);
//! * the trace-form metric `⟨H, J⟩ = tr(H 𝒢(J)) / (2·3^{n−1})` with
//!   `𝒢 = s𝒮 + 𝒯 + p𝒬`, which drives the geodesic equations.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisLabel, CoefficientVector, TermJson, MAX_LABEL_SITES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    /// Penalty on three- and more-body directions.
    pub p: f64,
    /// One-body weight of the three-qutrit metric `𝒢`.
    pub s: f64,
}

impl PenaltyWeights {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("penalty p must be positive, got {p}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!("one-body weight s must be positive, got {s}")));
        }
        Ok(Self { p, s })
    }

    /// Penalty `p` with `s = 1`.
    pub fn penalty(p: f64) -> Result<Self> {
        Self::new(p, 1.0)
    }

    /// The default `p = 9^n`, `s = 1`.
    pub fn default_for(n: usize) -> Self {
        Self { p: 9f64.powi(n as i32), s: 1.0 }
    }

    /// Scaling applied by `𝒢` to a label of the given body weight.
    pub fn g_weight(&self, body: usize) -> f64 {
        match body {
            1 => self.s,
            2 => 1.0,
            _ => self.p,
        }
    }

    /// Diagonal entry `g_σσ` of the coefficient metric.
    pub fn metric_weight(&self, body: usize) -> f64 {
        match body {
            1 => self.s,
            2 => 1.0,
            _ => self.p * self.p,
        }
    }
}

/// `F(H) = √(Σ'_σ h_σ² + p² Σ''_σ h_σ²)`.
pub fn cost_f(c: &CoefficientVector, w: &PenaltyWeights) -> f64 {
    let (low, high) = c.iter().fold((0.0, 0.0), |(low, high), (label, h)| {
        if label.body_weight() <= 2 {
            (low + h * h, high)
        } else {
            (low, high + h * h)
        }
    });
    (low + w.p * w.p * high).sqrt()
}

/// `Σ_σ g_σσ a_σ b_σ` with `g = s, 1, p²` by body class.
pub fn metric_inner(a: &CoefficientVector, b: &CoefficientVector, w: &PenaltyWeights) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::SiteMismatch(a.n(), b.n()));
    }
    Ok(a.iter()
        .map(|(label, h)| w.metric_weight(label.body_weight()) * h * b.get(label))
        .sum())
}

/// `tr(A 𝒢(B)) / (2·3^{n−1})` evaluated in coefficients.
pub fn trace_pairing(a: &CoefficientVector, b: &CoefficientVector, w: &PenaltyWeights) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::SiteMismatch(a.n(), b.n()));
    }
    let norm = trace_unit(a.n());
    Ok(a.iter()
        .map(|(label, h)| w.g_weight(label.body_weight()) * label.trace_norm_sq() / norm * h * b.get(label))
        .sum())
}

/// `tr(H 𝒢(H)) / (2·3^{n−1})`, the energy conserved along geodesics of the trace-form metric.
pub fn trace_energy(c: &CoefficientVector, w: &PenaltyWeights) -> f64 {
    trace_pairing(c, c, w).expect("same vector")
}

/// `2·3^{n−1}`, the trace of the square of a one-body label.
pub fn trace_unit(n: usize) -> f64 {
    2.0 * 3f64.powi(n as i32 - 1)
}

/// One-, two- and three-body parts of a three-qutrit algebra element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySplit {
    pub s: CoefficientVector,
    pub t: CoefficientVector,
    pub q: CoefficientVector,
}

impl BodySplit {
    pub fn reassemble(&self) -> CoefficientVector {
        self.s.add(&self.t).and_then(|st| st.add(&self.q)).expect("parts share n")
    }
}

pub fn split_stq(c: &CoefficientVector) -> Result<BodySplit> {
    if c.n() != 3 {
        return Err(Error::InvalidParameter(format!(
            "the S/T/Q split is defined for three qutrits, got n = {}",
            c.n()
        )));
    }
    Ok(BodySplit { s: c.body_part(1), t: c.body_part(2), q: c.body_part(3) })
}

/// `𝒢(c)`: scales one-, two-, ≥3-body coefficients by `s`, `1`, `p`.
pub fn apply_g(c: &CoefficientVector, w: &PenaltyWeights) -> CoefficientVector {
    c.map_coefficients(|label, h| h * w.g_weight(label.body_weight()))
}

/// `𝒢⁻¹(c)`: scales by `1/s`, `1`, `1/p`.
pub fn apply_g_inverse(c: &CoefficientVector, w: &PenaltyWeights) -> CoefficientVector {
    c.map_coefficients(|label, h| h / w.g_weight(label.body_weight()))
}

/// One piece of a piecewise-constant Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub dt: f64,
    pub h: CoefficientVector,
}

/// Piecewise-constant `H(t)`: segments in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    n: usize,
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(n: usize, segments: Vec<Segment>) -> Result<Self> {
        if n == 0 || n > MAX_LABEL_SITES {
            return Err(Error::InvalidParameter(format!("site count {n} outside 1..={MAX_LABEL_SITES}")));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.dt.is_finite() && seg.dt > 0.0) {
                return Err(Error::InvalidParameter(format!("segment {i}: duration {} must be positive", seg.dt)));
            }
            if seg.h.n() != n {
                return Err(Error::SiteMismatch(n, seg.h.n()));
            }
        }
        Ok(Self { n, segments })
    }

    pub fn constant(h: CoefficientVector, dt: f64) -> Result<Self> {
        Self::new(h.n(), vec![Segment { dt, h }])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.dt).sum()
    }

    /// Replaces every segment's coefficients by `f(h)`.
    pub fn map_segments(&self, mut f: impl FnMut(&CoefficientVector) -> CoefficientVector) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|seg| Segment { dt: seg.dt, h: f(&seg.h) })
            .collect();
        Self { n: self.n, segments }
    }

    /// Splits every segment into `parts` equal pieces.
    pub fn refine(&self, parts: usize) -> Result<Self> {
        if parts == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        let segments = self
            .segments
            .iter()
            .flat_map(|seg| (0..parts).map(move |_| Segment { dt: seg.dt / parts as f64, h: seg.h.clone() }))
            .collect();
        Ok(Self { n: self.n, segments })
    }

    /// Parses the JSON schedule format, reporting schema violations with a JSON pointer.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: ScheduleJson = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            pointer: json_pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        raw.validate()
    }

    pub fn to_json(&self) -> ScheduleJson {
        ScheduleJson {
            n: self.n,
            segments: self
                .segments
                .iter()
                .map(|seg| SegmentJson { dt: seg.dt, terms: seg.h.to_terms_json() })
                .collect(),
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment as P;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            P::Seq { index } => out.push_str(&index.to_string()),
            P::Map { key } => out.push_str(key),
            P::Enum { variant } => out.push_str(variant),
            P::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// `{"n": 3, "segments": [{"dt": 0.1, "terms": [..]}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleJson {
    pub n: usize,
    pub segments: Vec<SegmentJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentJson {
    pub dt: f64,
    pub terms: Vec<TermJson>,
}

impl ScheduleJson {
    pub fn validate(&self) -> Result<Schedule> {
        let schema = |pointer: String, message: String| Error::Schema { pointer, message };
        if self.n == 0 || self.n > MAX_LABEL_SITES {
            return Err(schema("/n".into(), format!("site count must be in 1..={MAX_LABEL_SITES}")));
        }
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.dt.is_finite() && seg.dt > 0.0) {
                return Err(schema(format!("/segments/{i}/dt"), format!("duration must be positive, got {}", seg.dt)));
            }
            let mut h = CoefficientVector::zero(self.n);
            for (j, term) in seg.terms.iter().enumerate() {
                let label = BasisLabel::from_parts(self.n, term.sites.clone(), &term.gm)
                    .map_err(|e| schema(format!("/segments/{i}/terms/{j}"), e.to_string()))?;
                h.add_term(label, term.h)
                    .map_err(|e| schema(format!("/segments/{i}/terms/{j}/h"), e.to_string()))?;
            }
            segments.push(Segment { dt: seg.dt, h });
        }
        Schedule::new(self.n, segments)
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        ScheduleJson::deserialize(deserializer)?
            .validate()
            .map_err(serde::de::Error::custom)
    }
}

/// Curve length `Σ Δt · F(H)`.
pub fn path_length(sch: &Schedule, w: &PenaltyWeights) -> f64 {
    sch.segments().iter().map(|seg| seg.dt * cost_f(&seg.h, w)).sum()
}

/// Rescales each segment to `F(H) = 1`, stretching its duration to `Δt · F` so the
/// generated unitary is unchanged.
pub fn normalize_schedule(sch: &Schedule, w: &PenaltyWeights) -> Result<Schedule> {
    let mut segments = Vec::with_capacity(sch.segments().len());
    for (index, seg) in sch.segments().iter().enumerate() {
        let cost = cost_f(&seg.h, w);
        if cost == 0.0 {
            return Err(Error::ZeroCostSegment { index });
        }
        segments.push(Segment { dt: seg.dt * cost, h: seg.h.scale(1.0 / cost) });
    }
    Schedule::new(sch.n(), segments)
}
