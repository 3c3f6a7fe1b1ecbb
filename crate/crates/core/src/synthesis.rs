//! Schedule-to-gates compilation with an itemized error budget.
//!
//! The pipeline projects a schedule onto one- and two-body terms, replaces each time
//! slice by its mean Hamiltonian, and factors each slice exponential into single-label
//! gates. The budget adds the projection bound, the mean-Hamiltonian bound per slice and
//! the measured Trotter defect per slice, and compares the sum with the measured error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{basis_table, build_operator, decode, BasisLabel, CoefficientVector, MAX_LABEL_SITES};
use crate::error::{Error, Result};
use crate::geodesic::evolve_schedule;
use crate::linalg::{hermitian_expm, identity, spectral_norm, Operator};
use crate::metric::{cost_f, path_length, PenaltyWeights, Schedule, Segment};

/// Schema tag written into every report.
pub const SCHEMA_VERSION: &str = "qg3-v1";

/// Slack used when comparing durations and normalization.
pub const TIME_TOL: f64 = 1e-9;

/// Restriction of every segment to body weight `≤ 2`.
pub fn project_12body(sch: &Schedule) -> Schedule {
    sch.map_segments(|h| h.filter(|l| l.body_weight() <= 2))
}

/// `3^n · d / p`.
pub fn projection_bound(d: f64, n: usize, p: f64) -> f64 {
    3f64.powi(n as i32) * d / p
}

/// `2(e^{cΔ} − 1 − cΔ)`.
pub fn mean_bound(c: f64, delta: f64) -> f64 {
    let x = c * delta;
    if x.abs() < 1e-3 {
        // Taylor tail; avoids cancellation in expm1(x) − x.
        2.0 * x * x * (0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0)
    } else {
        2.0 * (x.exp_m1() - x)
    }
}

/// `4√2·n`, a bound on `‖H‖` for one- and two-body `H` with `F(H) ≤ 1`.
pub fn norm_cap_12body(n: usize) -> f64 {
    4.0 * 2f64.sqrt() * n as f64
}

/// One time slice of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub start: f64,
    pub width: f64,
    /// Segment pieces inside the slice, in time order.
    pub pieces: Vec<Segment>,
    /// Duration-weighted mean of the pieces.
    pub mean: CoefficientVector,
}

/// Number of slices of width `delta` covering `total`; a remainder below
/// [`TIME_TOL`]·Δ is absorbed into the last full slice.
fn slice_count(total: f64, delta: f64) -> usize {
    ((total / delta) - TIME_TOL).ceil().max(1.0) as usize
}

/// Cuts the schedule into slices of width `delta` (last slice possibly shorter) and
/// averages each exactly.
pub fn slice_schedule(sch: &Schedule, delta: f64) -> Result<Vec<Slice>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("slice width must be positive, got {delta}")));
    }
    if sch.is_empty() {
        return Err(Error::InvalidParameter("cannot slice an empty schedule".into()));
    }
    let total = sch.total_duration();
    let count = slice_count(total, delta);
    let mut bounds: Vec<f64> = (0..count).map(|j| j as f64 * delta).collect();
    bounds.push(total);

    // Segment boundaries as cumulative times.
    let mut seg_start = Vec::with_capacity(sch.segments().len());
    let mut acc = 0.0;
    for seg in sch.segments() {
        seg_start.push(acc);
        acc += seg.dt;
    }

    let mut slices = Vec::with_capacity(count);
    let mut first = 0;
    for j in 0..count {
        let (a, b) = (bounds[j], bounds[j + 1]);
        let mut pieces = Vec::new();
        let mut mean = CoefficientVector::zero(sch.n());
        for (k, seg) in sch.segments().iter().enumerate().skip(first) {
            let (s0, s1) = (seg_start[k], if k + 1 == seg_start.len() { total } else { seg_start[k + 1] });
            if s0 >= b {
                break;
            }
            let overlap = s1.min(b) - s0.max(a);
            if overlap > 0.0 {
                pieces.push(Segment { dt: overlap, h: seg.h.clone() });
                mean = mean.axpy(overlap, &seg.h)?;
            }
            if s1 <= b {
                first = k + 1;
            }
        }
        let width = b - a;
        slices.push(Slice { start: a, width, pieces, mean: mean.scale(1.0 / width) });
    }
    Ok(slices)
}

/// Per-slice mean Hamiltonians `H̄ⱼ = (1/Δⱼ)∫ H dt`.
pub fn slice_and_average(sch: &Schedule, delta: f64) -> Result<Vec<CoefficientVector>> {
    Ok(slice_schedule(sch, delta)?.into_iter().map(|s| s.mean).collect())
}

/// One factor `exp(−i·angle·Λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub label: BasisLabel,
    pub angle: f64,
}

impl Gate {
    pub fn unitary(&self) -> Result<Operator> {
        hermitian_expm(&build_operator(&self.label)?, self.angle)
    }
}

/// Gates in application order: the first gate acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence {
    n: usize,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 || n > MAX_LABEL_SITES {
            return Err(Error::InvalidParameter(format!("site count {n} outside 1..={MAX_LABEL_SITES}")));
        }
        for g in &gates {
            if g.label.n() != n {
                return Err(Error::SiteMismatch(n, g.label.n()));
            }
            if g.label.body_weight() > 2 {
                return Err(Error::BodyWeight(format!("gate {} acts on more than two sites", g.label)));
            }
            if !g.angle.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite angle on {}", g.label)));
            }
        }
        Ok(Self { n, gates })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn extend(&mut self, other: GateSequence) -> Result<()> {
        if other.n != self.n {
            return Err(Error::SiteMismatch(self.n, other.n));
        }
        self.gates.extend(other.gates);
        Ok(())
    }

    /// Realized unitary `G_k ⋯ G_2 G_1`.
    pub fn unitary(&self) -> Result<Operator> {
        let mut u = identity(3usize.pow(self.n as u32));
        for g in &self.gates {
            u = g.unitary()? * u;
        }
        Ok(u)
    }

    /// JSON form; with `unit_norm` the angles refer to operator-norm-one generators,
    /// i.e. every `λ₈` factor is replaced by `(√3/2)λ₈`.
    pub fn to_json(&self, unit_norm: bool) -> GateSequenceJson {
        let scale = 2.0 / 3f64.sqrt();
        GateSequenceJson {
            n: self.n,
            convention: unit_norm.then(|| "unit-norm".to_string()),
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let factor = if unit_norm { scale.powi(g.label.lambda8_count() as i32) } else { 1.0 };
                    GateJson {
                        sites: g.label.sites().to_vec(),
                        gm: g.label.gm().iter().map(|k| k.get()).collect(),
                        angle: g.angle * factor,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub sites: Vec<u8>,
    pub gm: Vec<u8>,
    pub angle: f64,
}

/// `{"n": 2, "gates": [{"sites": [1], "gm": [3], "angle": 0.0125}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequenceJson {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    pub gates: Vec<GateJson>,
}

impl Serialize for GateSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json(false).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GateSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GateSequenceJson::deserialize(deserializer)?;
        if raw.convention.is_some() {
            return Err(D::Error::custom("only the unscaled convention can be read back"));
        }
        let gates = raw
            .gates
            .into_iter()
            .map(|g| BasisLabel::from_parts(raw.n, g.sites, &g.gm).map(|label| Gate { label, angle: g.angle }))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        GateSequence::new(raw.n, gates).map_err(D::Error::custom)
    }
}

/// Number of sub-intervals for a slice of the given width when the nominal slice
/// width is `delta`: `⌈width/Δ²⌉`, i.e. `⌈1/Δ⌉` for a full slice.
pub fn inner_steps(width: f64, delta: f64) -> usize {
    ((width / (delta * delta)) - TIME_TOL).ceil().max(1.0) as usize
}

/// Product-formula factorization of `exp(−iH̄Δ)` for a full slice.
pub fn trotter_slice(mean: &CoefficientVector, delta: f64) -> Result<GateSequence> {
    trotter_slice_width(mean, delta, delta)
}

/// Factorization of `exp(−iH̄·width)` with sub-intervals of width about `Δ²`: each of the
/// [`inner_steps`] sub-intervals emits one gate per term in canonical label order.
pub fn trotter_slice_width(mean: &CoefficientVector, width: f64, delta: f64) -> Result<GateSequence> {
    if !(delta.is_finite() && delta > 0.0 && width.is_finite() && width > 0.0) {
        return Err(Error::InvalidParameter(format!("slice widths must be positive, got {width}, {delta}")));
    }
    if let Some(bad) = mean.labels().find(|l| l.body_weight() > 2) {
        return Err(Error::BodyWeight(format!("term {bad} has body weight above two; project first")));
    }
    let reps = inner_steps(width, delta);
    let step = width / reps as f64;
    let one: Vec<Gate> = mean.iter().map(|(label, h)| Gate { label: label.clone(), angle: h * step }).collect();
    let gates = (0..reps).flat_map(|_| one.iter().cloned()).collect();
    GateSequence::new(mean.n(), gates)
}

/// Unitary of a Trotter slice, computed as `(Π_ℓ e^{−i h_ℓ δ Λ_ℓ})^N`.
fn trotter_slice_unitary(mean: &CoefficientVector, width: f64, delta: f64) -> Result<Operator> {
    let reps = inner_steps(width, delta);
    let step = width / reps as f64;
    let dim = 3usize.pow(mean.n() as u32);
    let mut one = identity(dim);
    for (label, h) in mean.iter() {
        one = hermitian_expm(&build_operator(label)?, h * step)? * one;
    }
    let mut u = identity(dim);
    for _ in 0..reps {
        u = &one * u;
    }
    Ok(u)
}

/// `‖exp(−iH̄·width) − U_slice‖` for the product formula of [`trotter_slice_width`].
pub fn trotter_defect(mean: &CoefficientVector, width: f64, delta: f64) -> Result<f64> {
    let exact = hermitian_expm(&decode(mean)?, width)?;
    spectral_norm(&(exact - trotter_slice_unitary(mean, width, delta)?))
}

/// `⌈c₁·d³·n^{2k+2}⌉`, the gate count for `1/Δ = n^k·d`.
pub fn gate_count_estimate(d: f64, n: usize, k: u32, c1: f64) -> u64 {
    (c1 * d.powi(3) * (n as f64).powi(2 * k as i32 + 2)).ceil() as u64
}

/// The same count written in terms of `Δ`: `⌈c₁·n²·d/Δ²⌉`.
pub fn gate_count_estimate_for_delta(d: f64, n: usize, delta: f64, c1: f64) -> u64 {
    (c1 * (n * n) as f64 * d / (delta * delta) - TIME_TOL).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerm {
    /// Where the term comes from.
    pub source: String,
    pub value: f64,
}

impl BudgetTerm {
    fn new(source: &str, value: f64) -> Self {
        Self { source: source.to_string(), value }
    }
}

/// Both sides of `‖Πⱼ U_Pʲ − Πⱼ U_Aʲ‖ ≤ Σⱼ ‖U_Pʲ − U_Aʲ‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telescoping {
    pub source: String,
    pub product_gap: f64,
    pub slice_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetParameters {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub delta: f64,
    pub slices: usize,
    /// Norm cap used in the mean-Hamiltonian bound.
    pub c: f64,
    /// Path length of the input schedule.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub projection_bound: BudgetTerm,
    pub mean_bound_total: BudgetTerm,
    pub trotter_bound_total: BudgetTerm,
    pub a_priori_total: f64,
    pub measured_error: f64,
    pub telescoping: Telescoping,
    pub gate_count: usize,
    pub gate_count_estimate: u64,
    /// Largest gates-per-slice divided by `n²/Δ`.
    pub c1: f64,
    /// Largest per-slice Trotter defect divided by `n²Δ³`.
    pub c2: f64,
    /// Largest `‖H_P(t)‖` over the projected schedule.
    pub max_projected_norm: f64,
    pub parameters: BudgetParameters,
}

impl ErrorBudget {
    /// Measured error within the a-priori total.
    pub fn certified(&self) -> bool {
        self.measured_error <= self.a_priori_total + 1e-8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub index: usize,
    pub start: f64,
    pub width: f64,
    pub c: f64,
    pub mean_bound: f64,
    pub trotter_defect: f64,
    /// `‖U_Pʲ − U_Aʲ‖` for the slice.
    pub slice_error: f64,
    pub gates: usize,
}

pub const SLICE_CSV_HEADER: &str = "slice,c,delta,mean_bound,trotter_defect";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub schema: String,
    /// SHA-256 of the canonical JSON of schedule, weights and Δ.
    pub input_digest: String,
    pub gates: GateSequence,
    pub budget: ErrorBudget,
    pub slices: Vec<SliceDiagnostics>,
}

impl SynthesisReport {
    pub fn slices_csv(&self) -> String {
        let mut out = String::from(SLICE_CSV_HEADER);
        out.push('\n');
        for s in &self.slices {
            out.push_str(&format!("{},{},{},{},{}\n", s.index, s.c, s.width, s.mean_bound, s.trotter_defect));
        }
        out
    }
}

#[derive(Serialize)]
struct DigestInput<'a> {
    schedule: &'a Schedule,
    weights: &'a PenaltyWeights,
    delta: f64,
}

pub fn input_digest(sch: &Schedule, w: &PenaltyWeights, delta: f64) -> Result<String> {
    let bytes = serde_json::to_vec(&DigestInput { schedule: sch, weights: w, delta })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Rejects segments with `F(H) > 1`.
pub fn ensure_normalized(sch: &Schedule, w: &PenaltyWeights) -> Result<()> {
    for (index, seg) in sch.segments().iter().enumerate() {
        let cost = cost_f(&seg.h, w);
        if cost > 1.0 + TIME_TOL {
            return Err(Error::UnnormalizedSegment { index, cost });
        }
    }
    Ok(())
}

struct SliceResult {
    gates: GateSequence,
    exact: Operator,
    approx: Operator,
    diag: SliceDiagnostics,
    max_norm: f64,
}

/// Full pipeline: projection, slicing, per-slice product formula and the error budget.
pub fn synthesize(sch: &Schedule, w: &PenaltyWeights, delta: f64) -> Result<SynthesisReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("slice width must be positive, got {delta}")));
    }
    if sch.is_empty() {
        return Err(Error::InvalidParameter("schedule has no segments".into()));
    }
    basis_table(sch.n())?;
    ensure_normalized(sch, w)?;
    let total = sch.total_duration();
    if delta > total + TIME_TOL {
        return Err(Error::InvalidParameter(format!(
            "slice width {delta} exceeds the schedule duration {total}"
        )));
    }
    let n = sch.n();
    let cap = norm_cap_12body(n);
    let projected = project_12body(sch);
    let slices = slice_schedule(&projected, delta)?;

    let results = slices
        .par_iter()
        .enumerate()
        .map(|(index, slice)| -> Result<SliceResult> {
            let piece_sch = Schedule::new(n, slice.pieces.clone())?;
            let exact = evolve_schedule(&piece_sch)?;
            let approx = trotter_slice_unitary(&slice.mean, slice.width, delta)?;
            let gates = trotter_slice_width(&slice.mean, slice.width, delta)?;
            let trotter = spectral_norm(&(hermitian_expm(&decode(&slice.mean)?, slice.width)? - &approx))?;
            let slice_error = spectral_norm(&(&exact - &approx))?;
            let mut max_norm = 0.0f64;
            for piece in &slice.pieces {
                max_norm = max_norm.max(spectral_norm(&decode(&piece.h)?)?);
            }
            let diag = SliceDiagnostics {
                index,
                start: slice.start,
                width: slice.width,
                c: cap,
                mean_bound: mean_bound(cap, slice.width),
                trotter_defect: trotter,
                slice_error,
                gates: gates.len(),
            };
            Ok(SliceResult { gates, exact, approx, diag, max_norm })
        })
        .collect::<Result<Vec<_>>>()?;

    let dim = 3usize.pow(n as u32);
    let mut u_p = identity(dim);
    let mut u_a = identity(dim);
    let mut gates = GateSequence::new(n, vec![])?;
    let mut diags = Vec::with_capacity(results.len());
    let mut max_norm = 0.0f64;
    for r in results {
        u_p = r.exact * u_p;
        u_a = r.approx * u_a;
        gates.extend(r.gates)?;
        max_norm = max_norm.max(r.max_norm);
        diags.push(r.diag);
    }

    let d = path_length(sch, w);
    // Projection is exact when nothing above two-body is present.
    let has_high = sch.segments().iter().any(|seg| seg.h.max_body_weight() > 2);
    let proj = if has_high { projection_bound(d, n, w.p) } else { 0.0 };
    let mean_total: f64 = diags.iter().map(|s| s.mean_bound).sum();
    let trotter_total: f64 = diags.iter().map(|s| s.trotter_defect).sum();
    let u = evolve_schedule(sch)?;
    let measured = spectral_norm(&(u - &u_a))?;
    let telescoping = Telescoping {
        source: "proposition1".into(),
        product_gap: spectral_norm(&(u_p - &u_a))?,
        slice_sum: diags.iter().map(|s| s.slice_error).sum(),
    };

    let n2 = (n * n) as f64;
    let c1 = diags.iter().map(|s| s.gates as f64).fold(0.0, f64::max) / (n2 / delta);
    let c2 = diags.iter().map(|s| s.trotter_defect / (n2 * s.width.powi(3))).fold(0.0, f64::max);

    let budget = ErrorBudget {
        projection_bound: BudgetTerm::new("lemma3", proj),
        mean_bound_total: BudgetTerm::new("lemma4", mean_total),
        trotter_bound_total: BudgetTerm::new("lemma5 (measured per slice)", trotter_total),
        a_priori_total: proj + mean_total + trotter_total,
        measured_error: measured,
        telescoping,
        gate_count: gates.len(),
        gate_count_estimate: gate_count_estimate_for_delta(d, n, delta, c1),
        c1,
        c2,
        max_projected_norm: max_norm,
        parameters: BudgetParameters { n, p: w.p, s: w.s, delta, slices: diags.len(), c: cap, d },
    };
    Ok(SynthesisReport {
        schema: SCHEMA_VERSION.to_string(),
        input_digest: input_digest(sch, w, delta)?,
        gates,
        budget,
        slices: diags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::linalg::max_abs;
    use crate::metric::normalize_schedule;
    use crate::random::{normalized_hamiltonian, normalized_schedule, trial_rng, unit_coefficients};

    fn label(n: usize, f: &[(u8, u8)]) -> BasisLabel {
        BasisLabel::new(n, f).unwrap()
    }

    #[test]
    fn projection_cases() {
        let mut rng = trial_rng(1, 0);
        let low = unit_coefficients(&mut rng, 3, Some(2)).unwrap();
        let sch = Schedule::constant(low.clone(), 1.0).unwrap();
        assert_eq!(project_12body(&sch), sch);

        let pure3 = unit_coefficients(&mut rng, 3, None).unwrap().body_part(3);
        let p = project_12body(&Schedule::constant(pure3, 1.0).unwrap());
        assert!(p.segments()[0].h.is_empty());

        let mixed = unit_coefficients(&mut rng, 3, None).unwrap();
        let p = project_12body(&Schedule::constant(mixed.clone(), 1.0).unwrap());
        let kept = &p.segments()[0].h;
        assert_eq!(kept.add(&mixed.body_part(3)).unwrap(), mixed);
        assert_eq!(project_12body(&p), p);
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(projection_bound(0.0, 2, 9.0), 0.0);
        assert!((projection_bound(1.0, 1, 9.0) - 1.0 / 3.0).abs() < 1e-15);
        for n in 1..=3 {
            let d = 0.7;
            assert!((projection_bound(d, n, 9f64.powi(n as i32)) - d / 3f64.powi(n as i32)).abs() < 1e-15);
        }
        assert_eq!(mean_bound(3.0, 0.0), 0.0);
        assert!((mean_bound(1.0, 1.0) - 2.0 * (std::f64::consts::E - 2.0)).abs() < 1e-12);
        assert!((mean_bound(1.0, 1.0) - 1.43656).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for delta in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let ratio = mean_bound(2.0, delta) / (4.0 * delta * delta);
            assert!(ratio >= 1.0 && ratio < prev);
            prev = ratio;
        }
        assert!((prev - 1.0).abs() < 1e-4);
        // both branches agree near the switch
        assert!((mean_bound(1.0, 0.999e-3) - mean_bound(1.0, 1.001e-3)).abs() < 1e-8);
        assert!((norm_cap_12body(1) - 5.656854).abs() < 1e-6);
        assert!((norm_cap_12body(3) - 12.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_cap_holds_on_random_samples() {
        let w = PenaltyWeights::penalty(1.0).unwrap();
        for i in 0..500u64 {
            let n = 1 + (i % 3) as usize;
            let h = normalized_hamiltonian(&mut trial_rng(77, i), n, Some(2), &w).unwrap();
            assert!(spectral_norm(&decode(&h).unwrap()).unwrap() <= norm_cap_12body(n));
        }
    }

    #[test]
    fn slicing_cases() {
        let mut rng = trial_rng(2, 0);
        let a = unit_coefficients(&mut rng, 2, None).unwrap();
        let b = unit_coefficients(&mut rng, 2, None).unwrap();
        let constant = Schedule::constant(a.clone(), 1.0).unwrap();
        for m in slice_and_average(&constant, 0.25).unwrap() {
            assert!(m.max_abs_diff(&a).unwrap() < 1e-15);
        }
        let two = Schedule::new(2, vec![Segment { dt: 0.5, h: a.clone() }, Segment { dt: 0.5, h: b.clone() }]).unwrap();
        let means = slice_and_average(&two, 1.0).unwrap();
        assert_eq!(means.len(), 1);
        assert!(means[0].max_abs_diff(&a.add(&b).unwrap().scale(0.5)).unwrap() < 1e-15);

        assert!(slice_and_average(&Schedule::new(2, vec![]).unwrap(), 0.1).is_err());
        assert!(slice_and_average(&two, 0.0).is_err());
    }

    #[test]
    fn slicing_preserves_integral() {
        let mut rng = trial_rng(3, 0);
        let segments: Vec<Segment> = [0.13, 0.4, 0.07, 0.22, 0.31]
            .iter()
            .map(|&dt| Segment { dt, h: unit_coefficients(&mut rng, 2, None).unwrap() })
            .collect();
        let sch = Schedule::new(2, segments.clone()).unwrap();
        let integral = segments
            .iter()
            .fold(CoefficientVector::zero(2), |acc, s| acc.axpy(s.dt, &s.h).unwrap());
        for delta in [0.1, 0.17, 0.5, 1.13] {
            let slices = slice_schedule(&sch, delta).unwrap();
            let sum = slices.iter().fold(CoefficientVector::zero(2), |acc, s| acc.axpy(s.width, &s.mean).unwrap());
            assert!(sum.max_abs_diff(&integral).unwrap() < 1e-12, "delta {delta}");
            let widths: f64 = slices.iter().map(|s| s.width).sum();
            assert!((widths - 1.13).abs() < 1e-12);
            assert!(slices.iter().all(|s| s.width <= delta + 1e-12));
        }
        assert_eq!(slice_schedule(&sch, 0.17).unwrap().len(), 7);
        assert_eq!(slice_schedule(&sch, 1.13 / 3.0).unwrap().len(), 3);
    }

    #[test]
    fn trotter_exact_cases() {
        let single = CoefficientVector::single(label(2, &[(1, 4), (2, 6)]), 0.8);
        let gates = trotter_slice(&single, 0.1).unwrap();
        assert_eq!(gates.len(), 10);
        let exact = hermitian_expm(&decode(&single).unwrap(), 0.1).unwrap();
        assert!(max_abs(&(gates.unitary().unwrap() - &exact)) < 1e-12);

        let commuting = CoefficientVector::from_terms(
            2,
            [(label(2, &[(1, 3)]), 0.5), (label(2, &[(2, 8)]), -0.9), (label(2, &[(1, 8), (2, 3)]), 0.3)],
        )
        .unwrap();
        assert!(trotter_defect(&commuting, 0.2, 0.2).unwrap() < 1e-10);

        let three = CoefficientVector::single(label(3, &[(1, 1), (2, 1), (3, 1)]), 1.0);
        assert!(matches!(trotter_slice(&three, 0.1), Err(Error::BodyWeight(_))));
    }

    #[test]
    fn trotter_gate_count_and_order() {
        let mut rng = trial_rng(4, 0);
        let mean = unit_coefficients(&mut rng, 2, Some(2)).unwrap();
        let gates = trotter_slice(&mean, 0.05).unwrap();
        assert_eq!(gates.len(), mean.len() * 20);
        assert!(gates.len() <= enumerate_basis(2, Some(2)).unwrap().len() * 20);
        let labels: Vec<_> = gates.gates().iter().take(mean.len()).map(|g| g.label.clone()).collect();
        assert_eq!(labels, mean.labels().cloned().collect::<Vec<_>>());
        assert!((gates.gates()[0].angle - mean.iter().next().unwrap().1 * 0.0025).abs() < 1e-15);
        let direct = trotter_slice_unitary(&mean, 0.05, 0.05).unwrap();
        assert!(max_abs(&(gates.unitary().unwrap() - direct)) < 1e-12);
    }

    #[test]
    fn trotter_defect_is_third_order() {
        let mean = CoefficientVector::from_terms(2, [(label(2, &[(1, 1)]), 0.9), (label(2, &[(1, 2), (2, 5)]), 0.7)])
            .unwrap();
        let defects: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&d| trotter_defect(&mean, d, d).unwrap()).collect();
        let slope = (defects[0] / defects[2]).ln() / 4f64.ln();
        assert!((2.6..=3.4).contains(&slope), "slope {slope}");
    }

    #[test]
    fn gate_sequence_json() {
        let mean = CoefficientVector::from_terms(2, [(label(2, &[(1, 3)]), 0.5), (label(2, &[(1, 8), (2, 8)]), 0.25)])
            .unwrap();
        let gates = trotter_slice(&mean, 0.5).unwrap();
        let text = serde_json::to_string(&gates).unwrap();
        assert!(text.starts_with(r#"{"n":2,"gates":[{"sites":[1],"gm":[3],"angle":0.125}"#));
        let back: GateSequence = serde_json::from_str(&text).unwrap();
        assert_eq!(back, gates);
        let unit = gates.to_json(true);
        assert_eq!(unit.convention.as_deref(), Some("unit-norm"));
        assert!((unit.gates[1].angle - 0.0625 * 4.0 / 3.0).abs() < 1e-15);
        let bad = r#"{"n":3,"gates":[{"sites":[1,2,3],"gm":[1,1,1],"angle":0.1}]}"#;
        assert!(serde_json::from_str::<GateSequence>(bad).is_err());
    }

    #[test]
    fn gate_count_estimates() {
        let base = gate_count_estimate(1.0, 2, 2, 3.0);
        assert_eq!(gate_count_estimate(2.0, 2, 2, 3.0), 8 * base);
        assert_eq!(gate_count_estimate(1.0, 2, 3, 3.0), 4 * base);
        assert_eq!(gate_count_estimate_for_delta(1.0, 2, 0.25, 3.0), base);
    }

    #[test]
    fn single_term_schedule_is_exact() {
        let w = PenaltyWeights::penalty(9.0).unwrap();
        let sch = Schedule::constant(CoefficientVector::single(label(1, &[(1, 2)]), 1.0), 0.5).unwrap();
        let report = synthesize(&sch, &w, 0.5).unwrap();
        assert!(report.budget.measured_error <= 1e-10);
        assert_eq!(report.budget.projection_bound.value, 0.0);
        assert!(report.budget.certified());
    }

    #[test]
    fn three_body_free_target_at_n1() {
        let w = PenaltyWeights::penalty(9.0).unwrap();
        let sch = normalized_schedule(&mut trial_rng(5, 0), 1, 4, 0.25, None, &w).unwrap();
        let report = synthesize(&sch, &w, 0.25).unwrap();
        let u = evolve_schedule(&sch).unwrap();
        let u_p = evolve_schedule(&project_12body(&sch)).unwrap();
        assert_eq!(max_abs(&(u - u_p)), 0.0);
        let b = &report.budget;
        assert_eq!(b.projection_bound.value, 0.0);
        assert!((b.a_priori_total - (b.projection_bound.value + b.mean_bound_total.value + b.trotter_bound_total.value)).abs() < 1e-15);
        assert!(b.certified());
    }

    #[test]
    fn end_to_end_n2() {
        let w = PenaltyWeights::penalty(81.0).unwrap();
        let sch = normalized_schedule(&mut trial_rng(6, 0), 2, 10, 0.1, None, &w).unwrap();
        assert!((path_length(&sch, &w) - 1.0).abs() < 1e-12);
        let report = synthesize(&sch, &w, 0.05).unwrap();
        let b = &report.budget;
        assert!(b.certified(), "{} > {}", b.measured_error, b.a_priori_total);
        assert!(b.telescoping.product_gap <= b.telescoping.slice_sum + 1e-12);
        assert!(b.gate_count as u64 <= b.gate_count_estimate);
        let realized = report.gates.unitary().unwrap();
        let u = evolve_schedule(&sch).unwrap();
        assert!((spectral_norm(&(u - realized)).unwrap() - b.measured_error).abs() < 1e-10);

        let coarse = synthesize(&sch, &w, 0.1).unwrap();
        assert!(report.budget.measured_error <= coarse.budget.measured_error + 1e-9);
    }

    #[test]
    fn synthesis_preconditions() {
        let w = PenaltyWeights::penalty(9.0).unwrap();
        let big = CoefficientVector::single(label(2, &[(1, 1)]), 2.0);
        let sch = Schedule::new(
            2,
            vec![Segment { dt: 0.5, h: big.scale(0.5) }, Segment { dt: 0.5, h: big.clone() }],
        )
        .unwrap();
        assert!(matches!(synthesize(&sch, &w, 0.1), Err(Error::UnnormalizedSegment { index: 1, .. })));
        let ok = normalize_schedule(&sch, &w).unwrap();
        assert!(synthesize(&ok, &w, 10.0).is_err());
        assert!(synthesize(&ok, &w, 0.0).is_err());
        assert!(synthesize(&Schedule::new(2, vec![]).unwrap(), &w, 0.1).is_err());
    }

    #[test]
    fn report_round_trip_and_determinism() {
        let w = PenaltyWeights::penalty(27.0).unwrap();
        let sch = normalized_schedule(&mut trial_rng(8, 0), 2, 3, 0.2, None, &w).unwrap();
        let a = serde_json::to_string(&synthesize(&sch, &w, 0.2).unwrap()).unwrap();
        let b = serde_json::to_string(&synthesize(&sch, &w, 0.2).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: SynthesisReport = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
        assert_eq!(back.input_digest.len(), 64);
        assert_eq!(back.slices_csv().lines().count(), back.slices.len() + 1);
    }
}
