//! Seeded randomized campaigns that check the bounds used by the synthesis budget,
//! and parameter sweeps over the pipeline.
//!
//! Trial `i` of a campaign seeded with `seed` draws from [`trial_rng`]`(seed, i)`, so a
//! report depends only on its inputs; trials run in parallel and are collected in order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::basis::{commutator_expand, decode, enumerate_basis, verify_bracket_closure, BasisLabel, CoefficientVector};
use crate::error::{Error, Result};
use crate::geodesic::evolve_schedule;
use crate::linalg::{hermitian_expm, spectral_norm, unitary_power_gap, C64};
use crate::metric::{normalize_schedule, path_length, PenaltyWeights, Schedule, Segment};
use crate::random::{gaussian_on, haar_unitary, random_hermitian, trial_rng};
use crate::synthesis::{mean_bound, project_12body, projection_bound, slice_and_average, synthesize, trotter_defect, SCHEMA_VERSION};

/// Absolute slack on every inequality check.
pub const CHECK_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    /// Measured side of the inequality.
    pub lhs: f64,
    /// Bound side of the inequality.
    pub rhs: f64,
    /// `rhs − lhs` (or the distance to the nearest admissible limit).
    pub margin: f64,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema: String,
    pub campaign: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub worst_margin: f64,
    pub parameters: serde_json::Value,
    pub outcomes: Vec<TrialOutcome>,
}

impl CampaignReport {
    fn new(campaign: &str, seed: u64, parameters: serde_json::Value, outcomes: Vec<TrialOutcome>) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            campaign: campaign.to_string(),
            seed,
            trials: outcomes.len(),
            passed: outcomes.iter().filter(|o| o.pass).count(),
            worst_margin: outcomes.iter().map(|o| o.margin).fold(f64::INFINITY, f64::min),
            parameters,
            outcomes,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.passed == self.trials
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}/{} pass, worst margin {:.3e}",
            self.campaign, self.passed, self.trials, self.worst_margin
        )
    }
}

fn ensure_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    Ok(())
}

fn run_trials<F>(trials: usize, f: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(usize) -> Result<TrialOutcome> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Bracket closure of the one- and two-body labels.
pub fn closure_campaign(n: usize) -> Result<CampaignReport> {
    let report = verify_bracket_closure(n, 2)?;
    let outcome = TrialOutcome {
        index: 0,
        lhs: report.achieved_rank as f64,
        rhs: report.target_rank as f64,
        margin: report.achieved_rank as f64 - report.target_rank as f64,
        pass: report.spans(),
        detail: serde_json::to_value(&report)?,
    };
    Ok(CampaignReport::new("closure", 0, json!({ "n": n, "generator_max_body": 2 }), vec![outcome]))
}

/// `‖A^N − B^N‖ ≤ N‖A − B‖` for Haar pairs in dimensions 3 and 9 with `N ∈ {2, …, 8}`.
/// Every third pair is a close pair `B = A·e^{−iεH}`.
pub fn prop1_campaign(trials: usize, seed: u64) -> Result<CampaignReport> {
    ensure_trials(trials)?;
    let outcomes = run_trials(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let dim = if i % 2 == 0 { 3 } else { 9 };
        let power = 2 + (i % 7) as u32;
        let a = haar_unitary(&mut rng, dim)?;
        let b = if i % 3 == 0 {
            let h = random_hermitian(&mut rng, dim);
            let h = &h * C64::from(1.0 / spectral_norm(&h)?);
            let eps = 10f64.powf(-rng.random_range(1.0..4.0));
            &a * hermitian_expm(&h, eps)?
        } else {
            haar_unitary(&mut rng, dim)?
        };
        let gap = unitary_power_gap(&a, &b, power)?;
        Ok(TrialOutcome {
            index: i,
            lhs: gap.lhs,
            rhs: gap.rhs,
            margin: gap.rhs - gap.lhs,
            pass: gap.holds(CHECK_SLACK),
            detail: json!({ "dim": dim, "power": power }),
        })
    })?;
    Ok(CampaignReport::new("prop1", seed, json!({ "dims": [3, 9], "powers": [2, 8] }), outcomes))
}

/// Raw Gaussian Hamiltonian on all labels with the ≥3-body part scaled by `eta`.
fn damped_hamiltonian(rng: &mut impl Rng, n: usize, eta: f64) -> Result<CoefficientVector> {
    let labels = enumerate_basis(n, None)?;
    Ok(gaussian_on(rng, n, &labels).map_coefficients(|l, h| if l.body_weight() > 2 { eta * h } else { h }))
}

/// `‖U − U_P‖ ≤ 3^n·d/p` with `n` cycling through `1, 2, 3` and `p ∈ {9, 81}`, plus the
/// `p = 9^n` form `‖U − U_P‖ ≤ d/3^n` on the same raw schedule.
///
/// Segments are normalized to `F = 1`, so `d` is the total duration.
pub fn lemma3_campaign(trials: usize, seed: u64) -> Result<CampaignReport> {
    ensure_trials(trials)?;
    let outcomes = run_trials(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let n = 1 + i % 3;
        let p = if (i / 3) % 2 == 0 { 9.0 } else { 81.0 };
        let eta = rng.random_range(0.001..0.05);
        let segments = rng.random_range(2..=5usize);
        let raw = (0..segments)
            .map(|_| -> Result<Segment> {
                Ok(Segment { dt: rng.random_range(0.05..0.3), h: damped_hamiltonian(&mut rng, n, eta)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let raw = Schedule::new(n, raw)?;
        let check = |p: f64| -> Result<(f64, f64)> {
            let w = PenaltyWeights::penalty(p)?;
            let sch = normalize_schedule(&raw, &w)?;
            let gap = spectral_norm(&(evolve_schedule(&sch)? - evolve_schedule(&project_12body(&sch))?))?;
            Ok((gap, projection_bound(path_length(&sch, &w), n, p)))
        };
        let (lhs, rhs) = check(p)?;
        let (lhs_r, rhs_r) = check(9f64.powi(n as i32))?;
        let margin = (rhs - lhs).min(rhs_r - lhs_r);
        Ok(TrialOutcome {
            index: i,
            lhs,
            rhs,
            margin,
            pass: lhs <= rhs + CHECK_SLACK && lhs_r <= rhs_r + CHECK_SLACK,
            detail: json!({ "n": n, "p": p, "eta": eta, "default_penalty_gap": lhs_r, "default_penalty_bound": rhs_r }),
        })
    })?;
    Ok(CampaignReport::new("lemma3", seed, json!({ "n": [1, 2, 3], "p": [9, 81] }), outcomes))
}

/// Cap `c` values of the mean-Hamiltonian campaign: 1 and `4√2 ≈ 5.657`.
pub const LEMMA4_CAPS: [f64; 2] = [1.0, 5.657];
/// Slice widths of the mean-Hamiltonian campaign.
pub const LEMMA4_WIDTHS: [f64; 2] = [0.1, 0.01];
/// Largest admissible `‖U − e^{−iH̄Δ}‖ / (c²Δ²)`.
pub const LEMMA4_RATIO_LIMIT: f64 = 2.0;

/// `‖U − e^{−iH̄Δ}‖ ≤ 2(e^{cΔ} − 1 − cΔ)` for piecewise-constant `H` with `‖H(t)‖ ≤ c` on one
/// slice, cycling `n ∈ {1, 2}`, `c` and `Δ`; the ratio to `c²Δ²` must stay below
/// [`LEMMA4_RATIO_LIMIT`].
pub fn lemma4_campaign(trials: usize, seed: u64) -> Result<CampaignReport> {
    ensure_trials(trials)?;
    let outcomes = run_trials(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let n = 1 + i % 2;
        let c = LEMMA4_CAPS[(i / 2) % 2];
        let delta = LEMMA4_WIDTHS[(i / 4) % 2];
        let labels = enumerate_basis(n, None)?;
        let pieces = rng.random_range(2..=6usize);
        let cuts: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = cuts.iter().sum();
        let segments = cuts
            .iter()
            .map(|&cut| -> Result<Segment> {
                let h = gaussian_on(&mut rng, n, &labels);
                let scale = c * rng.random_range(0.5..=1.0) / spectral_norm(&decode(&h)?)?;
                Ok(Segment { dt: delta * cut / total, h: h.scale(scale) })
            })
            .collect::<Result<Vec<_>>>()?;
        let sch = Schedule::new(n, segments)?;
        let mean = slice_and_average(&sch, sch.total_duration())?.remove(0);
        let err = spectral_norm(&(evolve_schedule(&sch)? - hermitian_expm(&decode(&mean)?, sch.total_duration())?))?;
        let bound = mean_bound(c, delta);
        let ratio = err / (c * c * delta * delta);
        Ok(TrialOutcome {
            index: i,
            lhs: err,
            rhs: bound,
            margin: (bound - err).min(LEMMA4_RATIO_LIMIT - ratio),
            pass: err <= bound + CHECK_SLACK && ratio <= LEMMA4_RATIO_LIMIT,
            detail: json!({ "n": n, "c": c, "delta": delta, "pieces": pieces, "ratio": ratio }),
        })
    })?;
    Ok(CampaignReport::new(
        "lemma4",
        seed,
        json!({ "c": LEMMA4_CAPS, "delta": LEMMA4_WIDTHS, "ratio_limit": LEMMA4_RATIO_LIMIT }),
        outcomes,
    ))
}

/// Slice widths used to fit the Trotter slope.
pub const TROTTER_WIDTHS: [f64; 3] = [0.1, 0.05, 0.025];
/// Admissible range of the fitted slope.
pub const TROTTER_SLOPE_RANGE: (f64, f64) = (2.6, 3.4);

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Two noncommuting one-/two-body labels with random coefficients in `[0.3, 1]`.
pub fn noncommuting_pair(rng: &mut impl Rng, n: usize) -> Result<CoefficientVector> {
    let labels = enumerate_basis(n, Some(2))?;
    loop {
        let a = &labels[rng.random_range(0..labels.len())];
        let b = &labels[rng.random_range(0..labels.len())];
        if commutator_expand(a, b)?.is_empty() {
            continue;
        }
        let terms: [(BasisLabel, f64); 2] =
            [(a.clone(), rng.random_range(0.3..1.0)), (b.clone(), rng.random_range(0.3..1.0))];
        return CoefficientVector::from_terms(n, terms);
    }
}

/// Per-slice defect slope of the product formula over [`TROTTER_WIDTHS`].
pub fn trotter_campaign(trials: usize, seed: u64) -> Result<CampaignReport> {
    ensure_trials(trials)?;
    let (lo, hi) = TROTTER_SLOPE_RANGE;
    let outcomes = run_trials(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let n = 1 + i % 2;
        let mean = noncommuting_pair(&mut rng, n)?;
        let defects = TROTTER_WIDTHS
            .iter()
            .map(|&d| trotter_defect(&mean, d, d))
            .collect::<Result<Vec<_>>>()?;
        let slope = log_log_slope(&TROTTER_WIDTHS, &defects);
        Ok(TrialOutcome {
            index: i,
            lhs: slope,
            rhs: 3.0,
            margin: (slope - lo).min(hi - slope),
            pass: (lo..=hi).contains(&slope),
            detail: json!({ "n": n, "mean": mean, "defects": defects }),
        })
    })?;
    Ok(CampaignReport::new(
        "trotter",
        seed,
        json!({ "delta": TROTTER_WIDTHS, "slope_range": [lo, hi] }),
        outcomes,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub path_length: f64,
    pub projection_bound: f64,
    pub mean_bound_total: f64,
    pub trotter_bound_total: f64,
    pub a_priori_total: f64,
    pub measured_error: f64,
    pub gate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub parameter: String,
    pub rows: Vec<SweepRow>,
    /// For a penalty sweep: path length non-decreasing along the sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_length_monotone: Option<bool>,
}

pub const SWEEP_CSV_HEADER: &str =
    "value,path_length,projection_bound,mean_bound_total,trotter_bound_total,a_priori_total,measured_error,gate_count";

impl SweepReport {
    pub fn csv_body(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.value,
                r.path_length,
                r.projection_bound,
                r.mean_bound_total,
                r.trotter_bound_total,
                r.a_priori_total,
                r.measured_error,
                r.gate_count
            ));
        }
        out
    }
}

fn sweep_row(value: f64, sch: &Schedule, w: &PenaltyWeights, delta: f64) -> Result<SweepRow> {
    let report = synthesize(sch, w, delta)?;
    let b = report.budget;
    Ok(SweepRow {
        value,
        path_length: b.parameters.d,
        projection_bound: b.projection_bound.value,
        mean_bound_total: b.mean_bound_total.value,
        trotter_bound_total: b.trotter_bound_total.value,
        a_priori_total: b.a_priori_total,
        measured_error: b.measured_error,
        gate_count: b.gate_count,
    })
}

fn ensure_range(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep range is empty".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("sweep values must be positive".into()));
    }
    Ok(())
}

/// Same target unitary at every penalty: the raw schedule is renormalized to `F = 1` under
/// each `p` before synthesis, so its duration equals the path length at that `p`.
pub fn sweep_penalty(raw: &Schedule, ps: &[f64], s: f64, delta: f64) -> Result<SweepReport> {
    ensure_range(ps)?;
    let rows = ps
        .par_iter()
        .map(|&p| {
            let w = PenaltyWeights::new(p, s)?;
            sweep_row(p, &normalize_schedule(raw, &w)?, &w, delta)
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|r| r[1].path_length >= r[0].path_length - 1e-12);
    Ok(SweepReport { schema: SCHEMA_VERSION.into(), parameter: "p".into(), rows, path_length_monotone: Some(monotone) })
}

pub fn sweep_delta(sch: &Schedule, w: &PenaltyWeights, deltas: &[f64]) -> Result<SweepReport> {
    ensure_range(deltas)?;
    let rows = deltas
        .par_iter()
        .map(|&d| sweep_row(d, sch, w, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { schema: SCHEMA_VERSION.into(), parameter: "delta".into(), rows, path_length_monotone: None })
}

/// Damping of the three-and-more-body part of [`sweep_curve`]. Keeps the length at p = 1000
/// of order one so the normalized schedule stays cheap to synthesize.
pub const SWEEP_HIGH_BODY_SCALE: f64 = 1e-3;

/// Raw sweep curve: `segments` pieces of width `dt` with Gaussian coefficients on every label,
/// each scaled to unit coefficient norm, after which the part of body weight three or more is
/// multiplied by [`SWEEP_HIGH_BODY_SCALE`].
pub fn sweep_curve(n: usize, segments: usize, dt: f64, seed: u64) -> Result<Schedule> {
    let labels = enumerate_basis(n, None)?;
    let segs = (0..segments)
        .map(|j| {
            let h = gaussian_on(&mut trial_rng(seed, j as u64), n, &labels);
            let h = h.scale(1.0 / h.norm());
            let h = h.map_coefficients(|l, c| if l.body_weight() >= 3 { c * SWEEP_HIGH_BODY_SCALE } else { c });
            Segment { dt, h }
        })
        .collect();
    Schedule::new(n, segs)
}
