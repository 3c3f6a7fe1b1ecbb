//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qutrit_geometry::basis::{enumerate_basis, CoefficientVector, gell_mann, verify_bracket_closure, GellMannIndex};
use qutrit_geometry::campaigns::{lemma3_campaign, lemma4_campaign, prop1_campaign, trotter_campaign, CampaignReport};
use qutrit_geometry::geodesic::{
    analytic_stq_solution, approx_unitary, integrate_geodesic, integrate_stq_system, stq_rhs, StqInitialData,
    StqTriple,
};
use qutrit_geometry::linalg::{expectation_norm, max_abs, spectral_norm, Operator, C64};
use qutrit_geometry::metric::{cost_f, trace_energy, BodySplit, PenaltyWeights, Schedule};
use qutrit_geometry::random::{random_stq, trial_rng};
use qutrit_geometry::synthesis::{synthesize, SynthesisReport};
use qutrit_geometry::{Result, EXAMPLE_SCHEDULE_N2};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn run(&mut self, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(limit) = limit {
            if elapsed > limit {
                pass = false;
                detail.push_str(&format!("; over the {:.0?} limit", limit));
            }
        }
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} {:<4} {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn c1_basis_counts() -> Result<Outcome> {
    let expected = [(1, 8, 8), (2, 80, 80), (3, 728, 216), (4, 6560, 416)];
    let mut pass = true;
    let mut parts = vec![];
    for (n, total, upto2) in expected {
        let all = enumerate_basis(n, None)?.len();
        let low = enumerate_basis(n, Some(2))?.len();
        pass &= all == total && low == upto2 && low == 32 * n * n - 24 * n;
        parts.push(format!("n={n} {all}/{low}"));
    }
    Ok(outcome(pass, parts.join(", ")))
}

fn c2_closure() -> Result<Outcome> {
    let r2 = verify_bracket_closure(2, 2)?;
    let r3 = verify_bracket_closure(3, 2)?;
    Ok(outcome(
        r2.achieved_rank == 80 && r3.achieved_rank == 728,
        format!("rank {} (n=2), {} (n=3), depth {}", r2.achieved_rank, r3.achieved_rank, r3.depth_used),
    ))
}

fn c3_norm_facts() -> Result<Outcome> {
    let l8 = spectral_norm(&gell_mann(GellMannIndex::new(8)?))?;
    let z = C64::new(0.0, 0.0);
    let m = Operator::from_row_slice(2, 2, &[z, C64::new(1.0, 0.0), z, z]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = Operator::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(0.0, -h), C64::new(0.0, h), C64::new(-h, 0.0)]);
    let m1 = expectation_norm(&m)?;
    let mu1 = expectation_norm(&(&m * &u))?;
    let pass = (l8 - 2.0 / 3f64.sqrt()).abs() <= 1e-10
        && (m1 - 0.5).abs() <= 1e-6
        && (mu1 - (0.5 + 2f64.sqrt() / 4.0)).abs() <= 1e-6;
    Ok(outcome(pass, format!("|l8| = {l8:.12}, |M|1 = {m1:.8}, |MU|1 = {mu1:.8}")))
}

fn campaign_outcome(r: &CampaignReport) -> Outcome {
    outcome(r.all_pass(), r.summary())
}

fn c5_lemma4(r: &CampaignReport) -> Outcome {
    let ratio_at = |delta: f64| {
        r.outcomes
            .iter()
            .filter(|o| o.detail["delta"].as_f64() == Some(delta))
            .filter_map(|o| o.detail["ratio"].as_f64())
            .fold(0.0f64, f64::max)
    };
    let (wide, narrow) = (ratio_at(0.1), ratio_at(0.01));
    outcome(
        r.all_pass() && narrow <= 2.0 * wide.max(1e-3),
        format!("{}; max err/(c²Δ²) {wide:.3} at Δ=0.1, {narrow:.3} at Δ=0.01", r.summary()),
    )
}

fn central_residual(d: &StqInitialData, t: f64) -> Result<f64> {
    let h = 1e-5;
    let plus = analytic_stq_solution(d, t + h)?;
    let minus = analytic_stq_solution(d, t - h)?;
    let r = stq_rhs(&analytic_stq_solution(d, t)?, d.weights());
    let fd = |a: &Operator, b: &Operator| (a - b) * C64::from(1.0 / (2.0 * h));
    Ok(max_abs(&(fd(&plus.s, &minus.s) - r.s))
        .max(max_abs(&(fd(&plus.t, &minus.t) - r.t)))
        .max(max_abs(&(fd(&plus.q, &minus.q) - r.q))))
}

/// `F` of `H = S/s + T + Q/p` with each block weighted as its slot of the reduced system,
/// using `tr(X²)` over the slot's trace unit. Invariant under the conjugations of the flow.
fn block_cost(x: &StqTriple, w: &PenaltyWeights) -> f64 {
    let tr = |m: &Operator| (m * m).trace().re;
    (tr(&x.s) / (18.0 * w.s * w.s) + tr(&x.t) / 12.0 + tr(&x.q) / 8.0).sqrt()
}

struct GeodesicCheck {
    residual: f64,
    mismatch: f64,
    s_drift: f64,
    f_drift: f64,
    energy_drift: f64,
    flow_s_drift: f64,
}

fn geodesic_instance(i: usize) -> Result<GeodesicCheck> {
    let mut rng = trial_rng(700, i as u64);
    let p = [9.0, 30.0, 100.0, 300.0][i % 4];
    let s = [0.5, 1.0, 2.0][i % 3];
    let w = PenaltyWeights::new(p, s)?;
    let d = random_stq(&mut rng, &w)?;

    let mut residual = 0.0f64;
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        residual = residual.max(central_residual(&d, t)?);
    }

    let samples = integrate_stq_system(&d, 1.0, 400)?;
    let f0 = block_cost(&samples[0].triple, &w);
    let (mut mismatch, mut s_drift, mut f_drift) = (0.0f64, 0.0f64, 0.0f64);
    for sample in samples.iter().step_by(20) {
        mismatch = mismatch.max(sample.triple.max_abs_diff(&analytic_stq_solution(&d, sample.t)?));
        s_drift = s_drift.max(max_abs(&(&sample.triple.s - d.s0())));
        f_drift = f_drift.max((block_cost(&sample.triple, &w) - f0).abs() / f0);
    }

    // without a three-body part the reduced system is the full flow, so F itself is invariant
    let no_q = StqInitialData::from_split(&BodySplit { q: CoefficientVector::zero(3), ..d.split().clone() }, &w)?;
    let exact_flow = integrate_geodesic(&no_q.momentum(), &w, 1.0, 200)?;
    let g0 = cost_f(&exact_flow[0].h, &w);
    for state in &exact_flow {
        f_drift = f_drift.max((cost_f(&state.h, &w) - g0).abs() / g0);
    }

    let flow = integrate_geodesic(&d.momentum(), &w, 1.0, 200)?;
    let e0 = trace_energy(&flow[0].h, &w);
    let s0 = flow[0].l.body_part(1);
    let (mut energy_drift, mut flow_s_drift) = (0.0f64, 0.0f64);
    for state in &flow {
        energy_drift = energy_drift.max((trace_energy(&state.h, &w) - e0).abs() / e0);
        flow_s_drift = flow_s_drift.max(state.l.body_part(1).max_abs_diff(&s0)?);
    }
    Ok(GeodesicCheck { residual, mismatch, s_drift, f_drift, energy_drift, flow_s_drift })
}

fn c7_geodesics() -> Result<Outcome> {
    let checks = (0..20).into_par_iter().map(geodesic_instance).collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&GeodesicCheck) -> f64| checks.iter().map(f).fold(0.0f64, f64::max);
    let (res, mis, sd, fd, ed, fsd) = (
        worst(|c| c.residual),
        worst(|c| c.mismatch),
        worst(|c| c.s_drift),
        worst(|c| c.f_drift),
        worst(|c| c.energy_drift),
        worst(|c| c.flow_s_drift),
    );
    let pass = res <= 1e-7 && mis <= 1e-6 && sd <= 1e-8 && fd <= 1e-6 && ed <= 1e-6 && fsd <= 1e-8;
    Ok(outcome(
        pass,
        format!(
            "20 instances: residual {res:.1e}, numeric vs closed form {mis:.1e}, S drift {sd:.1e}, \
             F drift {fd:.1e}; full flow energy drift {ed:.1e}, one-body drift {fsd:.1e}"
        ),
    ))
}

fn c8_trend() -> Result<Outcome> {
    let t = 0.5;
    let base = random_stq(&mut trial_rng(800, 0), &PenaltyWeights::new(100.0, 1.0)?)?;
    let gaps = [1e2, 1e3, 1e4]
        .iter()
        .map(|&p| -> Result<f64> {
            let d = base.with_weights(PenaltyWeights::new(p, 1.0)?);
            let u = integrate_stq_system(&d, t, 1000)?.pop().expect("nonempty").u;
            spectral_norm(&(u - approx_unitary(&d, t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(outcome(
        gaps[0] > gaps[1] && gaps[1] > gaps[2],
        format!("|U - Ũ| at p = 1e2, 1e3, 1e4: {:.3e}, {:.3e}, {:.3e}", gaps[0], gaps[1], gaps[2]),
    ))
}

fn c10_end_to_end() -> Result<(Outcome, Vec<SynthesisReport>)> {
    let sch = Schedule::from_json_str(EXAMPLE_SCHEDULE_N2)?;
    let w = PenaltyWeights::default_for(sch.n());
    let coarse = synthesize(&sch, &w, 0.1)?;
    let fine = synthesize(&sch, &w, 0.05)?;
    let (bc, bf) = (&coarse.budget, &fine.budget);
    let pass = bc.measured_error <= 0.1
        && bc.certified()
        && bf.certified()
        && bf.measured_error <= bc.measured_error + 1e-9;
    let detail = format!(
        "Δ=0.1: measured {:.3e} ≤ a priori {:.3e}, {} gates; Δ=0.05: measured {:.3e}, {} gates",
        bc.measured_error, bc.a_priori_total, bc.gate_count, bf.measured_error, bf.gate_count
    );
    Ok((outcome(pass, detail), vec![coarse, fine]))
}

fn main() -> ExitCode {
    let mut runner = Runner { failures: 0 };
    let reports: RefCell<Vec<(String, String)>> = RefCell::new(vec![]);
    let keep = |key: &str, text: String| reports.borrow_mut().push((key.to_string(), text));

    runner.run(1, "basis counting", Some(Duration::from_secs(1)), c1_basis_counts);
    runner.run(2, "bracket closure", Some(Duration::from_secs(60)), c2_closure);
    runner.run(3, "operator-norm facts", None, c3_norm_facts);
    runner.run(4, "power-gap inequality", Some(Duration::from_secs(30)), || {
        let r = prop1_campaign(1000, 2024)?;
        keep("prop1", serde_json::to_string(&r)?);
        Ok(campaign_outcome(&r))
    });
    runner.run(5, "mean-Hamiltonian bound", Some(Duration::from_secs(60)), || {
        let r = lemma4_campaign(50, 2024)?;
        keep("lemma4", serde_json::to_string(&r)?);
        Ok(c5_lemma4(&r))
    });
    runner.run(6, "projection bound", Some(Duration::from_secs(120)), || {
        let r = lemma3_campaign(50, 2024)?;
        keep("lemma3", serde_json::to_string(&r)?);
        Ok(campaign_outcome(&r))
    });
    runner.run(7, "three-qutrit geodesics", None, c7_geodesics);
    runner.run(8, "approximate-unitary trend", None, c8_trend);
    runner.run(9, "product-formula order", None, || {
        let r = trotter_campaign(40, 2024)?;
        keep("trotter", serde_json::to_string(&r)?);
        Ok(campaign_outcome(&r))
    });
    runner.run(10, "end-to-end synthesis", Some(Duration::from_secs(120)), || {
        let (o, synth) = c10_end_to_end()?;
        for (i, r) in synth.iter().enumerate() {
            keep(&format!("synthesis{i}"), serde_json::to_string(r)?);
        }
        Ok(o)
    });
    runner.run(11, "determinism", None, || {
        let mut mismatched = vec![];
        let sch = Schedule::from_json_str(EXAMPLE_SCHEDULE_N2)?;
        let w = PenaltyWeights::default_for(2);
        let reports = reports.borrow();
        for (key, first) in reports.iter() {
            let again = match key.as_str() {
                "prop1" => serde_json::to_string(&prop1_campaign(1000, 2024)?)?,
                "lemma4" => serde_json::to_string(&lemma4_campaign(50, 2024)?)?,
                "lemma3" => serde_json::to_string(&lemma3_campaign(50, 2024)?)?,
                "trotter" => serde_json::to_string(&trotter_campaign(40, 2024)?)?,
                "synthesis0" => serde_json::to_string(&synthesize(&sch, &w, 0.1)?)?,
                "synthesis1" => serde_json::to_string(&synthesize(&sch, &w, 0.05)?)?,
                _ => continue,
            };
            if &again != first {
                mismatched.push(key.clone());
            }
        }
        Ok(outcome(
            mismatched.is_empty() && reports.len() == 6,
            format!("{} reports re-run, {} differ {:?}", reports.len(), mismatched.len(), mismatched),
        ))
    });

    if runner.failures == 0 {
        println!("all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria fail", runner.failures);
        ExitCode::FAILURE
    }
}
