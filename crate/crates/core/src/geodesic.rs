//! Geodesics of the penalty metric and the three-qutrit closed form.
//!
//! Two flows are provided:
//!
//! * [`integrate_geodesic`] integrates the full Euler–Arnold equation `L̇ = i[L, 𝒢⁻¹(L)]`
//!   in coefficient space, together with `U̇ = −i·𝒢⁻¹(L)·U`;
//! * [`integrate_stq_system`] integrates the reduced three-qutrit system
//!   `Ṡ = 0`, `Ṫ = i[(1−s⁻¹)S + (1−p⁻¹)Q, T]`, `Q̇ = i(p⁻¹−s⁻¹)[S, Q]` on dense operators,
//!   whose exact solution is [`analytic_stq_solution`].
//!
//! The reduced system assigns the whole of `[Q, T]` to the two-body sector. Its
//! three-body component is nonzero in general, so the two flows agree only when `Q₀ = 0`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::basis::{basis_table, decode, encode, CoefficientVector};
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, ensure_hermitian, hermitian_expm, identity, spectral_norm, unitarity_defect, DenseOperatorJson,
    Operator, C64,
};
use crate::metric::{apply_g_inverse, cost_f, split_stq, trace_energy, BodySplit, PenaltyWeights, Schedule};

const I: C64 = C64::new(0.0, 1.0);

/// Relative energy drift above which an integration is rejected.
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-3;

/// Smallest admissible eigenvalue gap of `S₀ + Q₀` for the first-order approximation.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// `L̇ = i[L, 𝒢⁻¹(L)]` as coefficients.
pub fn geodesic_rhs(l: &CoefficientVector, w: &PenaltyWeights) -> Result<CoefficientVector> {
    let table = basis_table(l.n())?;
    let ld = decode(l)?;
    let hd = decode(&apply_g_inverse(l, w))?;
    let rhs = commutator(&ld, &hd) * I;
    Ok(table.from_array(&table.encode_array(&rhs)))
}

/// One sample of an integrated geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub t: f64,
    /// Momentum `𝒢(H)`.
    pub l: CoefficientVector,
    /// Velocity `H = 𝒢⁻¹(L)`.
    pub h: CoefficientVector,
    pub u: Operator,
}

#[derive(Serialize)]
struct GeodesicStateJson<'a> {
    t: f64,
    l: &'a CoefficientVector,
    h: &'a CoefficientVector,
    u: DenseOperatorJson,
}

impl GeodesicState {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(&GeodesicStateJson { t: self.t, l: &self.l, h: &self.h, u: (&self.u).into() })?)
    }

    pub fn row(&self, w: &PenaltyWeights) -> Result<TrajectoryRow> {
        let n = self.l.n();
        let part = |keep: &dyn Fn(usize) -> bool| -> Result<f64> {
            spectral_norm(&decode(&self.l.filter(|label| keep(label.body_weight())))?)
        };
        Ok(TrajectoryRow {
            t: self.t,
            cost: cost_f(&self.h, w),
            norm_s: part(&|b| b == 1)?,
            norm_t: part(&|b| b == 2)?,
            norm_q: if n >= 3 { part(&|b| b >= 3)? } else { 0.0 },
            unitarity_defect: unitarity_defect(&self.u),
        })
    }
}

fn validate_steps(t_f: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidParameter("step count must be at least 1".into()));
    }
    if !(t_f.is_finite() && t_f > 0.0) {
        return Err(Error::InvalidParameter(format!("final time must be positive, got {t_f}")));
    }
    Ok(t_f / steps as f64)
}

/// Fourth-order Runge–Kutta integration of the geodesic flow and its unitary.
///
/// Returns `steps + 1` states from `t = 0` to `t_f`. The conserved trace-form energy
/// `tr(H𝒢(H))/(2·3^{n−1})` is monitored; a relative drift above
/// [`ENERGY_DRIFT_LIMIT`] is reported as [`Error::UnstableIntegration`].
pub fn integrate_geodesic(
    l0: &CoefficientVector,
    w: &PenaltyWeights,
    t_f: f64,
    steps: usize,
) -> Result<Vec<GeodesicState>> {
    let dt = validate_steps(t_f, steps)?;
    let n = l0.n();
    let table = basis_table(n)?;
    let dim = table.dim();
    let g_inv: Vec<f64> = table.labels().iter().map(|l| 1.0 / w.g_weight(l.body_weight())).collect();

    let velocity = |l: &[f64]| -> Vec<f64> { l.iter().zip(&g_inv).map(|(x, g)| x * g).collect() };
    // Derivatives of (L, U) at the given state.
    let deriv = |l: &[f64], u: &Operator| -> (Vec<f64>, Operator) {
        let ld = table.decode_array(l);
        let hd = table.decode_array(&velocity(l));
        let dl = table.encode_array(&(commutator(&ld, &hd) * I));
        let du = (hd * u) * (-I);
        (dl, du)
    };
    let shift = |l: &[f64], k: &[f64], a: f64| -> Vec<f64> { l.iter().zip(k).map(|(x, y)| x + a * y).collect() };

    let state = |t: f64, l: &[f64], u: &Operator| {
        let lc = table.from_array(l);
        let h = apply_g_inverse(&lc, w);
        GeodesicState { t, l: lc, h, u: u.clone() }
    };

    let mut l = table.to_array(l0)?;
    let mut u = identity(dim);
    let e0 = trace_energy(&apply_g_inverse(l0, w), w);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state(0.0, &l, &u));
    for step in 0..steps {
        let (k1l, k1u) = deriv(&l, &u);
        let (k2l, k2u) = deriv(&shift(&l, &k1l, dt / 2.0), &(&u + &k1u * C64::from(dt / 2.0)));
        let (k3l, k3u) = deriv(&shift(&l, &k2l, dt / 2.0), &(&u + &k2u * C64::from(dt / 2.0)));
        let (k4l, k4u) = deriv(&shift(&l, &k3l, dt), &(&u + &k3u * C64::from(dt)));
        for i in 0..l.len() {
            l[i] += dt / 6.0 * (k1l[i] + 2.0 * k2l[i] + 2.0 * k3l[i] + k4l[i]);
        }
        u += (k1u + k2u * C64::from(2.0) + k3u * C64::from(2.0) + k4u) * C64::from(dt / 6.0);
        let s = state((step + 1) as f64 * dt, &l, &u);
        let e = trace_energy(&s.h, w);
        let drift = if e0 > 0.0 { (e - e0).abs() / e0 } else { e.abs() };
        if drift > ENERGY_DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::UnstableIntegration { drift });
        }
        out.push(s);
    }
    Ok(out)
}

/// Initial momentum parts `S₀`, `T₀`, `Q₀` of a three-qutrit geodesic, with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StqInitialData {
    s0: Operator,
    t0: Operator,
    q0: Operator,
    split: BodySplit,
    w: PenaltyWeights,
}

impl StqInitialData {
    /// Validates that `s0`, `t0`, `q0` are Hermitian with pure body weight 1, 2, 3.
    pub fn new(s0: Operator, t0: Operator, q0: Operator, w: PenaltyWeights) -> Result<Self> {
        let mut parts = Vec::with_capacity(3);
        for (name, op, weight) in [("S0", &s0, 1), ("T0", &t0, 2), ("Q0", &q0, 3)] {
            ensure_hermitian(op)?;
            let c = encode(op, 3)?;
            if let Some(bad) = c.labels().find(|l| l.body_weight() != weight) {
                return Err(Error::BodyWeight(format!("{name} must be {weight}-body, found term {bad}")));
            }
            parts.push(c);
        }
        let q = parts.pop().expect("three parts");
        let t = parts.pop().expect("three parts");
        let s = parts.pop().expect("three parts");
        Ok(Self { s0, t0, q0, split: BodySplit { s, t, q }, w })
    }

    pub fn from_split(split: &BodySplit, w: &PenaltyWeights) -> Result<Self> {
        Self::new(decode(&split.s)?, decode(&split.t)?, decode(&split.q)?, *w)
    }

    /// Splits a three-qutrit momentum into its body classes.
    pub fn from_momentum(l0: &CoefficientVector, w: &PenaltyWeights) -> Result<Self> {
        Self::from_split(&split_stq(l0)?, w)
    }

    pub fn s0(&self) -> &Operator {
        &self.s0
    }

    pub fn t0(&self) -> &Operator {
        &self.t0
    }

    pub fn q0(&self) -> &Operator {
        &self.q0
    }

    pub fn split(&self) -> &BodySplit {
        &self.split
    }

    pub fn weights(&self) -> &PenaltyWeights {
        &self.w
    }

    /// Same data under different weights.
    pub fn with_weights(&self, w: PenaltyWeights) -> Self {
        Self { w, ..self.clone() }
    }

    /// `L₀ = S₀ + T₀ + Q₀` as coefficients.
    pub fn momentum(&self) -> CoefficientVector {
        self.split.reassemble()
    }
}

/// Dense `(S, T, Q)` triple of the reduced three-qutrit system.
#[derive(Debug, Clone, PartialEq)]
pub struct StqTriple {
    pub s: Operator,
    pub t: Operator,
    pub q: Operator,
}

impl StqTriple {
    /// `H = S/s + T + Q/p`.
    pub fn hamiltonian(&self, w: &PenaltyWeights) -> Operator {
        &self.s * C64::from(1.0 / w.s) + &self.t + &self.q * C64::from(1.0 / w.p)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = |a: &Operator, b: &Operator| (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        d(&self.s, &other.s).max(d(&self.t, &other.t)).max(d(&self.q, &other.q))
    }

    fn axpy(&self, a: f64, k: &Self) -> Self {
        let a = C64::from(a);
        Self { s: &self.s + &k.s * a, t: &self.t + &k.t * a, q: &self.q + &k.q * a }
    }
}

/// `e^{iτH} X e^{−iτH}`.
fn conjugate(x: &Operator, h: &Operator, tau: f64) -> Result<Operator> {
    let e = hermitian_expm(h, tau)?;
    Ok(e.adjoint() * x * e)
}

/// Closed-form solution of the reduced system at time `t`.
pub fn analytic_stq_solution(d: &StqInitialData, t: f64) -> Result<StqTriple> {
    let w = d.weights();
    let a = t * (1.0 / w.p - 1.0 / w.s);
    let b = t * (1.0 - 1.0 / w.p);
    let sq = d.s0() + d.q0();
    let inner = conjugate(d.t0(), &sq, b)?;
    Ok(StqTriple {
        s: d.s0().clone(),
        t: conjugate(&inner, d.s0(), a)?,
        q: conjugate(d.q0(), d.s0(), a)?,
    })
}

/// Right-hand side of the reduced system.
pub fn stq_rhs(x: &StqTriple, w: &PenaltyWeights) -> StqTriple {
    let dim = x.s.nrows();
    let gen_t = &x.s * C64::from(1.0 - 1.0 / w.s) + &x.q * C64::from(1.0 - 1.0 / w.p);
    StqTriple {
        s: Operator::zeros(dim, dim),
        t: commutator(&gen_t, &x.t) * I,
        q: commutator(&x.s, &x.q) * (I * (1.0 / w.p - 1.0 / w.s)),
    }
}

/// One sample of the reduced system with the unitary generated by `H = S/s + T + Q/p`.
#[derive(Debug, Clone, PartialEq)]
pub struct StqSample {
    pub t: f64,
    pub triple: StqTriple,
    pub u: Operator,
}

impl StqSample {
    pub fn row(&self, w: &PenaltyWeights) -> Result<TrajectoryRow> {
        let h = self.triple.hamiltonian(w);
        Ok(TrajectoryRow {
            t: self.t,
            cost: cost_f(&encode(&h, 3)?, w),
            norm_s: spectral_norm(&self.triple.s)?,
            norm_t: spectral_norm(&self.triple.t)?,
            norm_q: spectral_norm(&self.triple.q)?,
            unitarity_defect: unitarity_defect(&self.u),
        })
    }
}

/// Fourth-order Runge–Kutta integration of the reduced system coupled with `U̇ = −iHU`.
pub fn integrate_stq_system(d: &StqInitialData, t_f: f64, steps: usize) -> Result<Vec<StqSample>> {
    let dt = validate_steps(t_f, steps)?;
    let w = *d.weights();
    let deriv = |x: &StqTriple, u: &Operator| (stq_rhs(x, &w), (x.hamiltonian(&w) * u) * (-I));
    let mut x = StqTriple { s: d.s0().clone(), t: d.t0().clone(), q: d.q0().clone() };
    let mut u = identity(x.s.nrows());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(StqSample { t: 0.0, triple: x.clone(), u: u.clone() });
    for step in 0..steps {
        let (k1, j1) = deriv(&x, &u);
        let (k2, j2) = deriv(&x.axpy(dt / 2.0, &k1), &(&u + &j1 * C64::from(dt / 2.0)));
        let (k3, j3) = deriv(&x.axpy(dt / 2.0, &k2), &(&u + &j2 * C64::from(dt / 2.0)));
        let (k4, j4) = deriv(&x.axpy(dt, &k3), &(&u + &j3 * C64::from(dt)));
        x = x
            .axpy(dt / 6.0, &k1)
            .axpy(dt / 3.0, &k2)
            .axpy(dt / 3.0, &k3)
            .axpy(dt / 6.0, &k4);
        u += (j1 + j2 * C64::from(2.0) + j3 * C64::from(2.0) + j4) * C64::from(dt / 6.0);
        out.push(StqSample { t: (step + 1) as f64 * dt, triple: x.clone(), u: u.clone() });
    }
    Ok(out)
}

/// `H̃(t) = S₀/s + e^{−its⁻¹S₀} e^{it(S₀+Q₀)} T₀ e^{−it(S₀+Q₀)} e^{its⁻¹S₀}`.
pub fn approx_hamiltonian(d: &StqInitialData, t: f64) -> Result<Operator> {
    let s_inv = 1.0 / d.weights().s;
    let sq = d.s0() + d.q0();
    let inner = conjugate(d.t0(), &sq, t)?;
    let rotated = conjugate(&inner, d.s0(), -t * s_inv)?;
    Ok(d.s0() * C64::from(s_inv) + rotated)
}

/// `Ũ(t) = e^{−its⁻¹S₀} e^{it(S₀+Q₀)} e^{−it(S₀+T₀+Q₀)}`.
pub fn approx_unitary(d: &StqInitialData, t: f64) -> Result<Operator> {
    let sq = d.s0() + d.q0();
    let full = &sq + d.t0();
    Ok(hermitian_expm(d.s0(), t / d.weights().s)? * hermitian_expm(&sq, -t)? * hermitian_expm(&full, t)?)
}

/// First-order form `e^{−its⁻¹S₀} e^{−it·ℛ(T₀)}`, with `ℛ(T₀)` the diagonal of `T₀` in
/// the eigenbasis of `S₀ + Q₀`.
pub fn perturbative_unitary(d: &StqInitialData, t: f64) -> Result<Operator> {
    let eig = (d.s0() + d.q0()).symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    let gap = values.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    if gap < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateSpectrum { gap, threshold: DEGENERACY_THRESHOLD });
    }
    let v = &eig.eigenvectors;
    let in_basis = v.adjoint() * d.t0() * v;
    let diag = Operator::from_diagonal(&in_basis.diagonal().map(|z| C64::from(z.re)));
    let r = v * diag * v.adjoint();
    Ok(hermitian_expm(d.s0(), t / d.weights().s)? * hermitian_expm(&r, t)?)
}

/// Time-ordered product of segment exponentials; later segments multiply on the left.
pub fn evolve_schedule(sch: &Schedule) -> Result<Operator> {
    let dim = 3usize.pow(sch.n() as u32);
    let mut u = identity(dim);
    for seg in sch.segments() {
        u = hermitian_expm(&decode(&seg.h)?, seg.dt)? * u;
    }
    Ok(u)
}

/// One line of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    /// `F(H)`.
    pub cost: f64,
    pub norm_s: f64,
    pub norm_t: f64,
    pub norm_q: f64,
    pub unitarity_defect: f64,
}

pub const TRAJECTORY_HEADER: &str = "t,F,norm_S,norm_T,norm_Q,unitarity_defect";

/// CSV body (header plus rows) for a trajectory.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.cost, r.norm_s, r.norm_t, r.norm_q, r.unitarity_defect
        );
    }
    out
}
