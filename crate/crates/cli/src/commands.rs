use std::fs;
use std::path::Path;

use qutrit_geometry::basis::{enumerate_basis, one_two_body_count, MAX_DENSE_SITES};
use qutrit_geometry::campaigns::{
    closure_campaign, lemma3_campaign, lemma4_campaign, prop1_campaign, sweep_curve, sweep_delta, sweep_penalty,
    trotter_campaign, CampaignReport,
};
use qutrit_geometry::geodesic::{
    analytic_stq_solution, integrate_geodesic, integrate_stq_system, trajectory_csv, StqInitialData, StqSample,
    TrajectoryRow,
};
use qutrit_geometry::linalg::identity;
use qutrit_geometry::metric::{normalize_schedule, PenaltyWeights, Schedule};
use qutrit_geometry::random::{random_stq, trial_rng, unit_coefficients};
use qutrit_geometry::synthesis::synthesize;
use qutrit_geometry::EXAMPLE_SCHEDULE_N2;
use serde::Serialize;

use crate::output::{csv_document, emit, json_document, CliError, CliResult};
use crate::{
    BasisArgs, Cli, Command, Format, GeodesicArgs, GeodesicMode, Lemma, ScheduleSource, SweepArgs, SweepParameter,
    SynthesizeArgs, VerifyArgs,
};

/// Largest site count for commands that build dense operators.
const MAX_DENSE_COMMAND_SITES: usize = 3;

/// Runs the command and returns the process exit code.
pub fn run(cli: &Cli) -> CliResult<u8> {
    let config = serde_json::to_value(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Basis(args) => basis(args, cli.format, &config, out),
        Command::Verify(args) => verify(args, cli, &config, out),
        Command::Geodesic(args) => geodesic(args, cli, &config, out),
        Command::Synthesize(args) => synthesize_cmd(args, cli.format, &config, out),
        Command::Sweep(args) => sweep(args, cli, &config, out),
    }
}

fn guard_sites(n: usize, max: usize) -> CliResult<()> {
    if n == 0 || n > max {
        return Err(CliError::Usage(format!(
            "n = {n} is outside the supported range 1..={max} for this command"
        )));
    }
    Ok(())
}

fn penalty(p: Option<f64>, s: f64, n: usize) -> CliResult<PenaltyWeights> {
    let p = p.unwrap_or_else(|| 9f64.powi(n as i32));
    PenaltyWeights::new(p, s).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct BasisListing {
    n: usize,
    total: usize,
    upto2body: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_body: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    listed: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    labels: Vec<qutrit_geometry::basis::BasisLabel>,
}

fn basis(args: &BasisArgs, format: Format, config: &serde_json::Value, out: Option<&Path>) -> CliResult<u8> {
    guard_sites(args.n, MAX_DENSE_SITES)?;
    let total = 9usize.pow(args.n as u32) - 1;
    let upto2body = one_two_body_count(args.n);
    let labels = if args.list || args.max_body.is_some() { enumerate_basis(args.n, args.max_body)? } else { vec![] };
    let listing = BasisListing {
        n: args.n,
        total,
        upto2body,
        max_body: args.max_body,
        listed: (args.list || args.max_body.is_some()).then_some(labels.len()),
        labels: if args.list { labels } else { vec![] },
    };
    let text = match format {
        Format::Json => json_document(config, "basis", &listing)?,
        Format::Csv => {
            let mut body = String::from("index,sites,gm,body_weight\n");
            for (i, l) in listing.labels.iter().enumerate() {
                let sites: Vec<String> = l.sites().iter().map(u8::to_string).collect();
                let gm: Vec<String> = l.gm().iter().map(|k| k.get().to_string()).collect();
                body.push_str(&format!("{i},{},{},{}\n", sites.join(" "), gm.join(" "), l.body_weight()));
            }
            csv_document(config, &[format!("total: {total}"), format!("upto2body: {upto2body}")], &body)?
        }
    };
    emit(out, &text, Some(&format!("n = {}: total {total}, up to two-body {upto2body}", args.n)))?;
    Ok(0)
}

fn verify(args: &VerifyArgs, cli: &Cli, config: &serde_json::Value, out: Option<&Path>) -> CliResult<u8> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let report: CampaignReport = match args.lemma {
        Lemma::Closure => {
            guard_sites(args.n, MAX_DENSE_COMMAND_SITES)?;
            closure_campaign(args.n)?
        }
        Lemma::Prop1 => prop1_campaign(args.trials, cli.seed)?,
        Lemma::Lemma3 => lemma3_campaign(args.trials, cli.seed)?,
        Lemma::Lemma4 => lemma4_campaign(args.trials, cli.seed)?,
        Lemma::Trotter => trotter_campaign(args.trials, cli.seed)?,
    };
    let text = match cli.format {
        Format::Json => json_document(config, "campaign", &report)?,
        Format::Csv => {
            let mut body = String::from("index,lhs,rhs,margin,pass\n");
            for o in &report.outcomes {
                body.push_str(&format!("{},{},{},{},{}\n", o.index, o.lhs, o.rhs, o.margin, o.pass));
            }
            csv_document(config, &[report.summary()], &body)?
        }
    };
    let mut summary = report.summary();
    if args.lemma == Lemma::Closure {
        let o = &report.outcomes[0];
        summary = format!("closure n = {}: rank {}/{}, {}", args.n, o.lhs, o.rhs, if o.pass { "pass" } else { "fail" });
    }
    emit(out, &text, Some(&summary))?;
    Ok(if report.all_pass() { 0 } else { 3 })
}

#[derive(Serialize)]
struct GeodesicOutput {
    mode: GeodesicMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<f64>,
    rows: Vec<TrajectoryRow>,
}

fn geodesic(args: &GeodesicArgs, cli: &Cli, config: &serde_json::Value, out: Option<&Path>) -> CliResult<u8> {
    guard_sites(args.n, MAX_DENSE_COMMAND_SITES)?;
    if args.mode != GeodesicMode::Numeric && args.n != 3 {
        return Err(CliError::Usage(format!(
            "{:?} mode needs the three-qutrit S/T/Q structure (n = 3), got n = {}",
            args.mode, args.n
        )
        .to_lowercase()));
    }
    if args.steps == 0 || !(args.t_f.is_finite() && args.t_f > 0.0) {
        return Err(CliError::Usage("--steps must be positive and --t-f must be positive".into()));
    }
    let w = penalty(args.p, args.s, args.n)?;
    let mut rng = trial_rng(cli.seed, 0);
    let mut discrepancy = None;
    let rows: Vec<TrajectoryRow> = match args.mode {
        GeodesicMode::Numeric => {
            let l0 = if args.n == 3 { random_stq(&mut rng, &w)?.momentum() } else { unit_coefficients(&mut rng, args.n, None)? };
            let traj = integrate_geodesic(&l0, &w, args.t_f, args.steps)?;
            if let Some(path) = &args.states {
                let mut lines = String::new();
                for s in &traj {
                    lines.push_str(&s.to_json_line()?);
                    lines.push('\n');
                }
                fs::write(path, lines)?;
            }
            traj.iter().map(|s| s.row(&w)).collect::<Result<_, _>>()?
        }
        GeodesicMode::Analytic => {
            let d = random_stq(&mut rng, &w)?;
            (0..=args.steps)
                .map(|k| {
                    let t = args.t_f * k as f64 / args.steps as f64;
                    let triple = analytic_stq_solution(&d, t)?;
                    // The closed form carries no unitary; the column reports the identity's defect.
                    StqSample { t, triple, u: identity(27) }.row(&w)
                })
                .collect::<Result<_, _>>()?
        }
        GeodesicMode::Compare => {
            let d: StqInitialData = random_stq(&mut rng, &w)?;
            let samples = integrate_stq_system(&d, args.t_f, args.steps)?;
            let mut worst = 0.0f64;
            for s in &samples {
                worst = worst.max(s.triple.max_abs_diff(&analytic_stq_solution(&d, s.t)?));
            }
            discrepancy = Some(worst);
            samples.iter().map(|s| s.row(&w)).collect::<Result<_, _>>()?
        }
    };
    let extra: Vec<String> = discrepancy.iter().map(|d| format!("max_discrepancy: {d}")).collect();
    let text = match cli.format {
        Format::Json => json_document(config, "trajectory", &GeodesicOutput { mode: args.mode, max_discrepancy: discrepancy, rows: rows.clone() })?,
        Format::Csv => csv_document(config, &extra, &trajectory_csv(&rows))?,
    };
    let summary = match discrepancy {
        Some(d) => format!("{} rows, max discrepancy {d:.3e}", rows.len()),
        None => format!("{} rows", rows.len()),
    };
    emit(out, &text, Some(&summary))?;
    Ok(0)
}

fn load_schedule(source: &ScheduleSource) -> CliResult<Option<Schedule>> {
    if source.example {
        return Ok(Some(Schedule::from_json_str(EXAMPLE_SCHEDULE_N2)?));
    }
    match &source.schedule {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            Ok(Some(Schedule::from_json_str(&text)?))
        }
        None => Ok(None),
    }
}

fn synthesize_cmd(args: &SynthesizeArgs, format: Format, config: &serde_json::Value, out: Option<&Path>) -> CliResult<u8> {
    let sch = load_schedule(&args.source)?
        .ok_or_else(|| CliError::Usage("a schedule is required: pass --schedule FILE or --example".into()))?;
    guard_sites(sch.n(), MAX_DENSE_COMMAND_SITES)?;
    let w = penalty(args.p, args.s, sch.n())?;
    let report = synthesize(&sch, &w, args.delta)?;
    let b = &report.budget;
    let summary = format!(
        "gates {}, a_priori_total {:.6e}, measured_error {:.6e}",
        b.gate_count, b.a_priori_total, b.measured_error
    );
    let text = match format {
        Format::Json if args.unit_norm => {
            let mut value = serde_json::to_value(&report)?;
            value["gates"] = serde_json::to_value(report.gates.to_json(true))?;
            json_document(config, "report", &value)?
        }
        Format::Json => json_document(config, "report", &report)?,
        Format::Csv => csv_document(config, std::slice::from_ref(&summary), &report.slices_csv())?,
    };
    emit(out, &text, Some(&summary))?;
    Ok(0)
}

fn sweep(args: &SweepArgs, cli: &Cli, config: &serde_json::Value, out: Option<&Path>) -> CliResult<u8> {
    if args.values.is_empty() {
        return Err(CliError::Usage("sweep range is empty: pass --values v1,v2,..".into()));
    }
    if args.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Usage("sweep values must be positive".into()));
    }
    let given = load_schedule(&args.source)?;
    let n = given.as_ref().map_or(args.n, Schedule::n);
    guard_sites(n, MAX_DENSE_COMMAND_SITES)?;
    let generated = given.is_none();
    let raw = match given {
        Some(s) => s,
        None => sweep_curve(n, args.segments, args.dt, cli.seed)?,
    };
    let report = match args.parameter {
        SweepParameter::P => sweep_penalty(&raw, &args.values, args.s, args.delta)?,
        SweepParameter::Delta => {
            let w = penalty(args.p, args.s, n)?;
            // a supplied schedule must already be normalized, exactly as for synthesize
            let sch = if generated { normalize_schedule(&raw, &w)? } else { raw };
            sweep_delta(&sch, &w, &args.values)?
        }
    };
    let extra: Vec<String> =
        report.path_length_monotone.iter().map(|m| format!("path_length_monotone: {m}")).collect();
    let text = match cli.format {
        Format::Json => json_document(config, "sweep", &report)?,
        Format::Csv => csv_document(config, &extra, &report.csv_body())?,
    };
    emit(out, &text, Some(&format!("{} rows", report.rows.len())))?;
    Ok(0)
}
