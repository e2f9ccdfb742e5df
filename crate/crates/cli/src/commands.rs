use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use ghzclone_core::analytics::{expected_copies, failure_probability, parse_shares, spectrum as compute_spectrum, Strategy};
use ghzclone_core::gates::Sign;
use ghzclone_core::statekit::NoiseChannel;
use ghzclone_core::teleclone::{robustness_study, simulate, ProtocolConfig, RobustnessPoint};
use ghzclone_core::verify::{run_checks, Fault};

use crate::output::{sig12, to_json, Cell, Sink, Table};
use crate::{
    CliError, Common, CurveMode, CurvesArgs, Format, RobustnessArgs, SecretSign, SpectrumArgs, TelecloneArgs,
    VerifyArgs,
};

pub const DEFAULT_STRATEGIES: [&str; 4] = ["10x(1->20)", "1x(10->20)", "2x(1->3)", "1x(2->3)"];
const DEFAULT_GRID_POINTS: usize = 200;
const DEFAULT_GRID_LOW: f64 = 0.001;
const MAX_TELECLONE_TARGETS: u32 = 6;
const MAX_TRIALS: u64 = 10_000_000;

fn angle(common: &Common, x: f64) -> f64 {
    if common.degrees {
        x.to_radians()
    } else {
        x
    }
}

fn sink<T: Serialize>(common: &Common, command: &'static str, args: &T, seed: Option<u64>) -> Sink {
    Sink {
        out: common.out.clone(),
        command,
        parameters: serde_json::json!({ "common": common, "command": args }),
        seed,
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    x: usize,
    probability: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    strategy: String,
    theta: f64,
    copies: u32,
    goal: u32,
    expected_copies: f64,
    failure_probability: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    #[serde(flatten)]
    summary: SpectrumSummary,
    spectrum: Vec<SpectrumRow>,
}

pub fn spectrum(common: &Common, args: &SpectrumArgs) -> Result<(), CliError> {
    let theta = angle(common, args.theta);
    let shares = parse_shares(&args.strategy)?;
    let probe = Strategy::new(&shares, theta, 0)?;
    let goal = args.goal.unwrap_or_else(|| probe.largest_target());
    let strategy = match args.copies {
        Some(m) => Strategy::with_copies(&shares, m, theta, goal)?,
        None => Strategy::new(&shares, theta, goal)?,
    };
    let spec = compute_spectrum(&strategy)?;
    let summary = SpectrumSummary {
        strategy: strategy.dsl(),
        theta: strategy.theta(),
        copies: strategy.copies(),
        goal,
        expected_copies: expected_copies(&spec),
        failure_probability: failure_probability(&spec, goal),
    };
    let rows: Vec<SpectrumRow> = spec.support().map(|(x, probability)| SpectrumRow { x, probability }).collect();
    let sink = sink(common, "spectrum", args, None);
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = Table::new(&["x", "probability"]);
            for r in &rows {
                t.row(vec![Cell::Int(r.x as u64), Cell::Num(r.probability)]);
            }
            sink.emit(&t.finish(), &[(".summary.json", to_json(&summary))])
        }
        Format::Json => sink.emit(&to_json(&SpectrumReport { summary, spectrum: rows }), &[]),
    }
}

/// Parses `LO:HI:POINTS` into POINTS uniform angles in `(LO, HI]`.
pub fn theta_grid(grid: Option<&str>, degrees: bool) -> Result<Vec<f64>, CliError> {
    let (lo, hi, points) = match grid {
        None => (DEFAULT_GRID_LOW, FRAC_PI_4, DEFAULT_GRID_POINTS),
        Some(s) => {
            let bad = || CliError::Usage(format!("grid `{s}` is not LO:HI:POINTS"));
            let parts: Vec<&str> = s.split(':').collect();
            let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
            let conv = |x: f64| if degrees { x.to_radians() } else { x };
            (
                conv(lo.trim().parse().map_err(|_| bad())?),
                conv(hi.trim().parse().map_err(|_| bad())?),
                n.trim().parse().map_err(|_| bad())?,
            )
        }
    };
    if points == 0 || lo.is_nan() || hi.is_nan() || lo >= hi || lo < 0.0 {
        return Err(CliError::Usage(format!("grid needs 0 <= LO < HI and POINTS >= 1, got {lo}:{hi}:{points}")));
    }
    Ok((1..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect())
}

#[derive(Serialize)]
struct Series {
    strategy: String,
    goal: u32,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct CurvesReport {
    mode: CurveMode,
    theta: Vec<f64>,
    series: Vec<Series>,
}

pub fn curves(common: &Common, args: &CurvesArgs) -> Result<(), CliError> {
    let grid = theta_grid(args.grid.as_deref(), common.degrees)?;
    let dsls: Vec<String> = if args.strategies.is_empty() {
        DEFAULT_STRATEGIES.iter().map(|s| s.to_string()).collect()
    } else {
        args.strategies.clone()
    };
    let mut series = Vec::new();
    for dsl in &dsls {
        let base = Strategy::parse(dsl, grid[0], 0)?;
        let goal = args.goal.unwrap_or_else(|| base.largest_target());
        let values = grid
            .iter()
            .map(|&theta| {
                let spec = compute_spectrum(&base.with_theta(theta)?)?;
                Ok(match args.mode {
                    CurveMode::Expectation => expected_copies(&spec),
                    CurveMode::Failure => failure_probability(&spec, goal),
                })
            })
            .collect::<Result<Vec<f64>, ghzclone_core::Error>>()?;
        series.push(Series { strategy: base.dsl(), goal, values });
    }
    let sink = sink(common, "curves", args, None);
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let header: Vec<&str> = std::iter::once("theta").chain(series.iter().map(|s| s.strategy.as_str())).collect();
            let mut t = Table::new(&header);
            for (i, &theta) in grid.iter().enumerate() {
                t.row(std::iter::once(Cell::Num(theta)).chain(series.iter().map(|s| Cell::Num(s.values[i]))).collect());
            }
            sink.emit(&t.finish(), &[])
        }
        Format::Json => sink.emit(&to_json(&CurvesReport { mode: args.mode, theta: grid, series }), &[]),
    }
}

fn check_size(targets: u32, trials: u64, allow_zero_trials: bool) -> Result<(), CliError> {
    if targets > MAX_TELECLONE_TARGETS {
        return Err(CliError::Usage(format!("N = {targets} exceeds the limit of {MAX_TELECLONE_TARGETS}")));
    }
    if trials > MAX_TRIALS || (trials == 0 && !allow_zero_trials) {
        return Err(CliError::Usage(format!("trials must be in 1..={MAX_TRIALS}, got {trials}")));
    }
    Ok(())
}

pub fn teleclone(common: &Common, args: &TelecloneArgs) -> Result<(), CliError> {
    check_size(args.targets, args.trials, false)?;
    let sign = match args.sign {
        SecretSign::Plus => Sign::Plus,
        SecretSign::Minus => Sign::Minus,
    };
    let config = ProtocolConfig::new(args.copies, args.targets, angle(common, args.theta))?
        .with_prep(args.prep)
        .with_detector(args.detector)
        .with_sign(sign);
    let report = simulate(&config, args.trials, common.seed)?;
    eprintln!(
        "success rate {} (±{}) vs analytic {}: {} sigma, {}",
        sig12(report.empirical_success_rate),
        sig12(report.standard_error),
        sig12(report.analytic_success_rate),
        sig12(report.deviation_sigmas),
        if report.within_three_sigma { "within 3 sigma" } else { "outside 3 sigma" }
    );
    let sink = sink(common, "teleclone", args, Some(common.seed));
    match common.format.unwrap_or(Format::Json) {
        Format::Json => sink.emit(&to_json(&report), &[])?,
        Format::Csv => {
            let mut t =
                Table::new(&["scope", "attempts", "successes", "empirical", "standard_error", "analytic", "within_three_sigma"]);
            t.row(vec![
                Cell::Text("overall".into()),
                Cell::Int(report.trials),
                Cell::Int(report.successes),
                Cell::Num(report.empirical_success_rate),
                Cell::Num(report.standard_error),
                Cell::Num(report.analytic_success_rate),
                Cell::Bool(report.within_three_sigma),
            ]);
            for s in &report.per_step_rates {
                t.row(vec![
                    Cell::Text(format!("step-{}", s.j)),
                    Cell::Int(s.attempts),
                    Cell::Int(s.successes),
                    Cell::Num(s.empirical),
                    Cell::Num(s.standard_error),
                    Cell::Num(s.analytic),
                    Cell::Bool(s.within_three_sigma),
                ]);
            }
            sink.emit(&t.finish(), &[])?
        }
    }
    if !report.ledger_consistent {
        return Err(CliError::Invariant("resource ledger is inconsistent".into()));
    }
    if let Some(f) = report.min_clone_fidelity.filter(|&f| f < 1.0 - 1e-9) {
        return Err(CliError::Invariant(format!("a delivered clone has fidelity {f}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct RobustnessReport<'a> {
    config: &'a ProtocolConfig,
    seed: u64,
    points: Vec<RobustnessPoint>,
}

pub fn robustness(common: &Common, args: &RobustnessArgs) -> Result<(), CliError> {
    check_size(args.targets, args.trials, true)?;
    let config = ProtocolConfig::new(args.copies, args.targets, angle(common, args.theta))?;
    for &eps in &args.epsilon {
        NoiseChannel::new(args.noise, eps)?;
    }
    let points = args
        .epsilon
        .iter()
        .map(|&eps| robustness_study(&config, args.noise, eps, args.trials, common.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    let sink = sink(common, "robustness", args, Some(common.seed));
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut t = Table::new(&[
                "epsilon",
                "input_T",
                "output_T",
                "success_shift",
                "contraction",
                "conditional_output_T",
                "ideal_success_rate",
                "noisy_success_rate",
                "empirical_success_rate",
                "standard_error",
            ]);
            for p in &points {
                t.row(vec![
                    Cell::Num(p.epsilon),
                    Cell::Num(p.input_trace_distance),
                    Cell::Num(p.output_trace_distance),
                    Cell::Num(p.success_rate_shift),
                    Cell::Bool(p.contraction_holds),
                    Cell::Num(p.conditional_output_trace_distance),
                    Cell::Num(p.ideal_success_rate),
                    Cell::Num(p.noisy_success_rate),
                    Cell::Num(p.empirical_success_rate),
                    Cell::Num(p.standard_error),
                ]);
            }
            sink.emit(&t.finish(), &[])
        }
        Format::Json => sink.emit(&to_json(&RobustnessReport { config: &config, seed: common.seed, points }), &[]),
    }
}

pub fn verify(common: &Common, args: &VerifyArgs) -> Result<(), CliError> {
    let fault = args.inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
    let reports = run_checks(args.filter.as_deref(), fault);
    if reports.is_empty() {
        return Err(CliError::Usage(format!("no check id contains `{}`", args.filter.as_deref().unwrap_or(""))));
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let text = match common.format {
        Some(Format::Json) => to_json(&reports),
        _ => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&format!("[{}] {}: {} ({})\n", if r.passed { "PASS" } else { "FAIL" }, r.id, r.summary, r.detail));
            }
            s.push_str(&format!("{}/{} checks passed\n", reports.len() - failed, reports.len()));
            s
        }
    };
    sink(common, "verify", args, None).emit(&text, &[])?;
    if failed > 0 {
        return Err(CliError::Invariant(format!("{failed} check(s) failed")));
    }
    Ok(())
}
