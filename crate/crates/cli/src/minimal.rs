use std::time::Instant;

use clap::Args;
use fkqc::minimal::{
    combinatorics_certificate, lift, optimize_level, rotation_number_level, sandwich_bound, CircleReport,
    CombinatoricsReport, LevelConfig, OptimizerSettings, SandwichReport,
};
use fkqc::model::rotation_number_estimate;
use fkqc::TAU;
use serde::Serialize;
use serde_json::json;

use crate::failure::Failure;
use crate::manifest::RunManifest;
use crate::output::{csv_bytes, json_bytes, num, run_jobs, Sink};
use crate::{Format, OutArgs};

/// Combinatorics are certified on a wider lift than the printed window.
const CERTIFICATE_HALF_WIDTH: i64 = 3000;

#[derive(Debug, Args)]
pub struct MinimalArgs {
    /// One level, or a comma-separated sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    level: Vec<u32>,
    /// Print atoms n in [-window, window].
    #[arg(long, default_value_t = 50)]
    window: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Debug, Serialize)]
struct CircleSummary {
    #[serde(flatten)]
    report: CircleReport,
    circumference: f64,
    atoms: usize,
    free_points: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct Certificate {
    sheet_level: u32,
    report: Option<CombinatoricsReport>,
    error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct Report {
    level: u32,
    window: i64,
    seed: u64,
    circles: Vec<CircleSummary>,
    /// `(3τ+1)/2` as an exact element of ℚ(τ).
    rotation_number_exact: String,
    rotation_number: f64,
    rotation_estimate: Option<f64>,
    sandwich: Option<SandwichReport>,
    /// `sup_n |θ_n − (3τ+1)/2 · n|` over the window.
    line_deviation: f64,
    max_gap: f64,
    /// `2τ^{2l+2}`.
    gap_bound: f64,
    combinatorics: Vec<Certificate>,
    converged: bool,
    notes: Vec<String>,
}

struct LevelRun {
    config: LevelConfig,
    report: Report,
}

fn run_level(l: u32, args: &MinimalArgs) -> Result<LevelRun, Failure> {
    if l < 1 {
        return Err(Failure::Validation("--level must be at least 1".into()));
    }
    if args.window < 1 {
        return Err(Failure::Validation(format!(
            "--window must be at least 1, got {}",
            args.window
        )));
    }
    if args.restarts < 1 {
        return Err(Failure::Validation("--restarts must be at least 1".into()));
    }
    let settings = OptimizerSettings {
        restarts: args.restarts,
        seed: args.seed,
        lambda: args.lambda,
        ..Default::default()
    };
    let opt = optimize_level(l, &settings)?;
    let config = lift(l, &opt.geometry, args.window)?;
    let wide = lift(l, &opt.geometry, CERTIFICATE_HALF_WIDTH.max(args.window))?;
    let exact = rotation_number_level(l)?;
    let slope = exact.to_f64();
    let mut notes = Vec::new();

    let circles: Vec<CircleSummary> = opt
        .circles
        .iter()
        .map(|c| CircleSummary {
            report: c.clone(),
            circumference: opt.geometry.circumference(c.circle).to_f64(),
            atoms: opt.geometry.atoms(c.circle),
            free_points: opt.geometry.free(c.circle).to_vec(),
        })
        .collect();
    if l == 1 {
        for c in &circles {
            let off = (c.free_points[0] - c.circumference / 2.0).abs();
            notes.push(format!(
                "circle {}: free point at {} ({}antipodal, |d - C/2| = {off:e})",
                c.report.circle,
                c.free_points[0],
                if off < 1e-6 { "" } else { "not " }
            ));
        }
    }
    let rotation_estimate = if args.window >= 10 {
        Some(rotation_number_estimate(&config.to_configuration())?.estimate)
    } else {
        None
    };
    let sandwich = match sandwich_bound(&config) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("sandwich bound unavailable: {e}"));
            None
        }
    };
    let line_deviation = (config.n_min..=config.n_max())
        .map(|n| (config.at(n) - slope * n as f64).abs())
        .fold(0.0, f64::max);
    let combinatorics = (1..=l)
        .map(|m| match combinatorics_certificate(&wide, m) {
            Ok(r) => Certificate {
                sheet_level: m,
                report: Some(r),
                error: None,
            },
            Err(e) => Certificate {
                sheet_level: m,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let converged = opt.circles.iter().all(|c| c.converged);
    let report = Report {
        level: l,
        window: args.window,
        seed: args.seed,
        circles,
        rotation_number_exact: exact.to_string(),
        rotation_number: slope,
        rotation_estimate,
        sandwich,
        line_deviation,
        max_gap: config.max_gap(),
        gap_bound: 2.0 * TAU.powi(2 * l as i32 + 2),
        combinatorics,
        converged,
        notes,
    };
    Ok(LevelRun { config, report })
}

fn names(l: u32, sweep: bool) -> (String, String, String) {
    let stem = if sweep {
        format!("minimal_level_{l}")
    } else {
        "minimal".into()
    };
    (
        format!("{stem}.csv"),
        format!("{stem}_report.json"),
        format!("{stem}.json"),
    )
}

pub fn run(args: &MinimalArgs, argv: &[String]) -> Result<(), Failure> {
    let started = Instant::now();
    let results = run_jobs(&args.level, args.out.jobs, |&l| run_level(l, args));
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let mut sink = Sink::new(args.out.out.clone(), started)?;
    let to_files = args.out.out.is_some();
    let sweep = runs.len() > 1;
    for run in &runs {
        let (csv_name, report_name, json_name) = names(run.report.level, sweep);
        let pts = (run.config.n_min..=run.config.n_max()).map(|n| (n, run.config.at(n)));
        match args.format {
            Format::Csv => {
                let rows = pts.map(|(n, t)| vec![n.to_string(), num(t)]);
                sink.emit(&csv_name, &csv_bytes(&["n", "theta_n"], rows)?)?;
                if to_files {
                    sink.emit(&report_name, &json_bytes(&run.report)?)?;
                }
            }
            Format::Json => {
                let points: Vec<_> = pts.map(|(n, theta)| json!({ "n": n, "theta": theta })).collect();
                sink.emit(
                    &json_name,
                    &json_bytes(&json!({ "report": run.report, "points": points }))?,
                )?;
            }
        }
        let r = &run.report;
        eprintln!(
            "level {}: rotation estimate {} (exact {}), line deviation {}, converged {}",
            r.level,
            r.rotation_estimate.map_or("n/a".into(), |e| e.to_string()),
            r.rotation_number,
            r.line_deviation,
            r.converged
        );
    }
    let mut manifest = RunManifest::new(
        "minimal",
        json!({
            "level": args.level,
            "window": args.window,
            "restarts": args.restarts,
            "lambda": args.lambda,
            "format": format!("{:?}", args.format).to_lowercase(),
        }),
        argv,
        Some(args.seed),
    );
    manifest.diagnostics = json!(runs
        .iter()
        .map(|r| json!({
            "level": r.report.level,
            "converged": r.report.converged,
            "rotation_estimate": r.report.rotation_estimate,
            "line_deviation": r.report.line_deviation,
            "sandwich_contains": r.report.sandwich.as_ref().map(|s| s.contains),
        }))
        .collect::<Vec<_>>());
    sink.finish(manifest)?;
    if let Some(r) = runs.iter().find(|r| !r.report.converged) {
        return Err(Failure::Numerical(format!(
            "optimizer did not converge at level {}",
            r.report.level
        )));
    }
    Ok(())
}
