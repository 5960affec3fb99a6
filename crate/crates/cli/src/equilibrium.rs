use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use fkqc::model::{
    equilibrium_residual_trimmed, has_rotation_number, rotation_number_estimate, type_distance, AnchorFn,
    Configuration, RotationEstimate,
};
use fkqc::potential::PotentialSpec;
use fkqc::solver::{
    ball_radius, contraction_factor, ghost_residuals, lambda_threshold, solve_fixed_point, solve_tridiagonal,
    AilParams, AnchorValues,
};
use fkqc::GoldenNumber;
use serde::Serialize;
use serde_json::json;

use crate::failure::Failure;
use crate::manifest::RunManifest;
use crate::output::{csv_bytes, json_bytes, num, run_jobs, Sink};
use crate::{Format, OutArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedPoint,
    Tridiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnchorKind {
    /// `h(i) = (3τ+1)/2 · i`.
    Linear,
    /// `h(i) = sign(i)·i²`.
    H1,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    /// Slope of a linear anchor: `default` for (3τ+1)/2, or a number.
    #[arg(long, conflicts_with_all = ["anchor", "anchor_file"])]
    theta: Option<String>,
    #[arg(long, value_enum, conflicts_with = "anchor_file")]
    anchor: Option<AnchorKind>,
    /// Tabulated anchor: CSV with header `i,h` on consecutive indices.
    #[arg(long)]
    anchor_file: Option<PathBuf>,
    /// One value, or a comma-separated sweep.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    lambda: Vec<f64>,
    /// Solve on i in [-n, n].
    #[arg(long, default_value_t = 100)]
    n: i64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = Method::FixedPoint)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Debug, Serialize)]
struct Diagnostics {
    lambda: f64,
    method: Method,
    anchor: &'static str,
    n: i64,
    lambda_threshold: f64,
    contraction_factor: f64,
    ball_radius: f64,
    iterations: Option<usize>,
    final_delta: Option<f64>,
    max_step_ratio: Option<f64>,
    /// `sup|u_i − g(i)|`.
    max_deviation: f64,
    /// `sup|x_i − h(i)|`.
    type_distance: f64,
    /// Largest residual over the whole window, ghosts held at `g`.
    max_residual: f64,
    /// Largest residual of the free-ended window with two sites dropped per end.
    trimmed_residual: f64,
    rotation: Option<RotationEstimate>,
    has_rotation_number: Option<bool>,
    notes: Vec<String>,
}

struct Solved {
    config: Configuration,
    g: AnchorValues,
    residuals: Vec<f64>,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct Point {
    i: i64,
    x: f64,
    g: GoldenNumber,
    h: f64,
    residual: f64,
}

fn parse_anchor(args: &EquilibriumArgs) -> Result<AnchorFn, Failure> {
    if let Some(path) = &args.anchor_file {
        return read_anchor_file(path);
    }
    if let Some(kind) = args.anchor {
        return Ok(match kind {
            AnchorKind::Linear => AnchorFn::default_linear(),
            AnchorKind::H1 => AnchorFn::SignedSquare,
        });
    }
    match args.theta.as_deref() {
        None | Some("default") => Ok(AnchorFn::default_linear()),
        Some(t) => {
            let theta: f64 = t
                .parse()
                .map_err(|_| Failure::Validation(format!("--theta must be 'default' or a number, got '{t}'")))?;
            if !theta.is_finite() {
                return Err(Failure::Validation("--theta must be finite".into()));
            }
            Ok(AnchorFn::linear(theta))
        }
    }
}

fn read_anchor_file(path: &Path) -> Result<AnchorFn, Failure> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::io(path.display(), e))?;
    let mut i_min = None;
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Failure::io(path.display(), e))?;
        let bad = || Failure::Validation(format!("{}: malformed row {}", path.display(), row + 2));
        let i: i64 = rec.get(0).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let h: f64 = rec.get(1).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let start = *i_min.get_or_insert(i);
        if i != start + values.len() as i64 || !h.is_finite() {
            return Err(bad());
        }
        values.push(h);
    }
    let i_min = i_min.ok_or_else(|| Failure::Validation(format!("{}: no rows", path.display())))?;
    Ok(AnchorFn::Table { i_min, values })
}

fn solve(anchor: &AnchorFn, lambda: f64, args: &EquilibriumArgs) -> Result<Solved, Failure> {
    let n = args.n;
    if n < 1 {
        return Err(Failure::Validation(format!("--n must be at least 1, got {n}")));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Failure::Validation(format!("--lambda must be positive, got {lambda}")));
    }
    if !anchor.covers(-n - 2, n + 2) {
        return Err(Failure::Validation(format!(
            "anchor table must cover [{}, {}]",
            -n - 2,
            n + 2
        )));
    }
    let threshold = lambda_threshold(anchor, -n, n)?;
    if lambda <= threshold {
        return Err(Failure::Validation(format!(
            "lambda {lambda} is below the threshold for guaranteed contraction ({threshold} = (2τ + 1 + sup|Δh|)/32)"
        )));
    }
    let mut params = AilParams::new(anchor.clone(), n);
    params.lambda = lambda;
    params.tol = args.tol;
    params.max_iter = args.max_iter;
    let spec = PotentialSpec::new(lambda)?;
    let g = AnchorValues::new(anchor, n)?;
    let (config, iterations, final_delta, max_step_ratio) = match args.method {
        Method::FixedPoint => {
            let sol = solve_fixed_point(&params)?;
            let ratio = sol.step_ratios().into_iter().fold(0.0, f64::max);
            (sol.config, Some(sol.iterations), Some(sol.final_delta), Some(ratio))
        }
        Method::Tridiagonal => (solve_tridiagonal(&params, true)?, None, None, None),
    };
    let residuals = ghost_residuals(&config, &g, &spec)?;
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let trimmed_residual = if n >= 4 {
        equilibrium_residual_trimmed(&config, &spec, 2)?
    } else {
        max_residual
    };
    let (rotation, has_rot) = if n >= 10 {
        (Some(rotation_number_estimate(&config)?), has_rotation_number(&config)?)
    } else {
        (None, None)
    };
    let max_deviation = config
        .indices()
        .map(|i| (config.at(i) - g.at(i).to_f64()).abs())
        .fold(0.0, f64::max);
    let mut notes = Vec::new();
    if has_rot == Some(false) {
        notes.push("no rotation number: slopes over the full and half windows disagree beyond their bounds".into());
    }
    let diagnostics = Diagnostics {
        lambda,
        method: args.method,
        anchor: anchor.name(),
        n,
        lambda_threshold: threshold,
        contraction_factor: contraction_factor(lambda),
        ball_radius: ball_radius(lambda, anchor.delta_sup(-n - 1, n + 1)),
        iterations,
        final_delta,
        max_step_ratio,
        max_deviation,
        type_distance: type_distance(&config, anchor),
        max_residual,
        trimmed_residual,
        rotation,
        has_rotation_number: has_rot,
        notes,
    };
    Ok(Solved {
        config,
        g,
        residuals,
        diagnostics,
    })
}

fn points(s: &Solved, anchor: &AnchorFn) -> Vec<Point> {
    s.config
        .indices()
        .zip(&s.residuals)
        .map(|(i, &residual)| Point {
            i,
            x: s.config.at(i),
            g: s.g.at(i),
            h: anchor.value(i),
            residual,
        })
        .collect()
}

fn render(s: &Solved, anchor: &AnchorFn, format: Format) -> Result<Vec<u8>, Failure> {
    let pts = points(s, anchor);
    match format {
        Format::Csv => csv_bytes(
            &["i", "x_i", "g_i", "h_i", "residual_i"],
            pts.iter()
                .map(|p| vec![p.i.to_string(), num(p.x), num(p.g.to_f64()), num(p.h), num(p.residual)]),
        ),
        Format::Json => json_bytes(&json!({ "diagnostics": s.diagnostics, "points": pts })),
    }
}

fn file_name(lambda: f64, sweep: bool, format: Format) -> String {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    if sweep {
        format!("equilibrium_lambda_{lambda}.{ext}")
    } else {
        format!("equilibrium.{ext}")
    }
}

pub fn run(args: &EquilibriumArgs, argv: &[String]) -> Result<(), Failure> {
    let started = Instant::now();
    let anchor = parse_anchor(args)?;
    if args.lambda.is_empty() {
        return Err(Failure::Validation("--lambda needs at least one value".into()));
    }
    let results = run_jobs(&args.lambda, args.out.jobs, |&lambda| solve(&anchor, lambda, args));
    let mut solved = Vec::with_capacity(results.len());
    for r in results {
        solved.push(r?);
    }
    let mut sink = Sink::new(args.out.out.clone(), started)?;
    let sweep = solved.len() > 1;
    for s in &solved {
        sink.emit(
            &file_name(s.diagnostics.lambda, sweep, args.format),
            &render(s, &anchor, args.format)?,
        )?;
    }
    for s in &solved {
        if let Some(r) = &s.diagnostics.rotation {
            eprintln!(
                "lambda {}: rotation estimate {} (bound {})",
                s.diagnostics.lambda,
                r.estimate,
                r.error_bound.map_or("n/a".into(), |b| b.to_string())
            );
        }
        for note in &s.diagnostics.notes {
            eprintln!("lambda {}: {note}", s.diagnostics.lambda);
        }
    }
    let mut manifest = RunManifest::new(
        "equilibrium",
        json!({
            "anchor": anchor,
            "lambda": args.lambda,
            "n": args.n,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "method": args.method,
            "format": format!("{:?}", args.format).to_lowercase(),
        }),
        argv,
        None,
    );
    let diags: Vec<&Diagnostics> = solved.iter().map(|s| &s.diagnostics).collect();
    manifest.diagnostics = if sweep { json!(diags) } else { json!(diags[0]) };
    sink.finish(manifest)
}
