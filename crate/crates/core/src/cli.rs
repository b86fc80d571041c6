//! Command-line front end. Exit codes: 0 success, 1 solver error, 2 usage
//! error (bad flags, unreadable or malformed input files).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::body::Body;
use crate::continuation::{continuation_solve, HomotopyConfig};
use crate::error::Error;
use crate::gauss::{gaussian_volume, isoperimetric_deficit, lp_total, lp_total_boundary_oracle};
use crate::grid::{regrid, Grid, ScalarField};
use crate::io::{read_body, read_measure, write_json, ReportFile};
use crate::measure::MeasureDensity;
use crate::variational::{variational_solve, VariationalOptions};
use crate::verify::{write_csv, Suite};

/// Environment variable capping the worker threads used by `sweep`.
pub const THREADS_ENV: &str = "GAUSSMINK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gaussmink", version, about = "Planar L_p Gaussian Minkowski problem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a body whose L_p Gaussian surface area measure matches a density.
    Solve(SolveArgs),
    /// Print Gaussian volume, L_p surface area and isoperimetric deficit of a body.
    Measure(MeasureArgs),
    /// Run the property suites.
    Verify(VerifyArgs),
    /// Solve over a range of exponents or masses and print one CSV row each.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Auto,
    Variational,
    Continuation,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    /// Measure JSON file.
    #[arg(long)]
    measure: PathBuf,
    /// Resample the measure to this many nodes.
    #[arg(long)]
    grid: Option<usize>,
    /// KKT tolerance (variational) or Newton residual tolerance (continuation).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Continue past the sufficient mass bound for 1 <= p <= 2.
    #[arg(long)]
    override_mass: bool,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    /// Body JSON file.
    #[arg(long)]
    body: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// duality, variation, isoperimetric, solver or all.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of random bodies per suite (suite default when omitted).
    #[arg(long)]
    count: Option<usize>,
    /// Write the suite results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write every check as a CSV row.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    measure: PathBuf,
    /// Exponent range `start:stop:step`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mass_range")]
    p_range: Option<String>,
    /// Mass range `start:stop:step`; the measure is rescaled to each mass.
    #[arg(long, requires = "p")]
    mass_range: Option<String>,
    /// Exponent for a mass sweep.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    override_mass: bool,
    /// CSV output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn input<T>(path: &Path, r: crate::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| usage(format!("cannot use {}: {}: {e}", path.display(), e.name())))
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Measure(a) => cmd_measure(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {}: {e}", e.name());
            1
        }
    }
}

fn load_measure(path: &Path, grid: Option<usize>) -> std::result::Result<MeasureDensity, Failure> {
    let m = input(path, read_measure(path))?;
    let Some(n) = grid else { return Ok(m) };
    if n == m.grid().size() {
        return Ok(m);
    }
    let target = Grid::new(n).map_err(|e| usage(format!("--grid: {e}")))?;
    let mut values = regrid(m.density(), target).into_values();
    if m.is_even() {
        // interpolation keeps evenness only up to round-off; restore it exactly
        let half = n / 2;
        for i in 0..half {
            values[i + half] = values[i];
        }
    }
    Ok(MeasureDensity::new(ScalarField::new(target, values)?, m.is_even())?)
}

fn resolve_mode(mode: Mode, p: f64) -> std::result::Result<Mode, Failure> {
    if !p.is_finite() {
        return Err(usage("--p must be finite"));
    }
    match mode {
        Mode::Auto if p <= 0.0 => Ok(Mode::Variational),
        Mode::Auto if p < 1.0 => Err(usage(format!(
            "p in (0,1) unsupported (got {p}); use p <= 0 or p >= 1"
        ))),
        Mode::Auto => Ok(Mode::Continuation),
        Mode::Variational if p > 0.0 => Err(usage("--mode variational requires p <= 0")),
        Mode::Continuation if p < 1.0 => Err(usage("--mode continuation requires p >= 1")),
        m => Ok(m),
    }
}

fn solve_report(
    mode: Mode,
    mu: &MeasureDensity,
    p: f64,
    tol: Option<f64>,
    max_iter: Option<usize>,
    override_mass: bool,
) -> crate::Result<ReportFile> {
    if mode == Mode::Variational {
        let mut opts = VariationalOptions::default();
        if let Some(t) = tol {
            opts.tol_kkt = t;
        }
        if let Some(m) = max_iter {
            opts.max_iter = m;
        }
        Ok(ReportFile::from_variational(&variational_solve(mu, p, &opts)?))
    } else {
        let mut cfg = HomotopyConfig::new(p);
        if let Some(t) = tol {
            cfg.newton_tol = t;
        }
        if let Some(m) = max_iter {
            cfg.newton_max = m;
        }
        cfg.override_mass_bound = override_mass;
        Ok(ReportFile::from_continuation(p, &continuation_solve(mu, &cfg)?))
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), num)
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let mode = resolve_mode(a.mode, a.p)?;
    if let Some(t) = a.tol {
        if !(t > 0.0) {
            return Err(usage("--tol must be positive"));
        }
    }
    let mu = load_measure(&a.measure, a.grid)?;
    let report = solve_report(mode, &mu, a.p, a.tol, a.max_iter, a.override_mass)?;
    input(&a.out, write_json(&a.out, &report))?;
    println!(
        "mode={} p={} residual={} kkt={} gamma={} lambda={}",
        report.mode,
        num(a.p),
        fmt_opt(report.residual_linf),
        fmt_opt(report.kkt_residual),
        num(report.gamma),
        fmt_opt(report.lambda)
    );
    Ok(0)
}

fn cmd_measure(a: MeasureArgs) -> CmdResult {
    if !a.p.is_finite() {
        return Err(usage("--p must be finite"));
    }
    let body = input(&a.body, read_body(&a.body))?;
    let deficit = if a.p >= 1.0 {
        num(isoperimetric_deficit(&body, a.p)?.deficit)
    } else {
        String::new()
    };
    println!("gamma,total,total_oracle,deficit");
    println!(
        "{},{},{},{deficit}",
        num(gaussian_volume(&body)),
        num(lp_total(&body, a.p)),
        num(lp_total_boundary_oracle(&body, a.p)),
    );
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let suites = Suite::parse(&a.suite).ok_or_else(|| {
        usage(format!(
            "unknown suite '{}': expected duality, variation, isoperimetric, solver or all",
            a.suite
        ))
    })?;
    let results: Vec<_> = suites.iter().map(|s| s.run(a.seed, a.count)).collect();
    for r in &results {
        println!(
            "{} {} cases={} worst_violation={}",
            r.name,
            if r.pass { "pass" } else { "FAIL" },
            r.cases,
            num(r.worst_violation)
        );
    }
    if let Some(path) = &a.json {
        input(path, write_json(path, &results))?;
    }
    if let Some(path) = &a.csv {
        let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        input(path, write_csv(&results, file))?;
    }
    Ok(if results.iter().all(|r| r.pass) { 0 } else { 1 })
}

/// Parses `start:stop:step` into the inclusive arithmetic progression.
pub fn parse_range(spec: &str) -> Option<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().ok())
        .collect::<Option<_>>()?;
    let [start, stop, step] = parts[..] else {
        return None;
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return None;
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Some((0..count).map(|i| start + i as f64 * step).collect())
}

fn sweep_threads() -> std::result::Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

struct SweepRow {
    p: f64,
    mass: f64,
    outcome: crate::Result<(ReportFile, Body)>,
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let base = load_measure(&a.measure, a.grid)?;
    let points: Vec<(f64, f64)> = match (&a.p_range, &a.mass_range) {
        (Some(r), None) => parse_range(r)
            .ok_or_else(|| usage(format!("bad --p-range '{r}'")))?
            .into_iter()
            .map(|p| (p, base.mass()))
            .collect(),
        (None, Some(r)) => {
            let p = a.p.expect("clap enforces --p");
            parse_range(r)
                .ok_or_else(|| usage(format!("bad --mass-range '{r}'")))?
                .into_iter()
                .map(|m| (p, m))
                .collect()
        }
        _ => return Err(usage("give exactly one of --p-range or --mass-range")),
    };
    for &(p, m) in &points {
        if p > 0.0 && p < 1.0 {
            return Err(usage(format!("p in (0,1) unsupported (sweep point {p})")));
        }
        if !(m > 0.0) {
            return Err(usage(format!("mass must be positive (sweep point {m})")));
        }
    }
    let solve_point = |&(p, mass): &(f64, f64)| SweepRow {
        p,
        mass,
        outcome: base.with_mass(mass).and_then(|mu| {
            let mode = if p <= 0.0 { Mode::Variational } else { Mode::Continuation };
            let rep = solve_report(mode, &mu, p, None, None, a.override_mass)?;
            let body = rep.body()?;
            Ok((rep, body))
        }),
    };
    let rows: Vec<SweepRow> = match sweep_threads()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(e.to_string()))?
            .install(|| points.par_iter().map(solve_point).collect()),
        None => points.par_iter().map(solve_point).collect(),
    };

    let sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let write = |w: &mut csv::Writer<Box<dyn Write>>, rec: Vec<String>| {
        w.write_record(rec)
            .map_err(|e| usage(format!("writing CSV: {e}")))
    };
    write(
        &mut w,
        ["p", "mass", "gamma", "S_p", "deficit", "homotopy_steps", "iters", "status"]
            .map(String::from)
            .to_vec(),
    )?;
    for r in rows {
        let rec = match r.outcome {
            Ok((rep, body)) => {
                let deficit = if r.p >= 1.0 {
                    isoperimetric_deficit(&body, r.p)
                        .map(|d| num(d.deficit))
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                vec![
                    num(r.p),
                    num(r.mass),
                    num(rep.gamma),
                    num(lp_total(&body, r.p)),
                    deficit,
                    rep.homotopy_steps.map(|s| s.to_string()).unwrap_or_default(),
                    rep.newton_iters
                        .or(rep.iterations)
                        .map(|s| s.to_string())
                        .unwrap_or_default(),
                    "ok".to_string(),
                ]
            }
            Err(e) => {
                let mut rec = vec![num(r.p), num(r.mass)];
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(e.name().to_string());
                rec
            }
        };
        write(&mut w, rec)?;
    }
    w.flush().map_err(|e| usage(format!("writing CSV: {e}")))?;
    Ok(0)
}
