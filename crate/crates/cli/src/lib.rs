//! Command-line front end: one subcommand per library operation, JSON and
//! CSV outputs, and a manifest hashing every file of the run.

pub mod config;
pub mod error;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nonlocal_spectra::asymptotics::{sweep_dispersal_range, sweep_dispersal_rate, RangeOptions};
use nonlocal_spectra::expr::Expr;
use nonlocal_spectra::maxprinciple::{check_supersolution, verdict_from, Certificate};
use nonlocal_spectra::operator::Stationary;
use nonlocal_spectra::spectral::{
    certify_test_pair, collatz_wielandt_bounds, dense_oracle, poincare_constant, principal_spectrum_point,
};
use nonlocal_spectra::{Direction, OperatorSpec, SpaceTimeFunction, SweepResult};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

pub use config::{load_config, parse_config, RunConfig};
use config::{Format, TestFunctionConfig};
pub use error::CliError;
use output::{cell, OutputDir, RunManifest};

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "NONLOCAL_SPECTRA_JOBS";
/// Largest allowed gap between the power iteration and the dense oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "nonlocal-spectra", version, about = "Principal spectra of nonlocal dispersal operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Principal spectrum point and periodic eigenfunction.
    Eig(RunArgs),
    /// Sweep the dispersal rate D.
    SweepD(RunArgs),
    /// Sweep the dispersal range sigma.
    SweepSigma(RunArgs),
    /// Poincaré constant of the nonlocal Dirichlet form.
    Poincare(RunArgs),
    /// Check a test pair and Collatz–Wielandt bounds.
    Certify(RunArgs),
    /// Maximum-principle verdicts with a certificate.
    MpCheck(RunArgs),
    /// Power iteration against the dense eigen-solve.
    OracleCompare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the number of sweep points capped at the
    /// available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Eig(a) => ("eig", a),
            Command::SweepD(a) => ("sweep-d", a),
            Command::SweepSigma(a) => ("sweep-sigma", a),
            Command::Poincare(a) => ("poincare", a),
            Command::Certify(a) => ("certify", a),
            Command::MpCheck(a) => ("mp-check", a),
            Command::OracleCompare(a) => ("oracle-compare", a),
        }
    }
}

/// Run the tool on `argv` (program name first) and return the exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => {
                    let name =
                        e.get(clap::error::ContextKind::InvalidSubcommand).map(|v| v.to_string()).unwrap_or_default();
                    eprintln!("error: {}", CliError::UnknownSubcommand(name));
                    return 2;
                }
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Work shared by every subcommand, filled in as it runs.
struct Run<'a> {
    cfg: &'a RunConfig,
    out: OutputDir,
    grids: Vec<Vec<usize>>,
    wall_clock: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Run<'_> {
    fn timed<R>(&mut self, op: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.wall_clock.insert(op.to_string(), start.elapsed().as_secs_f64());
        r
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        if self.cfg.output.wants(Format::Json) {
            self.out.json(name, value)?;
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        if self.cfg.output.wants(Format::Csv) {
            self.out.csv(name, header, rows)?;
        }
        Ok(())
    }
}

fn jobs(flag: Option<usize>, points: usize) -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let requested = match std::env::var(JOBS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| CliError::ConfigInvalid {
            pointer: JOBS_ENV.into(),
            message: format!("expected a positive integer, got `{v}`"),
        })?),
        Err(_) => flag,
    };
    match requested {
        Some(0) => Err(CliError::ConfigInvalid { pointer: "--jobs".into(), message: "must be positive".into() }),
        Some(n) => Ok(n),
        None => Ok(points.clamp(1, available)),
    }
}

fn execute(command: &Command) -> Result<PathBuf, CliError> {
    let (name, args) = command.parts();
    let mut cfg = load_config(&args.config)?;
    if let Some(expected) = &cfg.command.name {
        if expected != name {
            return Err(CliError::ConfigInvalid {
                pointer: "/command/name".into(),
                message: format!("config is written for `{expected}`, not `{name}`"),
            });
        }
    }
    if let Some(dir) = &args.out {
        cfg.output.directory = dir.clone();
    }
    let spec = cfg.operator()?;
    let sweep_len = match name {
        "sweep-d" | "sweep-sigma" => match &cfg.command.values {
            Some(v) => v.len(),
            None => {
                return Err(CliError::ConfigInvalid {
                    pointer: "/command/values".into(),
                    message: format!("{name} needs a list of sweep values"),
                })
            }
        },
        _ => 1,
    };
    let jobs = jobs(args.jobs, sweep_len)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;

    let total = Instant::now();
    let mut run = Run {
        cfg: &cfg,
        out: OutputDir::create(&cfg.output.directory)?,
        grids: vec![spec.domain().cells().to_vec()],
        wall_clock: BTreeMap::new(),
        warnings: Vec::new(),
    };
    pool.install(|| match name {
        "eig" => eig(&mut run, &spec),
        "sweep-d" => sweep(&mut run, &spec, false),
        "sweep-sigma" => sweep(&mut run, &spec, true),
        "poincare" => poincare(&mut run, &spec),
        "certify" => certify(&mut run, &spec),
        "mp-check" => mp_check(&mut run, &spec),
        "oracle-compare" => oracle_compare(&mut run, &spec),
        other => Err(CliError::UnknownSubcommand(other.into())),
    })?;
    run.wall_clock.insert("total".into(), total.elapsed().as_secs_f64());
    run.grids.dedup();
    let manifest = RunManifest {
        tool: "nonlocal-spectra",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        seed: cfg.solver.seed,
        jobs,
        config: &cfg,
        grids: run.grids,
        wall_clock: run.wall_clock,
        warnings: run.warnings,
        files: Vec::new(),
    };
    run.out.finish(manifest)
}

fn not_principal_warning(context: &str, lambda1: f64, lambda_star: f64) -> String {
    format!("{context}: λ₁ = {lambda1} is not below λ* = {lambda_star}; it may not be an eigenvalue with positive eigenfunction")
}

fn coordinate_header(spec: &OperatorSpec) -> Vec<String> {
    if spec.domain().dimension() == 2 {
        vec!["x".into(), "y".into()]
    } else {
        vec!["x".into()]
    }
}

fn eig(run: &mut Run, spec: &OperatorSpec) -> Result<(), CliError> {
    let r = run.timed("principal_spectrum_point", || principal_spectrum_point(spec, &run.cfg.solver))?;
    if !r.is_principal {
        run.warnings.push(not_principal_warning("eig", r.lambda1, r.lambda_star));
    }
    run.json(
        "eig.json",
        &json!({
            "lambda1": r.lambda1,
            "radius": r.radius,
            "lambda_star": r.lambda_star,
            "is_principal": r.is_principal,
            "iters": r.iters,
            "steps_per_period": r.steps_per_period,
            "periodicity_residual": r.periodicity_residual,
            "algebraic_residual": r.algebraic_residual,
            "eigenfunction_min": r.min_value(),
            "eigenfunction_max": r.max_value(),
            "cells": spec.domain().cells(),
        }),
    )?;
    let mut header = vec!["t".to_string(), "index".to_string()];
    header.extend(coordinate_header(spec));
    header.push("phi".into());
    // an autonomous eigenfunction does not move; one snapshot describes it
    let count = if spec.coeff().is_autonomous() { 1 } else { r.times.len() };
    let mut rows = Vec::new();
    for (t, snap) in r.times.iter().zip(&r.snapshots).take(count) {
        for (i, v) in snap.iter().enumerate() {
            let mut row = vec![cell(Some(*t)), i.to_string()];
            row.extend(spec.domain().point(i).iter().map(|x| cell(Some(*x))));
            row.push(cell(Some(*v)));
            rows.push(row);
        }
    }
    run.csv("eigenfunction.csv", &header, &rows)
}

fn sweep(run: &mut Run, spec: &OperatorSpec, range: bool) -> Result<(), CliError> {
    let values = run.cfg.command.values.clone().unwrap_or_default();
    let cfg = &run.cfg.solver;
    let result: SweepResult = if range {
        let opts = RangeOptions {
            refine: run.cfg.command.refine.unwrap_or(true),
            require_averaging: run.cfg.command.require_averaging.unwrap_or(false),
        };
        let k = spec.k();
        run.timed("sweep_dispersal_range", || sweep_dispersal_range(spec, &values, k, cfg, opts))?
    } else {
        run.timed("sweep_dispersal_rate", || sweep_dispersal_rate(spec, &values, cfg))?
    };
    let param = result.parameter.name();
    let mut points = Vec::new();
    for (v, p) in result.values.iter().zip(&result.points) {
        match p {
            Ok(s) => {
                if !s.is_principal {
                    run.warnings.push(not_principal_warning(&format!("{param} = {v}"), s.lambda1, s.lambda_star));
                }
                run.wall_clock.insert(format!("point {param} = {v}"), s.wall_clock);
                run.grids.push(s.cells.clone());
                points.push(json!({ "value": v, "ok": s }));
            }
            Err(e) => {
                run.warnings.push(format!("{param} = {v}: {e}"));
                points.push(json!({ "value": v, "error": e.to_string() }));
            }
        }
    }
    run.json("sweep.json", &json!({ "parameter": param, "k": spec.k(), "points": points, "limits": result.limits }))?;
    let mut header = vec!["param".to_string(), "lambda1".into(), "lambda_star".into(), "is_principal".into()];
    header.extend(result.limits.iter().map(|l| format!("gap_{}", l.name)));
    let rows: Vec<Vec<String>> = result
        .values
        .iter()
        .zip(&result.points)
        .enumerate()
        .map(|(j, (v, p))| {
            let ok = p.as_ref().ok();
            let mut row = vec![
                cell(Some(*v)),
                cell(ok.map(|s| s.lambda1)),
                cell(ok.map(|s| s.lambda_star)),
                ok.map(|s| s.is_principal.to_string()).unwrap_or_default(),
            ];
            row.extend(result.limits.iter().map(|l| cell(l.gaps[j])));
            row
        })
        .collect();
    run.csv("sweep.csv", &header, &rows)
}

fn poincare(run: &mut Run, spec: &OperatorSpec) -> Result<(), CliError> {
    let (c, fc) = run.timed("poincare_constant", || poincare_constant(spec.domain(), spec.kernel(), spec.sigma()))?;
    let checks = run.cfg.command.random_checks.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(run.cfg.solver.seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_identity = 0.0f64;
    for _ in 0..checks {
        let raw: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = fc.project_mean_zero(&raw);
        min_ratio = min_ratio.min(fc.double_sum(&f) / fc.norm_sq(&f));
        max_identity = max_identity.max(fc.identity_residual(&raw) / fc.norm_sq(&raw));
    }
    run.json(
        "poincare.json",
        &json!({
            "constant": c,
            "points": spec.len(),
            "random_checks": checks,
            "min_rayleigh_quotient": if checks > 0 { Some(min_ratio) } else { None },
            "max_relative_identity_residual": max_identity,
            "inequality_holds": checks == 0 || min_ratio >= c - 1e-10,
        }),
    )
}

/// The configured test function, or the eigenfunction when none is given.
fn test_function(
    spec: &OperatorSpec,
    choice: Option<&TestFunctionConfig>,
    eigen: &dyn Fn() -> Box<dyn SpaceTimeFunction<f64>>,
) -> Result<Box<dyn SpaceTimeFunction<f64>>, CliError> {
    match choice {
        None | Some(TestFunctionConfig::Eigenfunction) => Ok(eigen()),
        Some(TestFunctionConfig::Expression { expr }) => {
            let e = Expr::parse(expr)?;
            let values = spec.domain().points().map(|x| e.eval(0.0, x[0], x.get(1).copied().unwrap_or(0.0))).collect();
            Ok(Box::new(Stationary(values)))
        }
    }
}

fn certify(run: &mut Run, spec: &OperatorSpec) -> Result<(), CliError> {
    let r = run.timed("principal_spectrum_point", || principal_spectrum_point(spec, &run.cfg.solver))?;
    let c = &run.cfg.command;
    let mt = c.mt_samples.unwrap_or(64);
    let lambda = c.lambda.unwrap_or(r.lambda1);
    let direction = c.direction.unwrap_or(Direction::Subsolution);
    let phi = test_function(spec, c.test_function.as_ref(), &|| Box::new(r.eigenfunction(spec)))?;
    let verdict = run.timed("certify_test_pair", || certify_test_pair(spec, lambda, phi.as_ref(), direction, mt))?;
    let (lower, upper) = run.timed("collatz_wielandt_bounds", || collatz_wielandt_bounds(spec, phi.as_ref(), mt))?;
    run.json(
        "certify.json",
        &json!({
            "lambda": lambda,
            "direction": direction,
            "mt_samples": mt,
            "verdict": verdict,
            "collatz_wielandt": { "lower": lower, "upper": upper },
            "lambda1": r.lambda1,
            "bracketed": lower <= r.lambda1 + 1e-8 && r.lambda1 <= upper + 1e-8,
        }),
    )
}

fn mp_check(run: &mut Run, spec: &OperatorSpec) -> Result<(), CliError> {
    let r = run.timed("principal_spectrum_point", || principal_spectrum_point(spec, &run.cfg.solver))?;
    let verdict = run.timed("mp_verdict", || verdict_from(spec, &r))?;
    let c = &run.cfg.command;
    let supersolution = match &c.test_function {
        Some(choice) => {
            let phi = test_function(spec, Some(choice), &|| Box::new(r.eigenfunction(spec)))?;
            let strict = c.strict.unwrap_or(false);
            let mt = c.mt_samples.unwrap_or(64);
            Some(run.timed("check_supersolution", || {
                check_supersolution(spec, phi.as_ref(), strict, mt, &run.cfg.solver)
            })?)
        }
        None => None,
    };
    if verdict.inconclusive {
        run.warnings.push(format!("λ₁ = {} lies inside the dead band; verdicts are inconclusive", verdict.lambda1));
    }
    run.json("mp.json", &json!({ "verdict": verdict, "supersolution": supersolution }))?;
    if let Certificate::Counterexample(ce) = &verdict.certificate {
        let mut header = vec!["index".to_string()];
        header.extend(coordinate_header(spec));
        header.extend(["eta".to_string(), "u".to_string()]);
        let rows: Vec<Vec<String>> = (0..spec.len())
            .map(|i| {
                let mut row = vec![i.to_string()];
                row.extend(spec.domain().point(i).iter().map(|x| cell(Some(*x))));
                row.push(cell(Some(ce.eta[i])));
                row.push(cell(Some(ce.snapshots[0][i])));
                row
            })
            .collect();
        run.csv("counterexample.csv", &header, &rows)?;
    }
    Ok(())
}

fn oracle_compare(run: &mut Run, spec: &OperatorSpec) -> Result<(), CliError> {
    let power = run.timed("principal_spectrum_point", || principal_spectrum_point(spec, &run.cfg.solver))?;
    let dense = run.timed("dense_oracle", || dense_oracle(spec, &run.cfg.solver))?;
    let difference = (power.lambda1 - dense).abs();
    if difference > ORACLE_TOLERANCE {
        run.warnings.push(format!("power and dense values differ by {difference}"));
    }
    run.json(
        "oracle.json",
        &json!({
            "power": power.lambda1,
            "dense": dense,
            "difference": difference,
            "tolerance": ORACLE_TOLERANCE,
            "agree": difference <= ORACLE_TOLERANCE,
        }),
    )
}
