//! Batch front-end for the `pta` library. Every subcommand prints one or
//! more tables (CSV by default, `--format json` for a `{meta, rows}`
//! object) and the output is byte-identical for identical arguments.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O
//! error.

mod report;
mod table;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pta::analytic::{closed_form_moments, log_mgf};
use pta::asymptotics::rate;
use pta::exactdist::{exact_pmf, exact_pmf_log};
use pta::model::classify_regime;
use pta::simulator::{monte_carlo, recurrence_count, sample_patterns};
use pta::ContaminationModel;

use table::{render_csv, render_json, Cell, Table};

#[derive(Parser)]
#[command(
    name = "pta",
    version,
    about = "Exact, asymptotic and Monte Carlo analysis of the pairwise group-testing procedure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample test counts and summarize them
    Simulate(SimulateArgs),
    /// Exact distribution of the test count
    Pmf(ScalarArgs),
    /// Closed-form mean and variance for every size up to n
    Moments(ScalarArgs),
    /// Moment generating function on a grid of lambda values
    Mgf(MgfArgs),
    /// Large-deviation rate function on a grid of x values
    Rate(RateArgs),
    /// Classify p against the window where pairwise testing is optimal
    Regime(RegimeArgs),
    /// Cross-validate every computation route; nonzero exit on failure
    Verify(VerifyArgs),
    /// Convergence tables for the law of large numbers, the central
    /// limit theorem and the large-deviation principle
    Report(ReportArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Number of items to classify
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Number of independent replicates
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScalarArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Number of items to classify
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MgfArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Number of items to classify
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Evaluation points, comma separated (default: 21 points on [-1, 1])
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RateArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Evaluation points, comma separated (default: 0.95, 1.1, 1.5)
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RegimeArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Probabilities to verify at, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.35])]
    p: Vec<f64>,
    /// Largest size for the pattern-exhaustive checks (at most 20)
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Per-item contamination probability
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Extra size for the central-limit table (default grid: 100, 400, 1600)
    #[arg(long)]
    n: Option<usize>,
    /// Replicates per central-limit row
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tail thresholds, comma separated (default: 0.95, 1.1, 1.5)
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    Usage(String),
    Io(io::Error),
}

impl From<pta::Error> for Failure {
    fn from(err: pta::Error) -> Self {
        Failure::Usage(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (tables, meta, code, output) = match &cli.command {
        Command::Simulate(a) => {
            let (t, m) = cmd_simulate(a)?;
            (t, m, 0, &a.output)
        }
        Command::Pmf(a) => {
            let (t, m) = cmd_pmf(a)?;
            (t, m, 0, &a.output)
        }
        Command::Moments(a) => {
            let (t, m) = cmd_moments(a)?;
            (t, m, 0, &a.output)
        }
        Command::Mgf(a) => {
            let (t, m) = cmd_mgf(a)?;
            (t, m, 0, &a.output)
        }
        Command::Rate(a) => {
            let (t, m) = cmd_rate(a)?;
            (t, m, 0, &a.output)
        }
        Command::Regime(a) => {
            let (t, m) = cmd_regime(a)?;
            (t, m, 0, &a.output)
        }
        Command::Verify(a) => {
            let (t, m, code) = cmd_verify(a)?;
            (t, m, code, &a.output)
        }
        Command::Report(a) => {
            let (t, m) = cmd_report(a)?;
            (t, m, 0, &a.output)
        }
    };
    let rendered = match output.format {
        OutFormat::Csv => render_csv(&tables),
        OutFormat::Json => render_json(finish_meta(meta, output), &tables),
    };
    match &output.out {
        Some(path) => fs::write(path, rendered).map_err(Failure::Io)?,
        None => io::stdout()
            .write_all(rendered.as_bytes())
            .map_err(Failure::Io)?,
    }
    Ok(code)
}

fn finish_meta(mut meta: Value, output: &OutputArgs) -> Value {
    let obj = meta.as_object_mut().expect("meta is an object");
    obj.insert("format".to_string(), json!("json"));
    obj.insert(
        "out".to_string(),
        match &output.out {
            Some(path) => json!(path.display().to_string()),
            None => Value::Null,
        },
    );
    meta
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    if a.reps == 0 {
        return Err(Failure::Usage("reps: need at least 1, got 0".to_string()));
    }
    let mut draws = Table::new("draws", vec!["rep", "T"]);
    let mut summary = Table::new("summary", vec!["mean", "var"]);
    if a.reps == 1 {
        let pattern = sample_patterns(&m, a.n, 1, a.seed)?
            .next()
            .expect("one replicate");
        let t = recurrence_count(&pattern);
        draws.push(vec![Cell::U64(0), Cell::U64(t)]);
        summary.push(vec![Cell::F64(t as f64), Cell::F64(f64::NAN)]);
    } else {
        let mc = monte_carlo(&m, a.n, a.reps, a.seed)?;
        for (rep, &t) in mc.samples.iter().enumerate() {
            draws.push(vec![Cell::U64(rep as u64), Cell::U64(t)]);
        }
        summary.push(vec![Cell::F64(mc.mean), Cell::F64(mc.variance)]);
    }
    let meta = json!({
        "command": "simulate", "p": a.p, "n": a.n, "reps": a.reps, "seed": a.seed,
    });
    Ok((vec![draws, summary], meta))
}

fn cmd_pmf(a: &ScalarArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    let mut t = Table::new("pmf", vec!["k", "P"]);
    match exact_pmf(&m, a.n) {
        Ok(lin) => {
            for (k, v) in lin.iter() {
                t.push(vec![Cell::U64(k), Cell::F64(v)]);
            }
        }
        // linear coefficients can underflow for extreme p and large n;
        // the log-domain table covers that range
        Err(pta::Error::Capacity { .. }) => {
            let log = exact_pmf_log(&m, a.n)?;
            for (k, lp) in log.iter() {
                t.push(vec![Cell::U64(k), Cell::F64(lp.exp())]);
            }
        }
        Err(err) => return Err(err.into()),
    }
    let meta = json!({"command": "pmf", "p": a.p, "n": a.n});
    Ok((vec![t], meta))
}

fn cmd_moments(a: &ScalarArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    if a.n == 0 {
        return Err(Failure::Usage("n: need at least 1, got 0".to_string()));
    }
    let mut t = Table::new("moments", vec!["n", "mean", "var", "source"]);
    for size in 1..=a.n {
        let row = closed_form_moments(&m, size)?;
        t.push(vec![
            Cell::U64(size as u64),
            Cell::F64(row.mean),
            Cell::F64(row.variance),
            Cell::Str(row.source.name().to_string()),
        ]);
    }
    let meta = json!({"command": "moments", "p": a.p, "n": a.n});
    Ok((vec![t], meta))
}

fn cmd_mgf(a: &MgfArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    let lambdas: Vec<f64> = if a.lambda.is_empty() {
        (-10..=10).map(|i| f64::from(i) * 0.1).collect()
    } else {
        a.lambda.clone()
    };
    let mut t = Table::new("mgf", vec!["lambda", "M", "logM"]);
    for &lambda in &lambdas {
        let log_m = log_mgf(&m, a.n, lambda)?;
        t.push(vec![
            Cell::F64(lambda),
            Cell::F64(log_m.exp()),
            Cell::F64(log_m),
        ]);
    }
    let meta = json!({"command": "mgf", "p": a.p, "n": a.n, "lambda": lambdas});
    Ok((vec![t], meta))
}

fn cmd_rate(a: &RateArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    let xs: Vec<f64> = if a.x.is_empty() {
        vec![0.95, 1.1, 1.5]
    } else {
        a.x.clone()
    };
    let mut t = Table::new("rate", vec!["x", "I", "lambda_star", "converged"]);
    for &x in &xs {
        let point = rate(&m, x);
        t.push(vec![
            Cell::F64(x),
            Cell::F64(point.rate),
            Cell::F64(point.lambda_star),
            Cell::Bool(point.converged),
        ]);
    }
    let meta = json!({"command": "rate", "p": a.p, "x": xs});
    Ok((vec![t], meta))
}

fn cmd_regime(a: &RegimeArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    let regime = classify_regime(&m);
    let mut t = Table::new("regime", vec!["p", "regime", "lower", "upper"]);
    t.push(vec![
        Cell::F64(a.p),
        Cell::Str(regime.kind.name().to_string()),
        Cell::F64(regime.lower),
        Cell::F64(regime.upper),
    ]);
    let meta = json!({"command": "regime", "p": a.p});
    Ok((vec![t], meta))
}

fn cmd_verify(a: &VerifyArgs) -> Result<(Vec<Table>, Value, u8), Failure> {
    if !(2..=20).contains(&a.n_max) {
        return Err(Failure::Usage(format!(
            "n-max: need a value in [2, 20], got {}",
            a.n_max
        )));
    }
    for &p in &a.p {
        ContaminationModel::new(p)?;
    }
    let checks = verify::run_verify(a.n_max, &a.p);
    let all_pass = checks.iter().all(|c| c.pass);
    let mut t = Table::new(
        "checks",
        vec!["name", "n", "p", "max_error", "tolerance", "pass"],
    );
    for c in checks {
        t.push(vec![
            Cell::Str(c.name.to_string()),
            c.n.map_or(Cell::Empty, Cell::U64),
            c.p.map_or(Cell::Empty, Cell::F64),
            Cell::F64(c.max_error),
            Cell::F64(c.tolerance),
            Cell::Bool(c.pass),
        ]);
    }
    let meta = json!({
        "command": "verify", "p": a.p, "n_max": a.n_max, "pass": all_pass,
    });
    Ok((vec![t], meta, if all_pass { 0 } else { 2 }))
}

fn cmd_report(a: &ReportArgs) -> Result<(Vec<Table>, Value), Failure> {
    let m = ContaminationModel::new(a.p)?;
    if a.reps < 2 {
        return Err(Failure::Usage(format!(
            "reps: need at least 2, got {}",
            a.reps
        )));
    }
    let xs: Vec<f64> = if a.x.is_empty() {
        vec![0.95, 1.1, 1.5]
    } else {
        a.x.clone()
    };
    let tables = report::run_report(&m, a.n, a.reps, a.seed, &xs)?;
    let meta = json!({
        "command": "report", "p": a.p, "n": a.n, "reps": a.reps, "seed": a.seed, "x": xs,
    });
    Ok((tables, meta))
}
