use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dyncover::harness::{parse_gamma, plot_data, read_metrics, write_metrics, write_plot_data};
use dyncover::trace::{generate, FunctionSpec, GenKind, GenParams, Trace};
use dyncover::{
    bounds_of, run_trace, verify_3increasing, verify_submodular, AuditChoice, OracleKind, Rational,
    RunMode, RunOptions,
};
use rayon::prelude::*;
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "dyncover",
    version,
    about = "Fully-dynamic submodular cover: trace generation, replay and metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and write per-event metrics plus a JSON summary.
    Run(RunArgs),
    /// Generate a seeded trace.
    Gen(GenArgs),
    /// Run many seeded traces in parallel and print one summary per line.
    Sweep(SweepArgs),
    /// Turn a metrics CSV into (series, x, y) rows.
    PlotData {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a function file for monotone submodularity and the 3-increasing property.
    Verify {
        #[arg(long)]
        function: PathBuf,
    },
}

#[derive(Args)]
struct AlgoArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: RunMode,
    /// `e`, `e2` or a rational such as `5` or `7/2`.
    #[arg(long, value_parser = parse_gamma)]
    gamma: Option<Rational>,
    /// Extra potentials to audit: tsallis, h, sqrt, shannon or all.
    #[arg(long, value_delimiter = ',', value_parser = parse_audit)]
    audit: Vec<AuditChoice>,
    #[arg(long, default_value = "none", value_parser = parse_oracle)]
    oracle: OracleKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    fmin: Option<Rational>,
    #[arg(long)]
    fmax: Option<Rational>,
}

impl AlgoArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            mode: self.mode,
            gamma: self.gamma,
            audit: self.audit.clone(),
            oracle: self.oracle,
            seed: self.seed,
            fmin: self.fmin,
            fmax: self.fmax,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Metrics CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary; defaults to the metrics path with a `.summary.json` suffix, else stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct GenParamsArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 60)]
    ops: usize,
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long)]
    lifo: bool,
    #[arg(long, default_value_t = 1.0)]
    cost_spread: f64,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 4)]
    items: usize,
    #[arg(long, default_value_t = 0.6)]
    insert_prob: f64,
}

impl GenParamsArgs {
    fn params(&self, seed: u64) -> GenParams {
        GenParams {
            kind: self.kind,
            n: self.n,
            ops: self.ops,
            seed,
            edges: self.edges,
            batch: self.batch,
            lifo: self.lifo,
            cost_spread: self.cost_spread,
            r: self.r,
            items: self.items,
            insert_prob: self.insert_prob,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    params: GenParamsArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: GenParamsArgs,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Seeds `0..seeds`.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    s.parse()
}

fn parse_audit(s: &str) -> Result<AuditChoice, String> {
    s.parse()
}

fn parse_oracle(s: &str) -> Result<OracleKind, String> {
    s.parse()
}

fn parse_kind(s: &str) -> Result<GenKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| {
        format!("unknown trace kind {s:?}; expected hvc, coverage, junta, mixed, metric-mst or metric-steiner")
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_trace(path: &Path) -> Result<Trace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Trace::read(BufReader::new(file)).with_context(|| format!("reading trace {}", path.display()))
}

fn run(args: RunArgs) -> Result<bool> {
    let trace = load_trace(&args.trace)?;
    let out = run_trace(&trace, &args.algo.options()).context("run failed")?;
    write_metrics(&out.rows, output(args.out.as_deref())?)?;
    let summary = serde_json::to_string_pretty(&out.summary)?;
    let summary_path = args
        .summary
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("summary.json")));
    match summary_path {
        Some(p) => std::fs::write(&p, summary + "\n")
            .with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{summary}"),
    }
    if !out.summary.passed {
        log::warn!(
            "checks failed: {} audit failures, {} competitive violations, {} infeasible steps, recourse ok: {}",
            out.summary.audit_failures,
            out.summary.competitive_violations,
            out.summary.infeasible_steps,
            out.summary.recourse_ok
        );
    }
    Ok(out.summary.passed)
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let opts = args.algo.options();
    let results: Vec<Result<(u64, dyncover::RunSummary)>> = (0..args.seeds)
        .into_par_iter()
        .map(|seed| {
            let trace = generate(&args.params.params(seed))?;
            let opts = RunOptions {
                seed,
                ..opts.clone()
            };
            Ok((
                seed,
                run_trace(&trace, &opts)
                    .with_context(|| format!("seed {seed}"))?
                    .summary,
            ))
        })
        .collect();
    let mut all_passed = true;
    let mut stdout = io::stdout().lock();
    for r in results {
        let (seed, summary) = r?;
        all_passed &= summary.passed;
        let line = serde_json::json!({ "seed": seed, "summary": summary });
        writeln!(stdout, "{line}")?;
    }
    Ok(all_passed)
}

#[derive(Deserialize)]
struct FunctionFile {
    ground_size: usize,
    function: FunctionSpec,
    #[serde(default)]
    fmin: Option<Rational>,
}

fn verify(path: &Path) -> Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: FunctionFile = serde_json::from_str(&text).context("parsing function file")?;
    let f = file.function.build(file.ground_size)?;
    let submodular = verify_submodular(&f)?;
    let three = verify_3increasing(&f)?;
    let bounds = bounds_of(&f, file.fmin).ok();
    let report = serde_json::json!({
        "monotone_submodular": submodular,
        "three_increasing": three,
        "fmax": bounds.as_ref().map(|b| b.fmax),
        "fmin": bounds.as_ref().map(|b| b.fmin),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(submodular)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => (|| {
            let trace = generate(&args.params.params(args.seed))?;
            trace.write(output(args.out.as_deref())?)?;
            Ok(true)
        })(),
        Command::Sweep(args) => sweep(args),
        Command::PlotData { metrics, out } => (|| {
            let file =
                File::open(&metrics).with_context(|| format!("opening {}", metrics.display()))?;
            let rows = read_metrics(file).context("reading metrics")?;
            write_plot_data(&plot_data(&rows), output(out.as_deref())?)?;
            Ok(true)
        })(),
        Command::Verify { function } => verify(&function),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
