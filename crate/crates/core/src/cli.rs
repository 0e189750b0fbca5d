//! Command-line front end: `solve`, `gen`, `bench` and `check`.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 solve stopped at
//! `maxiter`, 3 property failure.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::bench::{run_experiment, Algorithm, ExperimentSpec};
use crate::checks::{run_suites, CheckOptions, Fault, Suite};
use crate::datagen::{gen_instance, objective_for, read_instance, write_instance, InstanceKind, InstanceSpec};
use crate::model::{default_config, SolverConfig, StopReason};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MAXITER: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sapg", version, about = "Smoothing accelerated proximal gradient solver and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and write result.json and trace.csv.
    Solve(SolveArgs),
    /// Generate a seeded instance and write it to a directory.
    Gen(GenArgs),
    /// Run an experiment spec and write tables, curves and a manifest.
    Bench(BenchArgs),
    /// Run the invariant suites.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Sapg,
    Spg,
    Isapg,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Sapg => Algorithm::Sapg,
            AlgorithmArg::Spg => Algorithm::Spg,
            AlgorithmArg::Isapg => Algorithm::Isapg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    LinearL1,
    Censored,
}

impl From<KindArg> for InstanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::LinearL1 => InstanceKind::LinearL1,
            KindArg::Censored => InstanceKind::Censored,
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, value_enum, default_value = "linear-l1")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 150)]
    pub m: usize,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub spar: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl InstanceArgs {
    fn spec(&self) -> InstanceSpec {
        InstanceSpec::new(self.kind.into(), self.m, self.n, self.spar, self.seed)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Directory written by `sapg gen`; otherwise an instance is generated.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub generate: InstanceArgs,
    /// JSON file with solver settings; omitted keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` applied after the config file. Values are parsed as JSON.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_enum, default_value = "sapg")]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "instance")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment spec JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Dotted `key=value` applied to the spec, e.g. `config.maxiter=500`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Replaces the spec's base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run only these suites (linalg, smoothing, prox, energy).
    #[arg(long = "suite")]
    pub suites: Vec<Suite>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub probes: usize,
    #[arg(long, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// Applies `patch` onto `base`, rejecting keys that `base` lacks.
fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(dst), Value::Object(src)) => {
            for (key, v) in src {
                let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                let slot = dst.get_mut(key).ok_or_else(|| anyhow!("unknown key `{full}`"))?;
                if slot.is_object() && v.is_object() {
                    merge(slot, v, &full)?;
                } else {
                    *slot = v.clone();
                }
            }
            Ok(())
        }
        _ => bail!("`{path}` must be a JSON object"),
    }
}

fn parse_override(item: &str) -> Result<Value> {
    let (key, raw) = item.split_once('=').ok_or_else(|| anyhow!("override `{item}` is not of the form key=value"))?;
    if key.is_empty() {
        bail!("override `{item}` has an empty key");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut nested = value;
    for part in key.rsplit('.') {
        let mut obj = serde_json::Map::new();
        obj.insert(part.to_string(), nested);
        nested = Value::Object(obj);
    }
    Ok(nested)
}

/// `base` with the optional JSON file and then each override merged in.
pub fn layered<T: Serialize + DeserializeOwned>(base: &T, file: Option<&Path>, overrides: &[String]) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    if let Some(path) = file {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let patch: Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
        merge(&mut value, &patch, "").with_context(|| format!("in {}", path.display()))?;
    }
    for item in overrides {
        merge(&mut value, &parse_override(item)?, "").with_context(|| format!("in --override {item}"))?;
    }
    serde_json::from_value(value).context("settings do not match the expected schema")
}

#[derive(Serialize)]
struct ResultFile<'a> {
    algorithm: &'static str,
    iterations: usize,
    stop_reason: StopReason,
    final_objective: f64,
    x_final: &'a [f64],
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let instance = match &args.instance {
        Some(dir) => read_instance(dir).with_context(|| format!("cannot read instance from {}", dir.display()))?,
        None => gen_instance(&args.generate.spec())?,
    };
    let prob = objective_for(&instance, instance.spec.kind)?;
    let cfg: SolverConfig = layered(&default_config(prob.dim()), args.config.as_deref(), &args.overrides)?;
    let algorithm = Algorithm::from(args.algorithm);
    let result = algorithm.solve(&prob, &cfg)?;

    fs::create_dir_all(&args.out)?;
    let file = ResultFile {
        algorithm: algorithm.label(),
        iterations: result.iterations,
        stop_reason: result.stop_reason,
        final_objective: result.final_objective(),
        x_final: result.x_final.as_slice(),
    };
    fs::write(args.out.join("result.json"), serde_json::to_string_pretty(&file)? + "\n")?;
    result.trace.write_csv(fs::File::create(args.out.join("trace.csv"))?)?;
    println!(
        "{}: {} iterations, stop {:?}, f = {:.6}",
        algorithm.label(),
        result.iterations,
        result.stop_reason,
        result.final_objective()
    );
    Ok(match result.stop_reason {
        StopReason::ResidualMet => EXIT_OK,
        StopReason::Maxiter => EXIT_MAXITER,
    })
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let instance = gen_instance(&args.instance.spec())?;
    write_instance(&args.out, &instance)?;
    println!("wrote {}x{} instance to {}", instance.a.rows(), instance.a.cols(), args.out.display());
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("cannot read {}", args.config.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).with_context(|| format!("invalid spec {}", args.config.display()))?;
    let mut spec: ExperimentSpec = layered(&spec, None, &args.overrides)?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    let report = run_experiment(&spec, &args.out)?;
    for row in &report.rows {
        println!(
            "{:>5} {:>5} {:>4.0}% {:<5} iter {:>8.1}  time {:.4}s{}",
            row.m,
            row.n,
            row.spar * 100.0,
            row.algorithm,
            row.mean_iter,
            row.mean_time_s,
            if row.partial { "  (partial)" } else { "" }
        );
    }
    for f in &report.failures {
        eprintln!("trial {} of {}x{} {} {} failed: {}", f.trial, f.m, f.n, f.spar, f.algorithm, f.error);
    }
    Ok(if report.all_ok() { EXIT_OK } else { EXIT_USAGE })
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let suites = if args.suites.is_empty() { Suite::ALL.to_vec() } else { args.suites.clone() };
    let opts = CheckOptions { probes: args.probes, seed: args.seed, fault: args.inject_fault };
    let mut ok = true;
    for report in run_suites(&suites, &opts) {
        let checks = report.checks.len();
        let failed: Vec<_> = report.failures().collect();
        println!("{:<10} {}/{} invariants hold", report.suite.name(), checks - failed.len(), checks);
        for f in failed {
            ok = false;
            println!(
                "  violated: {} ({} of {} probes, worst excess {:.3e})",
                f.invariant, f.violations, f.probes, f.worst_excess
            );
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_PROPERTY })
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Check(a) => cmd_check(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_USAGE
    })
}
