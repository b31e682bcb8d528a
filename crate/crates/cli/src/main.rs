mod config;
mod experiments;
mod signal;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use experiments::{Artifact, Outcome};

#[derive(Parser)]
#[command(name = "dms", version, about = "Dynamic molecular switch experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Experiment config (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_path` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a config key, e.g. `--set grid.points=101`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// State currents over a bias grid.
    IvSweep,
    /// Average bridge populations over a bias grid.
    BridgePop,
    /// Steady-state probabilities and currents under constant bias.
    SteadyState,
    /// Probability trajectories after switching on constant biases.
    StepResponse,
    /// Probability and current under sinusoidal bias.
    SineResponse,
    /// Discrete-time fading-memory filter over a sampled signal.
    DtFilter,
    /// Run the verification suite; exits nonzero if any check fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::IvSweep => "iv-sweep",
            Command::BridgePop => "bridge-pop",
            Command::SteadyState => "steady-state",
            Command::StepResponse => "step-response",
            Command::SineResponse => "sine-response",
            Command::DtFilter => "dt-filter",
            Command::Verify => "verify",
        }
    }
}

fn run_with<E, F>(doc: Value, name: &str, f: F) -> Result<(Value, Option<PathBuf>, Outcome)>
where
    E: serde::de::DeserializeOwned + Serialize,
    F: FnOnce(&config::Common, &E) -> Result<Outcome>,
{
    let (common, exp) = config::split::<E>(doc, name)?;
    let snapshot = config::snapshot(name, &common, &exp)?;
    let outcome = f(&common, &exp)?;
    Ok((snapshot, common.output_path.clone(), outcome))
}

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    let mut doc = config::load(g.config.as_deref())?;
    for s in &g.overrides {
        config::apply_set(&mut doc, s)?;
    }
    if let Some(seed) = g.seed {
        config::apply_seed(&mut doc, seed);
    }
    let base = g.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(".")).to_path_buf();
    let name = cli.command.name();
    let start = Instant::now();
    let (snapshot, config_out, outcome) = match cli.command {
        Command::IvSweep => run_with(doc, name, experiments::iv_sweep)?,
        Command::BridgePop => run_with(doc, name, experiments::bridge_pop)?,
        Command::SteadyState => run_with(doc, name, experiments::steady_state)?,
        Command::StepResponse => run_with(doc, name, experiments::step_response)?,
        Command::SineResponse => run_with(doc, name, experiments::sine_response)?,
        Command::DtFilter => run_with(doc, name, |c, e| experiments::dt_filter_run(c, e, &base))?,
        Command::Verify => run_with(doc, name, experiments::verify)?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    let out = g.out.clone().or(config_out).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    for a in &outcome.artifacts {
        let path = out.join(a.name());
        match a {
            Artifact::Csv { table, .. } => table.write(&path),
            Artifact::Json { text, .. } => std::fs::write(&path, text).map_err(Into::into),
        }
        .with_context(|| format!("writing {}", path.display()))?;
        files.push(json!({"file": a.name(), "rows": a.rows()}));
    }
    let manifest = json!({
        "tool": "dms",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config_file": g.config,
        "overrides": g.overrides,
        "threads": rayon::current_num_threads(),
        "config": snapshot,
        "outputs": files,
        "success": outcome.success,
        "wall_time_s": elapsed,
    });
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    let rows: usize = outcome.artifacts.iter().map(Artifact::rows).sum();
    println!(
        "{name}: wrote {} file(s), {rows} rows to {} in {elapsed:.2} s",
        outcome.artifacts.len(),
        out.display()
    );
    Ok(outcome.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
