use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use edgecache::harness::{
    decode_detail_log, parse_metrics_csv, preset, presets, recompute_metrics, run, ExperimentSpec, RunOptions,
    METRICS_HEADER,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Two-timescale edge caching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs and checkpoints.
    Run(RunArgs),
    /// Rebuild metrics from a detail log and check them against metrics.csv.
    Recompute {
        #[arg(long)]
        log: PathBuf,
        /// Defaults to `metrics.csv` in the run directory that holds the log.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// List the preset names.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with ExperimentSpec fields; applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Training episodes of the learning schemes.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Keep per-slot logs under `<out>/logs`.
    #[arg(long)]
    detail_logs: bool,
    /// Worker threads (default: one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record wall time per episode (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Recompute { log, metrics } => recompute_command(&log, metrics.as_deref()),
        Command::Presets => {
            for p in presets() {
                println!("{}", p.name);
            }
            Ok(())
        }
    }
}

fn resolve_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let base = match &args.preset {
        Some(name) => preset(name)?,
        None => ExperimentSpec::default(),
    };
    let mut overlay = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Value>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => json!({}),
    };
    let Some(obj) = overlay.as_object_mut() else {
        bail!("config file must hold a JSON object");
    };
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), json!(seed));
    }
    if let Some(reps) = args.reps {
        obj.insert("replications".into(), json!(reps));
    }
    if let Some(e) = args.episodes {
        obj.insert("episodes".into(), json!(e));
    }
    if let Some(e) = args.eval_episodes {
        obj.insert("eval_episodes".into(), json!(e));
    }
    Ok(base.with_overlay(&overlay)?)
}

fn run_command(args: RunArgs) -> Result<()> {
    let spec = resolve_spec(&args)?;
    let opts = RunOptions {
        out: Some(args.out.clone()),
        detail_logs: args.detail_logs,
        timing: args.timing,
        jobs: args.jobs,
    };
    let output = run(&spec, &opts).with_context(|| format!("running {}", spec.name))?;
    println!("{} rows written to {}", output.rows.len(), args.out.join("metrics.csv").display());
    for s in output.summary(spec.episodes) {
        println!(
            "{:<15} {:>8} U_large {:>10.3} ± {:<8.3} U_small {:.4}",
            s.scheme.to_string(),
            edgecache::harness::fmt_value(s.value),
            s.u_large_mean,
            s.u_large_std,
            s.u_small_mean
        );
    }
    Ok(())
}

fn recompute_command(log: &Path, metrics: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let (header, slots) = decode_detail_log(&text)?;
    let rows = recompute_metrics(&header, &slots);
    println!("{METRICS_HEADER}");
    for r in &rows {
        println!("{}", r.to_csv());
    }

    let metrics_path = match metrics {
        Some(p) => p.to_path_buf(),
        None => log
            .parent()
            .and_then(Path::parent)
            .map(|d| d.join("metrics.csv"))
            .context("cannot locate metrics.csv; pass --metrics")?,
    };
    let stored_text =
        fs::read_to_string(&metrics_path).with_context(|| format!("reading {}", metrics_path.display()))?;
    let stored = parse_metrics_csv(&stored_text)?;
    for r in &rows {
        let Some(s) = stored.iter().find(|s| s.key() == r.key()) else {
            bail!("no stored row for {} episode {}", r.scheme, r.episode);
        };
        if !s.same_metrics(r) {
            bail!("mismatch at {} episode {}:\n stored     {}\n recomputed {}", r.scheme, r.episode, s.to_csv(), r.to_csv());
        }
    }
    eprintln!("{} rows match {}", rows.len(), metrics_path.display());
    Ok(())
}
