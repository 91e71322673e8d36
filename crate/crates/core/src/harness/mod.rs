//! Experiment orchestration: specs, presets, the episode loop, metrics and
//! output files.

mod metrics;
mod rollout;
mod spec;

pub use metrics::{
    decode_detail_log, encode_detail_log, episode_metrics, fmt_value, metrics_csv, parse_metrics_csv, recompute_metrics,
    EpisodeMetrics, LogHeader, MetricsRow, SlotLog, METRICS_HEADER,
};
pub use rollout::{ga_traces, run_cell, run_episode, solve_offra, CachePolicy, Cell, CellResult, GaTrace, Phase, World};
pub use spec::{preset, presets, ExperimentSpec, GaTraceSpec, Sweep, SweepVariable};

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baselines::SchemeId;
use crate::error::Result;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; `None` keeps everything in memory.
    pub out: Option<PathBuf>,
    pub detail_logs: bool,
    /// Record per-episode wall time; off by default so reruns are byte-identical.
    pub timing: bool,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

/// Mean and sample standard deviation over replications of each
/// replication's mean evaluation metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: SchemeId,
    pub value: Option<f64>,
    pub replications: usize,
    pub u_large_mean: f64,
    pub u_large_std: f64,
    pub u_small_mean: f64,
    pub u_small_std: f64,
}

pub const SUMMARY_HEADER: &str = "scheme,value,replications,u_large_mean,u_large_std,u_small_mean,u_small_std";

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Sorted by scheme, value, replication, episode.
    pub rows: Vec<MetricsRow>,
    /// Per learning scheme, the training reward of each episode averaged
    /// over replications at the first grid point.
    pub traces: BTreeMap<SchemeId, Vec<f64>>,
    pub ga_traces: Vec<GaTrace>,
}

impl RunOutput {
    /// Evaluation rows (episode `>= training_episodes`) reduced per grid point.
    pub fn summary(&self, training_episodes: usize) -> Vec<SummaryRow> {
        let mut per_rep: BTreeMap<(SchemeId, u64), (Option<f64>, BTreeMap<usize, Vec<(f64, f64)>>)> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.episode >= training_episodes) {
            let entry = per_rep
                .entry((r.scheme, r.value.map_or(0, f64::to_bits)))
                .or_insert_with(|| (r.value, BTreeMap::new()));
            entry.1.entry(r.replication).or_default().push((r.u_large, r.u_small));
        }
        per_rep
            .into_iter()
            .map(|((scheme, _), (value, reps))| {
                let means: Vec<(f64, f64)> = reps
                    .values()
                    .map(|eps| {
                        let n = eps.len() as f64;
                        (eps.iter().map(|e| e.0).sum::<f64>() / n, eps.iter().map(|e| e.1).sum::<f64>() / n)
                    })
                    .collect();
                let (ul_mean, ul_std) = mean_std(means.iter().map(|m| m.0));
                let (us_mean, us_std) = mean_std(means.iter().map(|m| m.1));
                SummaryRow {
                    scheme,
                    value,
                    replications: means.len(),
                    u_large_mean: ul_mean,
                    u_large_std: ul_std,
                    u_small_mean: us_mean,
                    u_small_std: us_std,
                }
            })
            .collect()
    }
}

/// Mean and sample standard deviation (zero for a single sample).
pub fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.partial"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Runs every cell of `spec`, writing per-cell artifacts as cells finish and
/// the merged CSVs at the end. `metrics.csv` is written last.
pub fn run(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunOutput> {
    spec.validate()?;
    if let Some(out) = &opts.out {
        fs::create_dir_all(out)?;
        if spec.schemes.iter().any(|s| s.learns()) {
            fs::create_dir_all(out.join("ckpt"))?;
        }
        if opts.detail_logs {
            fs::create_dir_all(out.join("logs"))?;
        }
    }

    let grid = spec.grid();
    let mut cells = Vec::new();
    for &scheme in &spec.schemes {
        for value_index in 0..grid.len() {
            for replication in 0..spec.replications {
                cells.push(Cell {
                    scheme,
                    value_index,
                    replication,
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let results: Vec<(Cell, Vec<MetricsRow>, Vec<f64>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                let res = run_cell(spec, cell, opts.detail_logs, opts.timing)?;
                if let Some(out) = &opts.out {
                    persist_cell(out, &res)?;
                }
                log::info!("finished {}", cell.stem());
                Ok((cell, res.rows, res.rewards))
            })
            .collect::<Result<_>>()
    })?;

    let mut output = RunOutput::default();
    let mut trace_sums: BTreeMap<SchemeId, (Vec<f64>, usize)> = BTreeMap::new();
    for (cell, rows, rewards) in results {
        output.rows.extend(rows);
        if cell.value_index == 0 && !rewards.is_empty() {
            let entry = trace_sums.entry(cell.scheme).or_insert_with(|| (vec![0.0; rewards.len()], 0));
            // replications arrive in order, so the sums are order-stable
            for (s, r) in entry.0.iter_mut().zip(&rewards) {
                *s += r;
            }
            entry.1 += 1;
        }
    }
    output.rows.sort_by_key(|a| a.key());
    output.traces = trace_sums
        .into_iter()
        .map(|(scheme, (sums, n))| (scheme, sums.into_iter().map(|s| s / n as f64).collect()))
        .collect();
    if let Some(t) = &spec.ga_trace {
        output.ga_traces = ga_traces(spec, t.runs, t.generations)?;
    }

    if let Some(out) = &opts.out {
        write_outputs(out, spec, &output)?;
    }
    Ok(output)
}

fn persist_cell(out: &Path, res: &CellResult) -> Result<()> {
    if let Some(agent) = res.policy.agent() {
        let bytes = agent.save(Vec::new())?;
        write_atomic(&out.join("ckpt").join(format!("{}.ckpt", res.cell.stem())), &bytes)?;
    }
    if !res.slots.is_empty() {
        let header = LogHeader {
            scheme: res.cell.scheme,
            value: res.value,
            replication: res.cell.replication,
            cost_balance: res.cfg.cost_balance,
            num_tds: res.cfg.num_tds,
        };
        let text = encode_detail_log(&header, &res.slots);
        write_atomic(&out.join("logs").join(format!("{}.jsonl", res.cell.stem())), text.as_bytes())?;
    }
    Ok(())
}

fn write_outputs(out: &Path, spec: &ExperimentSpec, output: &RunOutput) -> Result<()> {
    for (scheme, trace) in &output.traces {
        let mut text = String::from("episode,reward\n");
        for (e, r) in trace.iter().enumerate() {
            text.push_str(&format!("{e},{r}\n"));
        }
        write_atomic(&out.join(format!("trace_{scheme}.csv")), text.as_bytes())?;
    }
    if !output.ga_traces.is_empty() {
        let mut text = String::from("solver,run,generation,best_fitness\n");
        for t in &output.ga_traces {
            for (g, f) in t.trace.iter().enumerate() {
                text.push_str(&format!("{},{},{g},{f}\n", t.solver, t.run));
            }
        }
        write_atomic(&out.join("ga_trace.csv"), text.as_bytes())?;
    }
    if !output.rows.is_empty() {
        let mut text = format!("{SUMMARY_HEADER}\n");
        for s in output.summary(spec.episodes) {
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.scheme,
                fmt_value(s.value),
                s.replications,
                s.u_large_mean,
                s.u_large_std,
                s.u_small_mean,
                s.u_small_std
            ));
        }
        write_atomic(&out.join("summary.csv"), text.as_bytes())?;
    }
    let resolved = serde_json::to_string_pretty(spec).map_err(crate::error::ConfigError::from)?;
    write_atomic(&out.join("spec.json"), resolved.as_bytes())?;
    write_atomic(&out.join("metrics.csv"), metrics_csv(&output.rows).as_bytes())?;
    Ok(())
}
