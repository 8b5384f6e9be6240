//! `cogent` — trace-driven edge-cache simulator with generative hits.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cogent_core::controller::{build_samples, train, DecisionTree, Horizon, TreeConfig};
use cogent_core::engine::run;
use cogent_core::record::TraceStats;
use cogent_core::synth::{generate, SyntheticSpec};

use cogent_sim::config::{parse_architecture, RunConfig};
use cogent_sim::io::{read_tree_file, write_tree_file};
use cogent_sim::sweep::{job_matrix, run_sweep, write_sweep_csv};
use cogent_sim::{read_trace_file, write_trace_file};

#[derive(Parser)]
#[command(name = "cogent", version, about = "Edge-cache simulator with generative hits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace CSV.
    Generate(GenerateArgs),
    /// Parse a trace and print summary statistics.
    Validate { #[arg(long)] trace: PathBuf },
    /// Train a reuse-prediction tree on a trace prefix.
    Train(TrainArgs),
    /// Replay a trace and report latency, bandwidth, and redundancy.
    Run(RunArgs),
    /// Replay a trace over a matrix of architectures/policies/capacities.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    groups: usize,
    #[arg(long, default_value_t = 4)]
    variants: usize,
    #[arg(long, default_value_t = 10_000)]
    requests: usize,
    #[arg(long, default_value_t = 1.0)]
    zipf_alpha: f64,
    #[arg(long, default_value_t = 1_000.0)]
    mean_interarrival_us: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    block_fraction: f64,
    #[arg(long, default_value_t = 65_536)]
    size_min: u64,
    #[arg(long, default_value_t = 262_144)]
    size_max: u64,
    #[arg(long, default_value_t = 231_070)]
    origin_base_us: u64,
    #[arg(long, default_value_t = 0)]
    origin_jitter_us: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Leading fraction of the trace to train on.
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 20)]
    min_leaf: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    /// key=value config file; CLI flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reuse-prediction tree (enables two-pronged decisions when set).
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Inline config overrides, repeatable: --set policy=arc
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the per-window time series as CSV.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Echo the effective configuration before running.
    #[arg(long)]
    echo_config: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Comma-separated capacities in bytes.
    #[arg(long, value_delimiter = ',', required = true)]
    capacities: Vec<u64>,
    /// Comma-separated policies (default: the configured one).
    #[arg(long, value_delimiter = ',')]
    policies: Vec<String>,
    /// Comma-separated architectures (default: the configured one).
    #[arg(long, value_delimiter = ',')]
    architectures: Vec<String>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>, sets: &[String]) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_text(&text)?;
    }
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .with_context(|| format!("--set expects key=value, got `{s}`"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn sweep_threads() -> usize {
    std::env::var("COGENT_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => {
            let spec = SyntheticSpec {
                groups: a.groups,
                variants_per_group: a.variants,
                requests: a.requests,
                zipf_alpha: a.zipf_alpha,
                mean_interarrival_us: a.mean_interarrival_us,
                seed: a.seed,
                block_fraction: a.block_fraction,
                size_min: a.size_min,
                size_max: a.size_max,
                origin_base_us: a.origin_base_us,
                origin_jitter_us: a.origin_jitter_us,
                ..SyntheticSpec::default()
            };
            let trace = generate(&spec)?;
            write_trace_file(&a.out, &trace)?;
            println!("wrote {} requests to {}", trace.len(), a.out.display());
        }
        Command::Validate { trace } => {
            let records = read_trace_file(&trace)?;
            let stats = TraceStats::compute(&records);
            println!("requests: {}", stats.records);
            println!("unique keys: {}", stats.unique_keys);
            println!("unique content groups: {}", stats.unique_content_ids);
            println!("requested bytes: {}", stats.byte_volume);
            println!("span_us: {}", stats.duration_us);
            println!("ok");
        }
        Command::Train(a) => {
            if !(0.0 < a.fraction && a.fraction <= 1.0) {
                bail!("--fraction must lie in (0, 1]");
            }
            let records = read_trace_file(&a.trace)?;
            if records.is_empty() {
                bail!("trace is empty");
            }
            let n = ((records.len() as f64 * a.fraction) as usize).max(1);
            let samples = build_samples(&records[..n], Horizon::default(), 10_000);
            let tree = train(
                &samples,
                TreeConfig { max_depth: a.max_depth, min_leaf: a.min_leaf },
            )?;
            write_tree_file(&a.out, &tree)?;
            println!(
                "trained on {} samples: depth={} leaves={} training-accuracy={:.4}",
                samples.len(),
                tree.depth(),
                tree.leaf_count(),
                tree.accuracy(&samples)
            );
        }
        Command::Run(a) => {
            let mut cfg = load_config(a.config.as_ref(), &a.sets)?;
            let tree: Option<DecisionTree> = a.tree.as_ref().map(read_tree_file).transpose()?;
            if tree.is_some() && !a.sets.iter().any(|s| s.starts_with("two_pronged")) {
                cfg.two_pronged = true;
            }
            if a.echo_config {
                print!("{}", cfg.echo());
            }
            let trace = read_trace_file(&a.trace)?;
            let report = run(&trace, &cfg.to_settings(tree))?;
            if let Some(path) = &a.json {
                let f = std::io::BufWriter::new(fs::File::create(path)?);
                cogent_sim::report::write_json(f, &report)?;
            }
            if let Some(path) = &a.series {
                let mut f = std::io::BufWriter::new(fs::File::create(path)?);
                cogent_sim::report::write_series_csv(&mut f, &report)?;
                f.flush()?;
            }
            println!("{}", cogent_sim::report::summary_line(&report));
        }
        Command::Sweep(a) => {
            let cfg = load_config(a.config.as_ref(), &a.sets)?;
            let tree: Option<DecisionTree> = a.tree.as_ref().map(read_tree_file).transpose()?;
            let architectures = if a.architectures.is_empty() {
                vec![cfg.architecture]
            } else {
                a.architectures
                    .iter()
                    .map(|s| {
                        parse_architecture(s)
                            .with_context(|| format!("unknown architecture `{s}`"))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            };
            let policies = if a.policies.is_empty() {
                vec![cfg.policy]
            } else {
                a.policies
                    .iter()
                    .map(|s| {
                        cogent_core::policy::PolicyKind::parse(s)
                            .with_context(|| format!("unknown policy `{s}`"))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            };
            let trace = read_trace_file(&a.trace)?;
            let jobs = job_matrix(&architectures, &policies, &a.capacities);
            let rows = run_sweep(&trace, &cfg, tree.as_ref(), &jobs, sweep_threads())?;
            match &a.out {
                Some(path) => {
                    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
                    write_sweep_csv(&mut f, &rows)?;
                    f.flush()?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => write_sweep_csv(std::io::stdout().lock(), &rows)?,
            }
        }
    }
    Ok(())
}
