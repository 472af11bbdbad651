//! `mtm`: experiment runner for the mobile telephone model gossip
//! simulator.
//!
//! Subcommands: `run` (execute a config for every seed), `sweep` (vary one
//! config key), `verify-trace` (re-check a serialized trace against the
//! model invariants), `graph-info` (print n, max degree, and expansion).
//!
//! Configs are `key = value` files (see the core crate's harness docs);
//! `--set key=value` overrides any key from the command line. The
//! `MTM_SEED` environment variable supplies the default seed when a config
//! lists none.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mtm_core::amtm::check_guarantees;
use mtm_core::analysis::{
    async_metrics_csv, check_async_token_invariants, check_trace_invariants, sync_metrics_csv,
    DEFAULT_WINDOW_FACTOR,
};
use mtm_core::graph::EXPANSION_SAMPLE_COUNT;
use mtm_core::harness::{
    build_graph, run, runs_csv, summary_csv, sweep, EngineKind, ExperimentConfig, SweepRow,
};
use mtm_core::trace::{async_from_text, async_to_text, sync_from_text, sync_to_text, trace_kind};

#[derive(Parser)]
#[command(name = "mtm", about, version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override or supply a config key, e.g. `--set seeding.k=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write one CSV row per run to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write each run's trace into this directory.
        #[arg(long)]
        traces_dir: Option<PathBuf>,
    },
    /// Vary one config key over a list of values, running every seed each
    /// time.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// The config key to vary, e.g. `seeding.k`.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Write one CSV row per run to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-value median/quartile summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Re-check a serialized trace against the model invariants.
    VerifyTrace {
        /// Path to a trace produced by `run --traces-dir`.
        #[arg(long)]
        path: PathBuf,
        /// Write per-round (sync) or per-window (async) metric CSV here.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Print node count, edge count, max degree, and vertex expansion.
    GraphInfo {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, String> {
    let default_seed = match std::env::var("MTM_SEED") {
        Ok(v) => Some(
            v.parse::<u64>()
                .map_err(|_| format!("MTM_SEED must be an integer, found `{v}`"))?,
        ),
        Err(_) => None,
    };
    let base = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut text = base;
    for set in &args.sets {
        let Some((key, value)) = set.split_once('=') else {
            return Err(format!("--set expects KEY=VALUE, found `{set}`"));
        };
        // Overrides win over file entries; express each as a replacement.
        text = text
            .lines()
            .filter(|l| {
                l.split_once('=')
                    .is_none_or(|(k, _)| k.trim() != key.trim())
            })
            .collect::<Vec<_>>()
            .join("\n");
        text.push('\n');
        text.push_str(&format!("{} = {}\n", key.trim(), value.trim()));
    }
    ExperimentConfig::parse(&text, default_seed).map_err(|e| e.to_string())
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_run(
    config: &ConfigArgs,
    out: Option<PathBuf>,
    traces_dir: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let cfg = load_config(config)?;
    let out = out.or_else(|| cfg.output.clone().map(PathBuf::from));
    let outcomes = run(&cfg).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for outcome in &outcomes {
        let r = &outcome.result;
        println!(
            "graph={} k={} engine={} seed={} completion={} transfers={} invariants={}",
            r.graph_label,
            r.k,
            match r.engine {
                EngineKind::Sync => "sync",
                EngineKind::Async => "async",
            },
            r.seed,
            r.completion
                .map_or_else(|| "none".to_string(), |c| c.to_string()),
            r.transfers,
            if r.invariants_ok { "ok" } else { "VIOLATED" },
        );
        if let Some(dir) = &traces_dir {
            let (name, text) = match (&outcome.sync_trace, &outcome.async_trace) {
                (Some(t), _) => (format!("sync-{:016x}-{}.trace", r.config_digest, r.seed),
                    sync_to_text(t)),
                (_, Some(t)) => (format!("async-{:016x}-{}.trace", r.config_digest, r.seed),
                    async_to_text(t)),
                _ => unreachable!("every outcome carries a trace"),
            };
            write_file(&dir.join(name), &text)?;
        }
        rows.push(SweepRow {
            axis: String::new(),
            value: String::new(),
            result: r.clone(),
        });
    }
    if let Some(path) = out {
        write_file(&path, &runs_csv(&rows))?;
    }
    let ok = rows.iter().all(|r| r.result.invariants_ok);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_sweep(
    config: &ConfigArgs,
    axis: &str,
    values: &[String],
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<ExitCode, String> {
    if values.is_empty() {
        return Err("--values must list at least one value".into());
    }
    let cfg = load_config(config)?;
    let out = out.or_else(|| cfg.output.clone().map(PathBuf::from));
    let rows = sweep(&cfg, axis, values).map_err(|e| e.to_string())?;
    print!("{}", summary_csv(&rows));
    if let Some(path) = out {
        write_file(&path, &runs_csv(&rows))?;
    }
    if let Some(path) = summary {
        write_file(&path, &summary_csv(&rows))?;
    }
    let ok = rows.iter().all(|r| r.result.invariants_ok);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_verify(path: &PathBuf, metrics_out: Option<PathBuf>) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let violations: Vec<String> = match trace_kind(&text) {
        Some("sync") => {
            let trace = sync_from_text(&text).map_err(|e| e.to_string())?;
            if let Some(out) = &metrics_out {
                let alpha = (trace.graph.node_count()
                    <= mtm_core::graph::EXACT_EXPANSION_MAX_N)
                    .then(|| trace.graph.vertex_expansion_exact().map(|(a, _)| a).ok())
                    .flatten();
                write_file(out, &sync_metrics_csv(&trace, alpha))?;
            }
            check_trace_invariants(&trace)
                .violations
                .into_iter()
                .map(|v| format!("{v:?}"))
                .collect()
        }
        Some("async") => {
            let trace = async_from_text(&text).map_err(|e| e.to_string())?;
            if let Some(out) = &metrics_out {
                write_file(out, &async_metrics_csv(&trace, DEFAULT_WINDOW_FACTOR))?;
            }
            let mut all: Vec<String> = check_async_token_invariants(&trace)
                .violations
                .into_iter()
                .map(|v| format!("{v:?}"))
                .collect();
            all.extend(
                check_guarantees(&trace, &trace.bounds)
                    .into_iter()
                    .map(|v| format!("{v:?}")),
            );
            all
        }
        _ => return Err("not a recognized trace file".into()),
    };
    if violations.is_empty() {
        println!("ok: no violations");
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        println!("{} violation(s)", violations.len());
        Ok(ExitCode::from(1))
    }
}

fn cmd_graph_info(config: &ConfigArgs) -> Result<ExitCode, String> {
    let cfg = load_config(config)?;
    let built = build_graph(&cfg.graph).map_err(|e| e.to_string())?;
    let g = &built.graph;
    println!("graph: {}", cfg.graph_label());
    println!("n: {}", g.node_count());
    println!("m: {}", g.edge_count());
    println!("max_degree: {}", g.max_degree());
    if let Some(q) = built.q {
        println!("clique_size: {q}");
    }
    match built.alpha {
        Some(alpha) => println!("alpha: {alpha}"),
        None => {
            let est = g.vertex_expansion_sampled(EXPANSION_SAMPLE_COUNT, 0);
            println!("alpha_sampled_upper_estimate: {est} ({EXPANSION_SAMPLE_COUNT} cuts)");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, traces_dir } => {
            cmd_run(config, out.clone(), traces_dir.clone())
        }
        Command::Sweep { config, axis, values, out, summary } => {
            cmd_sweep(config, axis, values, out.clone(), summary.clone())
        }
        Command::VerifyTrace { path, metrics_out } => cmd_verify(path, metrics_out.clone()),
        Command::GraphInfo { config } => cmd_graph_info(config),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
