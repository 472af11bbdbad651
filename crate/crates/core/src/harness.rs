//! Configuration-driven experiment runner: single runs, seed sweeps, and
//! one-axis parameter sweeps, with CSV reports.
//!
//! Configs are flat `key = value` text; nested specs use dotted keys.
//! Recognized keys (defaults in brackets):
//!
//! ```text
//! graph.kind    = ring | complete | star_clique | random | edge_list
//! graph.n       = <node count>
//! graph.alpha   = <fraction, star_clique only, e.g. 1/8 or 0.125>
//! graph.p       = <edge probability, random only>
//! graph.seed    = <graph draw seed, random only> [0]
//! graph.path    = <edge-list file, edge_list only>
//! seeding.kind  = uniform_random | all_in_clique | file
//! seeding.k     = <token count>
//! seeding.seed  = <placement seed> [the run seed]
//! seeding.path  = <seeding file, file only>
//! engine        = sync | async
//! policy.kind   = first_by_id | uniform_random | adversarial_min_progress
//!                 [uniform_random]
//! adversary.kind = constant_max | uniform_random | bursty | targeted_staller
//!                 [uniform_random]
//! bounds.delta_update [1000]   bounds.delta_conn [600]
//! bounds.rate_bits    [4]      bounds.token_bits [1200]
//! seeds         = <comma list> [0]
//! max_rounds    [100000]
//! max_time      [1000000000]
//! output        = <default CSV path for the CLI>
//! ```
//!
//! A run is a pure function of `(config, seed)`; re-running a sweep
//! reproduces byte-identical CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::amtm::{adversary_by_name, check_guarantees, run_async, AsyncTrace, DelayBounds, Ticks};
use crate::analysis::{
    check_async_token_invariants, check_trace_invariants, theoretical_budget,
    ASYNC_CRUDE_CONSTANT, SYNC_BUDGET_CONSTANT,
};
use crate::behavior::RandomDiffusion;
use crate::graph::{
    gen_complete, gen_random_connected, gen_ring, gen_star_clique, parse_edge_list,
    star_clique_alpha, Frac, Graph, GraphError,
};
use crate::rng::{stream, StreamId};
use crate::sync::{policy_by_name, run_until_complete, EngineError, SyncTrace};
use crate::token::TokenId;
use crate::trace::{seeding_from_text, TraceError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("duplicate config key `{0}`")]
    DuplicateKey(String),
    #[error("missing required config key `{0}`")]
    Missing(&'static str),
    #[error("config key `{key}`: bad value `{value}` (expected {expect})")]
    BadValue {
        key: String,
        value: String,
        expect: &'static str,
    },
    #[error("config line {line}: expected `key = value`, found `{text}`")]
    BadLine { line: usize, text: String },
    #[error("policy.kind `{0}` does not name a built-in policy")]
    UnknownPolicy(String),
    #[error("adversary.kind `{0}` does not name a built-in adversary")]
    UnknownAdversary(String),
    #[error("seeding.kind `all_in_clique` requires graph.kind = star_clique")]
    CliqueSeedingNeedsClique,
    #[error("seeds list is empty")]
    NoSeeds,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Sync,
    Async,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Ring { n: usize },
    Complete { n: usize },
    StarClique { n: usize, alpha: Frac },
    Random { n: usize, p: f64, seed: u64 },
    EdgeList { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedingSpec {
    UniformRandom { k: usize, seed: Option<u64> },
    AllInClique { k: usize },
    File { path: String },
}

/// A parsed experiment configuration plus the raw keys it came from.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub seeding: SeedingSpec,
    pub engine: EngineKind,
    pub policy: String,
    pub adversary: String,
    pub bounds: DelayBounds,
    pub seeds: Vec<u64>,
    pub max_rounds: u32,
    pub max_time: Ticks,
    /// Default CSV output path; the CLI's --out flag overrides it.
    pub output: Option<String>,
    raw: BTreeMap<String, String>,
}

const KNOWN_KEYS: [&str; 19] = [
    "graph.kind",
    "graph.n",
    "graph.alpha",
    "graph.p",
    "graph.seed",
    "graph.path",
    "seeding.kind",
    "seeding.k",
    "seeding.seed",
    "seeding.path",
    "engine",
    "policy.kind",
    "adversary.kind",
    "bounds.delta_update",
    "bounds.delta_conn",
    "bounds.rate_bits",
    "bounds.token_bits",
    "seeds",
    "max_rounds",
];
const KNOWN_EXTRA: [&str; 2] = ["max_time", "output"];

/// Parses a fraction: `p/q`, a decimal like `0.125`, or an integer.
pub fn parse_frac(text: &str) -> Option<Frac> {
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().ok()?;
        let den: u64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Frac::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let whole: u64 = if whole.is_empty() { 0 } else { whole.trim().parse().ok()? };
        let digits = frac.trim();
        if digits.is_empty() || digits.len() > 18 {
            return None;
        }
        let num: u64 = digits.parse().ok()?;
        let den = 10u64.pow(digits.len() as u32);
        return Some(Frac::from_integer(whole) + Frac::new(num, den));
    }
    text.trim().parse::<u64>().ok().map(Frac::from_integer)
}

impl ExperimentConfig {
    /// Parses `key = value` text. `default_seed` is used when no `seeds`
    /// key is present (the CLI wires the seed environment variable here).
    pub fn parse(text: &str, default_seed: Option<u64>) -> Result<Self, ConfigError> {
        let mut raw = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine { line: i + 1, text: line.to_string() });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if raw.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Self::from_raw(raw, default_seed)
    }

    /// Rebuilds the config with one key overridden; used by sweeps.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.insert(key.to_string(), value.to_string());
        Self::from_raw(raw, self.seeds.first().copied())
    }

    fn from_raw(
        raw: BTreeMap<String, String>,
        default_seed: Option<u64>,
    ) -> Result<Self, ConfigError> {
        for key in raw.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) && !KNOWN_EXTRA.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }

        let get = |key: &'static str| raw.get(key).map(String::as_str);
        let required = |key: &'static str| get(key).ok_or(ConfigError::Missing(key));
        fn val<T: std::str::FromStr>(
            key: &str,
            value: &str,
            expect: &'static str,
        ) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
                expect,
            })
        }

        let graph = match required("graph.kind")? {
            "ring" => GraphSpec::Ring {
                n: val("graph.n", required("graph.n")?, "integer >= 2")?,
            },
            "complete" => GraphSpec::Complete {
                n: val("graph.n", required("graph.n")?, "integer >= 2")?,
            },
            "star_clique" => GraphSpec::StarClique {
                n: val("graph.n", required("graph.n")?, "integer >= 2")?,
                alpha: parse_frac(required("graph.alpha")?).ok_or(ConfigError::BadValue {
                    key: "graph.alpha".into(),
                    value: required("graph.alpha")?.into(),
                    expect: "fraction like 1/8",
                })?,
            },
            "random" => GraphSpec::Random {
                n: val("graph.n", required("graph.n")?, "integer >= 2")?,
                p: {
                    let p: f64 = val("graph.p", required("graph.p")?, "probability in (0,1]")?;
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(ConfigError::BadValue {
                            key: "graph.p".into(),
                            value: required("graph.p")?.into(),
                            expect: "probability in (0,1]",
                        });
                    }
                    p
                },
                seed: match get("graph.seed") {
                    Some(s) => val("graph.seed", s, "integer seed")?,
                    None => 0,
                },
            },
            "edge_list" => GraphSpec::EdgeList {
                path: required("graph.path")?.to_string(),
            },
            other => {
                return Err(ConfigError::BadValue {
                    key: "graph.kind".into(),
                    value: other.into(),
                    expect: "ring | complete | star_clique | random | edge_list",
                })
            }
        };

        let seeding = match required("seeding.kind")? {
            "uniform_random" => SeedingSpec::UniformRandom {
                k: val("seeding.k", required("seeding.k")?, "integer >= 1")?,
                seed: match get("seeding.seed") {
                    Some(s) => Some(val("seeding.seed", s, "integer seed")?),
                    None => None,
                },
            },
            "all_in_clique" => {
                if !matches!(graph, GraphSpec::StarClique { .. }) {
                    return Err(ConfigError::CliqueSeedingNeedsClique);
                }
                SeedingSpec::AllInClique {
                    k: val("seeding.k", required("seeding.k")?, "integer >= 1")?,
                }
            }
            "file" => SeedingSpec::File {
                path: required("seeding.path")?.to_string(),
            },
            other => {
                return Err(ConfigError::BadValue {
                    key: "seeding.kind".into(),
                    value: other.into(),
                    expect: "uniform_random | all_in_clique | file",
                })
            }
        };

        let engine = match required("engine")? {
            "sync" => EngineKind::Sync,
            "async" => EngineKind::Async,
            other => {
                return Err(ConfigError::BadValue {
                    key: "engine".into(),
                    value: other.into(),
                    expect: "sync | async",
                })
            }
        };

        let policy = get("policy.kind").unwrap_or("uniform_random").to_string();
        if policy_by_name(&policy).is_none() {
            return Err(ConfigError::UnknownPolicy(policy));
        }
        let adversary = get("adversary.kind").unwrap_or("uniform_random").to_string();
        if adversary_by_name(&adversary).is_none() {
            return Err(ConfigError::UnknownAdversary(adversary));
        }

        let bound = |key: &'static str, default: u64| -> Result<u64, ConfigError> {
            match get(key) {
                Some(s) => val(key, s, "positive integer"),
                None => Ok(default),
            }
        };
        let bounds = DelayBounds {
            delta_update: bound("bounds.delta_update", 1000)?,
            delta_conn: bound("bounds.delta_conn", 600)?,
            rate_bits: bound("bounds.rate_bits", 4)?,
            token_bits: bound("bounds.token_bits", 1200)?,
        };

        let seeds: Vec<u64> = match get("seeds") {
            Some(list) => list
                .split(',')
                .map(|s| val("seeds", s.trim(), "comma-separated integers"))
                .collect::<Result<_, _>>()?,
            None => vec![default_seed.unwrap_or(0)],
        };
        if seeds.is_empty() {
            return Err(ConfigError::NoSeeds);
        }

        let max_rounds = match get("max_rounds") {
            Some(s) => val("max_rounds", s, "positive integer")?,
            None => 100_000,
        };
        let max_time = match get("max_time") {
            Some(s) => val("max_time", s, "positive integer")?,
            None => 1_000_000_000,
        };

        Ok(ExperimentConfig {
            graph,
            seeding,
            engine,
            policy,
            adversary,
            bounds,
            seeds,
            max_rounds,
            max_time,
            output: get("output").map(str::to_string),
            raw,
        })
    }

    /// Canonical text: the raw keys, sorted. Reparsing reproduces the
    /// config; its hash is the config digest.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.raw {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn digest(&self) -> u64 {
        self.to_text()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
                (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
            })
    }

    /// Short human label for the graph, e.g. `star_clique(64,1/8)`.
    pub fn graph_label(&self) -> String {
        match &self.graph {
            GraphSpec::Ring { n } => format!("ring({n})"),
            GraphSpec::Complete { n } => format!("complete({n})"),
            GraphSpec::StarClique { n, alpha } => format!("star_clique({n},{alpha})"),
            GraphSpec::Random { n, p, seed } => format!("random({n},{p},{seed})"),
            GraphSpec::EdgeList { path } => format!("edge_list({path})"),
        }
    }
}

/// A graph instantiated from its spec, with whatever exact expansion is
/// known analytically (named families) or by enumeration (small graphs).
#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: Graph,
    /// Clique size, for star-clique graphs.
    pub q: Option<usize>,
    pub alpha: Option<Frac>,
}

/// Exact ring expansion: an arc of `⌈n/2⌉` nodes has two boundary
/// neighbors (one for `n = 3`).
pub fn ring_alpha(n: usize) -> Frac {
    match n {
        2 => Frac::from_integer(1),
        3 => Frac::new(1, 2),
        _ => Frac::new(2, n.div_ceil(2) as u64),
    }
}

/// Exact complete-graph expansion under the `|S| ∈ [n/2]` convention.
pub fn complete_alpha(n: usize) -> Frac {
    Frac::new((n / 2) as u64, n.div_ceil(2) as u64)
}

pub fn build_graph(spec: &GraphSpec) -> Result<BuiltGraph, HarnessError> {
    let built = match spec {
        GraphSpec::Ring { n } => BuiltGraph {
            graph: gen_ring(*n)?,
            q: None,
            alpha: Some(ring_alpha(*n)),
        },
        GraphSpec::Complete { n } => BuiltGraph {
            graph: gen_complete(*n)?,
            q: None,
            alpha: Some(complete_alpha(*n)),
        },
        GraphSpec::StarClique { n, alpha } => {
            let sc = gen_star_clique(*n, *alpha)?;
            BuiltGraph {
                alpha: Some(star_clique_alpha(*n, sc.q)),
                q: Some(sc.q),
                graph: sc.graph,
            }
        }
        GraphSpec::Random { n, p, seed } => {
            let graph = gen_random_connected(*n, *p, *seed)?;
            let alpha = exact_alpha_if_small(&graph);
            BuiltGraph { graph, q: None, alpha }
        }
        GraphSpec::EdgeList { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            let graph = parse_edge_list(&text)?;
            let alpha = exact_alpha_if_small(&graph);
            BuiltGraph { graph, q: None, alpha }
        }
    };
    Ok(built)
}

fn exact_alpha_if_small(graph: &Graph) -> Option<Frac> {
    (graph.node_count() <= crate::graph::EXACT_EXPANSION_MAX_N)
        .then(|| graph.vertex_expansion_exact().map(|(a, _)| a))
        .transpose()
        .ok()
        .flatten()
}

/// Materializes the initial token distribution for one run.
pub fn build_seeding(
    spec: &SeedingSpec,
    built: &BuiltGraph,
    run_seed: u64,
) -> Result<Vec<BTreeSet<TokenId>>, HarnessError> {
    let n = built.graph.node_count();
    match spec {
        SeedingSpec::UniformRandom { k, seed } => {
            let mut rng = stream(seed.unwrap_or(run_seed), StreamId::Seeding);
            let mut out = vec![BTreeSet::new(); n];
            for token in 0..*k as u64 {
                let node = rng.gen_range(0..n);
                out[node].insert(TokenId(token));
            }
            Ok(out)
        }
        SeedingSpec::AllInClique { k } => {
            let q = built.q.ok_or(ConfigError::CliqueSeedingNeedsClique)?;
            let mut out = vec![BTreeSet::new(); n];
            for set in out.iter_mut().take(q) {
                set.extend((0..*k as u64).map(TokenId));
            }
            Ok(out)
        }
        SeedingSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            Ok(seeding_from_text(&text, n)?)
        }
    }
}

/// Row-level outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config_digest: u64,
    pub engine: EngineKind,
    pub graph_label: String,
    pub n: usize,
    pub k: usize,
    pub alpha: Option<Frac>,
    pub seed: u64,
    /// Completion round (sync) or tick (async).
    pub completion: Option<u64>,
    pub transfers: u64,
    pub invariants_ok: bool,
    /// The documented envelope `C·(k/α)·log₂n·log₂²Δ` (sync) or
    /// `C′·n·k·δ_max` (async), when α is known.
    pub budget_envelope: Option<f64>,
    /// `completion ≤ budget_envelope`; `None` when either side is unknown.
    pub within_budget: Option<bool>,
}

/// One run's result plus its full trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub sync_trace: Option<SyncTrace>,
    pub async_trace: Option<AsyncTrace>,
}

/// Executes one seed of a config on an already-built graph.
pub fn run_one(
    cfg: &ExperimentConfig,
    built: &BuiltGraph,
    seed: u64,
) -> Result<RunOutcome, HarnessError> {
    let initial = build_seeding(&cfg.seeding, built, seed)?;
    let k = {
        let mut union = BTreeSet::new();
        for s in &initial {
            union.extend(s.iter().copied());
        }
        union.len()
    };
    let n = built.graph.node_count();
    let max_degree = built.graph.max_degree();

    let mut result = RunResult {
        config_digest: cfg.digest(),
        engine: cfg.engine,
        graph_label: cfg.graph_label(),
        n,
        k,
        alpha: built.alpha,
        seed,
        completion: None,
        transfers: 0,
        invariants_ok: false,
        budget_envelope: None,
        within_budget: None,
    };

    match cfg.engine {
        EngineKind::Sync => {
            let policy = policy_by_name(&cfg.policy).expect("validated at parse");
            let trace = run_until_complete(
                &built.graph,
                &initial,
                &RandomDiffusion,
                policy.as_ref(),
                seed,
                cfg.max_rounds,
            )?;
            result.completion = trace.completion.map(u64::from);
            result.transfers = trace.rounds.iter().map(|r| r.transfers.len() as u64).sum();
            result.invariants_ok = check_trace_invariants(&trace).ok();
            if let Some(alpha) = built.alpha {
                let budget = theoretical_budget(k, alpha, n, max_degree).sync_rounds;
                let envelope = SYNC_BUDGET_CONSTANT * budget;
                result.budget_envelope = Some(envelope);
                result.within_budget = result.completion.map(|c| c as f64 <= envelope);
            }
            Ok(RunOutcome {
                result,
                sync_trace: Some(trace),
                async_trace: None,
            })
        }
        EngineKind::Async => {
            let mut adversary = adversary_by_name(&cfg.adversary).expect("validated at parse");
            let trace = run_async(
                &built.graph,
                &initial,
                &RandomDiffusion,
                cfg.bounds,
                adversary.as_mut(),
                seed,
                cfg.max_time,
            )?;
            result.completion = trace.completion;
            result.transfers = trace
                .events
                .iter()
                .filter(|e| matches!(e.kind, crate::amtm::EventKind::TransferDone { moved: Some(_), .. }))
                .count() as u64;
            result.invariants_ok = check_async_token_invariants(&trace).ok()
                && check_guarantees(&trace, &cfg.bounds).is_empty();
            let envelope =
                ASYNC_CRUDE_CONSTANT * (n as f64) * (k as f64) * cfg.bounds.delta_max() as f64;
            result.budget_envelope = Some(envelope);
            result.within_budget = result.completion.map(|c| c as f64 <= envelope);
            Ok(RunOutcome {
                result,
                sync_trace: None,
                async_trace: Some(trace),
            })
        }
    }
}

/// Runs every seed of the config; results are in `seeds` order regardless
/// of which finished first.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>, HarnessError> {
    let built = build_graph(&cfg.graph)?;
    cfg.seeds
        .par_iter()
        .map(|&seed| run_one(cfg, &built, seed))
        .collect()
}

/// One row of a sweep: which axis value produced the result.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub result: RunResult,
}

/// Varies exactly one config key over `values`, running every seed for
/// each; rows come back in `(value, seed)` config order.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: &str,
    values: &[String],
) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::new();
    for value in values {
        let varied = cfg.with_override(axis, value)?;
        for outcome in run(&varied)? {
            rows.push(SweepRow {
                axis: axis.to_string(),
                value: value.clone(),
                result: outcome.result,
            });
        }
    }
    Ok(rows)
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".into(), T::to_string)
}

fn fmt_frac_opt(v: &Option<Frac>) -> String {
    v.map_or_else(String::new, |f| f.to_string())
}

/// One CSV row per run.
pub fn runs_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "axis,value,engine,graph,n,k,alpha,seed,completion,transfers,invariants_ok,budget_envelope,within_budget\n",
    );
    for row in rows {
        let r = &row.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.axis,
            row.value,
            match r.engine {
                EngineKind::Sync => "sync",
                EngineKind::Async => "async",
            },
            r.graph_label,
            r.n,
            r.k,
            fmt_frac_opt(&r.alpha),
            r.seed,
            fmt_opt(&r.completion),
            r.transfers,
            r.invariants_ok,
            r.budget_envelope.map_or_else(String::new, |b| format!("{b}")),
            r.within_budget.map_or_else(String::new, |b| b.to_string()),
        );
    }
    out
}

/// Deterministic five-number summary of completed durations.
#[derive(Debug, Clone, PartialEq)]
pub struct Quartiles {
    pub min: u64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: u64,
}

/// Tukey hinges: the median splits the sorted sample, each half (excluding
/// the middle element when the count is odd) contributes its own median.
pub fn quartiles(sorted: &[u64]) -> Option<Quartiles> {
    if sorted.is_empty() {
        return None;
    }
    fn median(v: &[u64]) -> f64 {
        let m = v.len() / 2;
        if !v.len().is_multiple_of(2) {
            v[m] as f64
        } else {
            (v[m - 1] as f64 + v[m] as f64) / 2.0
        }
    }
    let half = sorted.len() / 2;
    let (lower, upper) = if sorted.len().is_multiple_of(2) {
        (&sorted[..half], &sorted[half..])
    } else {
        (&sorted[..half], &sorted[half + 1..])
    };
    Some(Quartiles {
        min: sorted[0],
        q1: if lower.is_empty() { sorted[0] as f64 } else { median(lower) },
        median: median(sorted),
        q3: if upper.is_empty() { sorted[sorted.len() - 1] as f64 } else { median(upper) },
        max: sorted[sorted.len() - 1],
    })
}

/// One CSV row per axis value: run counts and the five-number summary of
/// completion durations.
pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
    let mut totals: BTreeMap<(String, String), usize> = BTreeMap::new();
    for row in rows {
        let key = (row.axis.clone(), row.value.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        *totals.entry(key.clone()).or_insert(0) += 1;
        if let Some(c) = row.result.completion {
            groups.entry(key).or_default().push(c);
        }
    }
    let mut out =
        String::from("axis,value,runs,completed,min,q1,median,q3,max\n");
    for key in order {
        let total = totals[&key];
        let mut durations = groups.remove(&key).unwrap_or_default();
        durations.sort_unstable();
        match quartiles(&durations) {
            Some(q) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    key.0, key.1, total, durations.len(), q.min, q.q1, q.median, q.q3, q.max
                );
            }
            None => {
                let _ = writeln!(out, "{},{},{},0,,,,,", key.0, key.1, total);
            }
        }
    }
    out
}

/// Median completion of the rows with the given axis value, if any
/// completed.
pub fn median_completion(rows: &[SweepRow], value: &str) -> Option<f64> {
    let mut durations: Vec<u64> = rows
        .iter()
        .filter(|r| r.value == value)
        .filter_map(|r| r.result.completion)
        .collect();
    durations.sort_unstable();
    quartiles(&durations).map(|q| q.median)
}
