//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! The synchronous corpus (525 runs across ring, star, complete,
//! star-clique, and random connected families) and the asynchronous corpus
//! (ring and star-clique under every built-in adversary) are built once and
//! shared across criteria.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use mtm_core::amtm::{check_guarantees, BUILTIN_ADVERSARIES};
use mtm_core::analysis::{
    check_async_token_invariants, check_min_matching, check_trace_invariants, size_profile,
    sync_snapshots, theoretical_budget, ASYNC_CRUDE_CONSTANT, SYNC_BUDGET_CONSTANT,
};
use mtm_core::behavior::{select_candidates, select_uniform};
use mtm_core::graph::{check_gamma_bound, gen_complete, gen_ring, gen_star_clique, Frac};
use mtm_core::harness::{
    quartiles, run, runs_csv, sweep, ExperimentConfig, RunOutcome,
};
use mtm_core::rng::{stream, StreamId};
use mtm_core::trace::{async_to_text, sync_to_text};
use mtm_core::{AsyncTrace, NodeId, SyncTrace, Tag};

// ---------------------------------------------------------------------------
// Shared corpora
// ---------------------------------------------------------------------------

struct SyncRun {
    label: String,
    group: &'static str,
    k: usize,
    alpha: Option<Frac>,
    max_degree: usize,
    n: usize,
    trace: SyncTrace,
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text, None).unwrap_or_else(|e| panic!("config error: {e}\n{text}"))
}

fn seeds_list(n: u64) -> String {
    (0..n).map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

fn sync_runs(graph_lines: &str, group: &'static str, k: usize, n_seeds: u64) -> Vec<SyncRun> {
    let text = format!(
        "{graph_lines}seeding.kind = uniform_random\nseeding.k = {k}\nengine = sync\nseeds = {}\n",
        seeds_list(n_seeds)
    );
    let config = cfg(&text);
    run(&config)
        .expect("corpus run failed")
        .into_iter()
        .map(|o| outcome_to_run(o, group))
        .collect()
}

fn outcome_to_run(o: RunOutcome, group: &'static str) -> SyncRun {
    let trace = o.sync_trace.expect("sync corpus");
    SyncRun {
        label: format!("{} seed={}", o.result.graph_label, o.result.seed),
        group,
        k: o.result.k,
        alpha: o.result.alpha,
        max_degree: trace.graph.max_degree(),
        n: o.result.n,
        trace,
    }
}

fn sync_corpus() -> &'static [SyncRun] {
    static CORPUS: OnceLock<Vec<SyncRun>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut runs = Vec::new();

        // Minimum-matching group: graphs small enough for exact expansion.
        for graph in [
            "graph.kind = ring\ngraph.n = 8\n".to_string(),
            "graph.kind = ring\ngraph.n = 12\n".to_string(),
            "graph.kind = ring\ngraph.n = 16\n".to_string(),
            "graph.kind = star_clique\ngraph.n = 16\ngraph.alpha = 1/4\n".to_string(),
            "graph.kind = star_clique\ngraph.n = 20\ngraph.alpha = 1/10\n".to_string(),
            "graph.kind = star_clique\ngraph.n = 24\ngraph.alpha = 1/8\n".to_string(),
            "graph.kind = complete\ngraph.n = 8\n".to_string(),
            "graph.kind = random\ngraph.n = 10\ngraph.p = 0.4\ngraph.seed = 1\n".to_string(),
            "graph.kind = random\ngraph.n = 12\ngraph.p = 0.35\ngraph.seed = 2\n".to_string(),
            "graph.kind = random\ngraph.n = 14\ngraph.p = 0.3\ngraph.seed = 3\n".to_string(),
        ] {
            runs.extend(sync_runs(&graph, "min_matching", 3, 5));
        }

        // Lower-bound group: all k tokens at every clique node.
        for k in [1usize, 5, 10] {
            let text = format!(
                "graph.kind = star_clique\ngraph.n = 100\ngraph.alpha = 1/10\nseeding.kind = all_in_clique\nseeding.k = {k}\nengine = sync\nseeds = {}\n",
                seeds_list(10)
            );
            for o in run(&cfg(&text)).expect("lower-bound runs") {
                runs.push(outcome_to_run(o, "lower_bound"));
            }
        }

        // Scaling group: ring(64) and star_clique(64, 1/8), k doublings.
        for (graph, group) in [
            ("graph.kind = ring\ngraph.n = 64\n", "scaling_ring"),
            (
                "graph.kind = star_clique\ngraph.n = 64\ngraph.alpha = 1/8\n",
                "scaling_sc",
            ),
        ] {
            for k in [2usize, 4, 8, 16] {
                runs.extend(sync_runs(graph, group, k, 20));
            }
        }

        // Breadth group: small families for the invariant and budget sweeps.
        for n in [4usize, 8, 12, 16] {
            for k in [1usize, 2, 4] {
                runs.extend(sync_runs(
                    &format!("graph.kind = ring\ngraph.n = {n}\n"),
                    "extra",
                    k,
                    10,
                ));
            }
        }
        for n in [2usize, 3, 4, 6, 8] {
            for k in [1usize, 2, 4] {
                runs.extend(sync_runs(
                    &format!("graph.kind = complete\ngraph.n = {n}\n"),
                    "extra",
                    k,
                    4,
                ));
            }
        }
        for n in [6usize, 10, 14] {
            for k in [1usize, 2, 4] {
                runs.extend(sync_runs(
                    &format!("graph.kind = star_clique\ngraph.n = {n}\ngraph.alpha = 1/{n}\n"),
                    "extra",
                    k,
                    5,
                ));
            }
        }
        for (n, p) in [(6usize, 0.5), (8, 0.45), (10, 0.4), (12, 0.35), (14, 0.3)] {
            for k in [1usize, 3] {
                runs.extend(sync_runs(
                    &format!("graph.kind = random\ngraph.n = {n}\ngraph.p = {p}\ngraph.seed = {n}\n"),
                    "extra",
                    k,
                    6,
                ));
            }
        }

        runs
    })
}

struct AsyncRun {
    label: String,
    adversary: &'static str,
    trace: AsyncTrace,
    k: usize,
}

fn async_corpus() -> &'static [AsyncRun] {
    static CORPUS: OnceLock<Vec<AsyncRun>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut runs = Vec::new();
        for graph in [
            "graph.kind = ring\ngraph.n = 32\n",
            "graph.kind = star_clique\ngraph.n = 32\ngraph.alpha = 1/4\n",
        ] {
            for adversary in BUILTIN_ADVERSARIES {
                let text = format!(
                    "{graph}seeding.kind = uniform_random\nseeding.k = 4\nengine = async\nadversary.kind = {adversary}\nseeds = {}\n",
                    seeds_list(10)
                );
                for o in run(&cfg(&text)).expect("async corpus") {
                    runs.push(AsyncRun {
                        label: format!("{} {adversary} seed={}", o.result.graph_label, o.result.seed),
                        adversary,
                        k: o.result.k,
                        trace: o.async_trace.expect("async corpus"),
                    });
                }
            }
        }
        runs
    })
}

fn status(criterion: &str, pass: bool, details: &str) -> bool {
    println!(
        "criterion {criterion}: {} - {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

/// Criterion 1: γ ≥ α/4 holds exhaustively on 200 seeded random connected
/// graphs with n ∈ [4,14] plus the named families.
#[test]
fn criterion_1_gamma_bound_exhaustive() {
    let mut graphs = Vec::new();
    for i in 0..200u64 {
        let n = 4 + (i as usize) % 11; // 4..=14
        let p = [0.3, 0.5, 0.8][(i as usize) % 3];
        graphs.push((
            format!("random(n={n},p={p},seed={i})"),
            mtm_core::graph::gen_random_connected(n, p, 1000 + i).expect("connected draw"),
        ));
    }
    for n in [4usize, 5, 6, 8, 10, 12, 16] {
        graphs.push((format!("ring({n})"), gen_ring(n).unwrap()));
    }
    for n in [4usize, 6, 8, 12, 16] {
        let sc = gen_star_clique(n, Frac::new(1, n as u64)).unwrap();
        graphs.push((format!("star({n})"), sc.graph));
    }
    for n in [4usize, 5, 6, 8, 10] {
        graphs.push((format!("complete({n})"), gen_complete(n).unwrap()));
    }
    for (n, alpha) in [(8usize, (1u64, 4u64)), (12, (1, 4)), (12, (1, 2)), (16, (1, 8)), (16, (1, 4))] {
        let sc = gen_star_clique(n, Frac::new(alpha.0, alpha.1)).unwrap();
        graphs.push((format!("star_clique({n},{}/{})", alpha.0, alpha.1), sc.graph));
    }

    let mut failures = Vec::new();
    for (label, g) in &graphs {
        let report = check_gamma_bound(g).expect("within enumeration bound");
        if !report.holds {
            failures.push(format!(
                "{label}: gamma {} < alpha/4 = {}",
                report.gamma,
                report.alpha / Frac::new(4, 1)
            ));
        }
    }
    let pass = status(
        "1 (gamma >= alpha/4, exhaustive cuts)",
        failures.is_empty(),
        &format!("{} graphs checked, {} failures", graphs.len(), failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 2: on every snapshot with C > 1 of 50 runs over graphs with
/// exact expansion, the minimum productive subgraph has a matching of size
/// at least (α/4)·n*_min.
#[test]
fn criterion_2_min_matching_per_round() {
    let runs: Vec<&SyncRun> = sync_corpus()
        .iter()
        .filter(|r| r.group == "min_matching")
        .collect();
    assert_eq!(runs.len(), 50);

    // Exact expansion per distinct graph, via full enumeration.
    let mut alphas: std::collections::BTreeMap<String, Frac> = Default::default();
    let mut snapshots_checked = 0usize;
    let mut failures = Vec::new();
    for r in &runs {
        let key = r.label.split(" seed=").next().unwrap().to_string();
        let alpha = *alphas.entry(key).or_insert_with(|| {
            let (exact, _) = r.trace.graph.vertex_expansion_exact().expect("n <= 24");
            if let Some(known) = r.alpha {
                assert_eq!(exact, known, "analytic alpha mismatch on {}", r.label);
            }
            exact
        });
        for snapshot in sync_snapshots(&r.trace) {
            if size_profile(&snapshot).classes <= 1 {
                continue;
            }
            snapshots_checked += 1;
            match check_min_matching(&r.trace.graph, &snapshot, alpha) {
                Ok(report) if report.holds => {}
                Ok(report) => failures.push(format!(
                    "{} round {}: matching {} < bound {}",
                    r.label,
                    snapshot.marker,
                    report.matching.len(),
                    report.bound
                )),
                Err(e) => failures.push(format!("{}: {e}", r.label)),
            }
        }
    }
    let pass = status(
        "2 (per-round minimum matching bound)",
        failures.is_empty(),
        &format!("50 runs, {snapshots_checked} snapshots with C > 1, {} failures", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 3: with all k tokens seeded in the q-clique of
/// star_clique(100, 1/10), measured completion rounds never beat the
/// connection-counting lower bound k·(n−q)/(2q).
#[test]
fn criterion_3_star_clique_lower_bound() {
    let runs: Vec<&SyncRun> = sync_corpus()
        .iter()
        .filter(|r| r.group == "lower_bound")
        .collect();
    assert_eq!(runs.len(), 30);

    // Frozen bounds for k ∈ {1, 5, 10}: 4.5, 22.5, 45 rounds.
    let frozen = [
        (1usize, Frac::new(9, 2)),
        (5, Frac::new(45, 2)),
        (10, Frac::new(45, 1)),
    ];
    for (k, expect) in frozen {
        let budget = theoretical_budget(k, Frac::new(1, 10), 100, 99);
        assert_eq!(budget.lb_rounds, expect);
    }

    let mut failures = Vec::new();
    for r in &runs {
        let lb = theoretical_budget(r.k, Frac::new(1, 10), 100, 99).lb_rounds;
        match r.trace.completion {
            Some(rounds) if Frac::from_integer(u64::from(rounds)) >= lb => {}
            Some(rounds) => failures.push(format!("{}: {} rounds < bound {}", r.label, rounds, lb)),
            None => failures.push(format!("{}: did not complete", r.label)),
        }
    }
    let pass = status(
        "3 (star-clique round lower bound)",
        failures.is_empty(),
        &format!("30 runs, k in {{1,5,10}}, zero-tolerance inequality, {} failures", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 4: zero invariant violations across the full sync corpus
/// (minimum size monotone, same-size lemma branch, connection limits,
/// forced acceptance, token provenance).
#[test]
fn criterion_4_trace_invariants_corpus() {
    let corpus = sync_corpus();
    assert!(corpus.len() >= 500, "corpus has only {} runs", corpus.len());
    let mut failures = Vec::new();
    for r in corpus {
        let report = check_trace_invariants(&r.trace);
        if !report.ok() {
            failures.push(format!("{}: {:?}", r.label, report.violations));
        }
    }
    let pass = status(
        "4 (trace invariants over corpus)",
        failures.is_empty(),
        &format!("{} runs, {} with violations", corpus.len(), failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 5: median completion-round ratio per k-doubling lies in
/// [1.4, 2.6] on ring(64) and star_clique(64, 1/8).
#[test]
fn criterion_5_sync_scaling_in_k() {
    let mut all_ok = true;
    let mut details = Vec::new();
    for group in ["scaling_ring", "scaling_sc"] {
        let mut medians = Vec::new();
        for k in [2usize, 4, 8, 16] {
            let mut rounds: Vec<u64> = sync_corpus()
                .iter()
                .filter(|r| r.group == group && r.k == k)
                .map(|r| u64::from(r.trace.completion.expect("scaling run completes")))
                .collect();
            assert_eq!(rounds.len(), 20);
            rounds.sort_unstable();
            medians.push(quartiles(&rounds).unwrap().median);
        }
        let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
        let ok = ratios.iter().all(|r| (1.4..=2.6).contains(r));
        all_ok &= ok;
        details.push(format!(
            "{group}: medians {medians:?}, doubling ratios {:?} {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
            if ok { "in [1.4, 2.6]" } else { "OUTSIDE [1.4, 2.6]" }
        ));
    }
    let detail = details.join("; ");
    let pass = status("5 (sync scaling in k)", all_ok, &detail);
    assert!(pass, "{detail}");
}

/// Criterion 6: every corpus run stays within the documented budget
/// envelope C·(k/α)·log₂n·log₂²Δ, with C fit on ring(64) only.
#[test]
fn criterion_6_sync_budget_envelope() {
    let corpus = sync_corpus();
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    let mut excursions = Vec::new();
    for r in corpus {
        let Some(alpha) = r.alpha else { continue };
        let rounds = f64::from(r.trace.completion.expect("corpus runs complete"));
        let budget = theoretical_budget(r.k, alpha, r.n, r.max_degree).sync_rounds;
        let ratio = rounds / budget;
        checked += 1;
        if ratio > worst {
            worst = ratio;
        }
        if rounds > SYNC_BUDGET_CONSTANT * budget {
            excursions.push(format!("{}: {rounds} rounds > {C}·{budget:.2}", r.label, C = SYNC_BUDGET_CONSTANT));
        }
    }
    let pass = status(
        "6 (sync budget envelope)",
        excursions.is_empty() && checked == corpus.len(),
        &format!(
            "{checked} runs, C = {SYNC_BUDGET_CONSTANT}, worst rounds/budget = {worst:.3}, {} excursions",
            excursions.len()
        ),
    );
    assert!(pass, "{excursions:?}");
}

/// Criterion 7: zero guarantee violations for every built-in adversary on
/// ring(32) and star_clique(32, 1/4).
#[test]
fn criterion_7_amtm_guarantee_audit() {
    let corpus = async_corpus();
    assert_eq!(corpus.len(), 80);
    let mut adversaries_seen: BTreeSet<&str> = BTreeSet::new();
    let mut failures = Vec::new();
    for r in corpus {
        adversaries_seen.insert(r.adversary);
        let violations = check_guarantees(&r.trace, &r.trace.bounds);
        if !violations.is_empty() {
            failures.push(format!("{}: {violations:?}", r.label));
        }
        let invariants = check_async_token_invariants(&r.trace);
        if !invariants.ok() {
            failures.push(format!("{}: {:?}", r.label, invariants.violations));
        }
        if r.trace.completion.is_none() {
            failures.push(format!("{}: did not complete", r.label));
        }
    }
    assert_eq!(adversaries_seen.len(), BUILTIN_ADVERSARIES.len());
    let pass = status(
        "7 (aMTM guarantee audit)",
        failures.is_empty(),
        &format!("80 runs across 4 adversaries, {} failures", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

/// Criterion 8: doubling every delay bound doubles median completion time
/// (ratio in [1.6, 2.4]), and every async run respects the crude bound
/// C′·n·k·δ_max.
#[test]
fn criterion_8_async_delta_scaling_and_crude_bound() {
    let base_text = format!(
        "graph.kind = ring\ngraph.n = 32\nseeding.kind = uniform_random\nseeding.k = 4\nseeding.seed = 99\nengine = async\nadversary.kind = uniform_random\nseeds = {}\n",
        seeds_list(20)
    );
    let base = cfg(&base_text);
    let doubled = base
        .with_override("bounds.delta_update", "2000")
        .and_then(|c| c.with_override("bounds.delta_conn", "1200"))
        .and_then(|c| c.with_override("bounds.token_bits", "2400"))
        .unwrap();
    let base_runs = run(&base).unwrap();
    let doubled_runs = run(&doubled).unwrap();

    let median = |outs: &[RunOutcome]| {
        let mut v: Vec<u64> = outs
            .iter()
            .map(|o| o.result.completion.expect("scaling run completes"))
            .collect();
        v.sort_unstable();
        quartiles(&v).unwrap().median
    };
    let (m1, m2) = (median(&base_runs), median(&doubled_runs));
    let ratio = m2 / m1;
    let ratio_ok = (1.6..=2.4).contains(&ratio);

    // Crude bound over these runs plus the whole audit corpus.
    let mut crude_failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut check_crude = |label: &str, trace: &AsyncTrace, k: usize| {
        let n = trace.graph.node_count() as f64;
        let bound = ASYNC_CRUDE_CONSTANT * n * k as f64 * trace.bounds.delta_max() as f64;
        let t = trace.completion.expect("completes") as f64;
        worst = worst.max(t / bound);
        if t > bound {
            crude_failures.push(format!("{label}: {t} > {bound}"));
        }
    };
    for o in base_runs.iter().chain(doubled_runs.iter()) {
        check_crude(
            &format!("ring(32) seed={}", o.result.seed),
            o.async_trace.as_ref().unwrap(),
            o.result.k,
        );
    }
    for r in async_corpus() {
        check_crude(&r.label, &r.trace, r.k);
    }

    let pass = status(
        "8 (async delta_max scaling + crude bound)",
        ratio_ok && crude_failures.is_empty(),
        &format!(
            "doubling medians {m1} -> {m2}, ratio {ratio:.3}; C' = {ASYNC_CRUDE_CONSTANT}, worst completion/(n·k·δ_max) = {worst:.3}, {} crude failures",
            crude_failures.len()
        ),
    );
    assert!(pass, "ratio {ratio:.3}, {crude_failures:?}");
}

/// Criterion 9: 10⁴ seeded selections over a 4-candidate set pass the
/// chi-squared uniformity test at significance 0.01.
#[test]
fn criterion_9_uniform_selection_chi_squared() {
    let own_fingerprint = 7u64;
    let ads: Vec<Tag> = (0..4)
        .map(|i| Tag {
            fingerprint: 100 + i,
            size: 2,
            uid: NodeId(i as u32),
        })
        .collect();
    assert_eq!(select_candidates(own_fingerprint, &ads).len(), 4);

    let mut rng = stream(42, StreamId::Node { node: 0 });
    let draws = 10_000usize;
    let mut counts = [0u64; 4];
    for _ in 0..draws {
        let chosen = select_uniform(own_fingerprint, &ads, &mut rng).expect("candidates exist");
        counts[chosen.index()] += 1;
    }
    let expected = draws as f64 / 4.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // Critical value of chi-squared with 3 degrees of freedom at 0.01.
    let critical = 11.345;
    let pass = status(
        "9 (uniform selection chi-squared)",
        chi2 < critical,
        &format!("counts {counts:?}, chi2 = {chi2:.3} < {critical}"),
    );
    assert!(pass);
}

/// Criterion 10: identical config and seed reproduce byte-identical traces
/// and CSV.
#[test]
fn criterion_10_determinism() {
    let sync_text = "graph.kind = ring\ngraph.n = 16\nseeding.kind = uniform_random\nseeding.k = 3\nengine = sync\npolicy.kind = uniform_random\nseeds = 5,6,7\n";
    let async_text = "graph.kind = star_clique\ngraph.n = 12\ngraph.alpha = 1/4\nseeding.kind = all_in_clique\nseeding.k = 2\nengine = async\nadversary.kind = bursty\nseeds = 5,6\n";

    let mut identical = true;
    for text in [sync_text, async_text] {
        let config = cfg(text);
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            let tx = x
                .sync_trace
                .as_ref()
                .map(sync_to_text)
                .or_else(|| x.async_trace.as_ref().map(async_to_text))
                .unwrap();
            let ty = y
                .sync_trace
                .as_ref()
                .map(sync_to_text)
                .or_else(|| y.async_trace.as_ref().map(async_to_text))
                .unwrap();
            identical &= tx == ty;
        }
    }

    // Sweep CSV reproducibility, including medians.
    let config = cfg(sync_text);
    let values: Vec<String> = ["2", "4"].iter().map(|s| s.to_string()).collect();
    let csv_a = runs_csv(&sweep(&config, "seeding.k", &values).unwrap());
    let csv_b = runs_csv(&sweep(&config, "seeding.k", &values).unwrap());
    identical &= csv_a == csv_b;

    let pass = status(
        "10 (byte-identical determinism)",
        identical,
        "sync trace text, async trace text, and sweep CSV reproduced exactly",
    );
    assert!(pass);
}
