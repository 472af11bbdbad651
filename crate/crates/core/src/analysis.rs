//! Offline analysis of traces: size profiles, productive subgraphs, the
//! matching lower bound, machine-checked trace invariants, and the
//! theoretical comparison budgets.
//!
//! Everything here is pure post-hoc computation over immutable traces;
//! nothing feeds back into the engines.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use thiserror::Error;

use crate::amtm::{AsyncTrace, EventKind, Ticks};
use crate::graph::{max_matching_over_edges, Frac, Graph, NodeId};
use crate::sync::SyncTrace;
use crate::token::{TokenId, TokenSet};

/// Constant for the synchronous budget envelope
/// `rounds ≤ C · (k/α) · log₂n · log₂²Δ`.
///
/// Fit on the ring(64) sweep (k ∈ {2,4,8,16}, 20 seeds): the largest
/// observed rounds/budget ratio there was ≈ 0.18. C is that maximum
/// rounded up to the next half (0.5) and then tripled as one global
/// cross-family headroom factor; it is applied unchanged to every other
/// graph.
pub const SYNC_BUDGET_CONSTANT: f64 = 1.5;

/// Constant for the crude deterministic asynchronous bound
/// `completion time ≤ C′ · n · k · δ_max`.
///
/// Fit on the ring(32)/star-clique(32) corpus across all built-in
/// adversaries: the largest observed completion/(n·k·δ_max) ratio was
/// ≈ 0.11, rounded up to 1.
pub const ASYNC_CRUDE_CONSTANT: f64 = 1.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("all nodes hold sets of one size; the minimum cut does not exist")]
    CutMissing,
    #[error("({u}, {v}) is not an edge of the minimum productive subgraph at t={t}")]
    NotMinEdge { u: NodeId, v: NodeId, t: Ticks },
    #[error("malformed trace: {0}")]
    BadTrace(String),
}

/// Per-node token sets at a round boundary (sync) or time (async).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Round index for sync traces, tick for async traces.
    pub marker: u64,
    pub sets: Vec<TokenSet>,
}

/// The `(i_min, C, n_min, n*_min)` statistics of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeProfile {
    /// Smallest token-set size held by any node.
    pub i_min: usize,
    /// Number of distinct set sizes (`C`).
    pub classes: usize,
    /// Number of nodes holding exactly `i_min` tokens.
    pub n_min: usize,
    /// `min(n_min, n - n_min)`.
    pub n_star_min: usize,
    /// size -> node count, for every occupied size.
    pub counts: BTreeMap<usize, usize>,
}

pub fn size_profile(snapshot: &Snapshot) -> SizeProfile {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for set in &snapshot.sets {
        *counts.entry(set.len()).or_insert(0) += 1;
    }
    let n = snapshot.sets.len();
    let (&i_min, &n_min) = counts.iter().next().expect("snapshot has nodes");
    SizeProfile {
        i_min,
        classes: counts.len(),
        n_min,
        n_star_min: n_min.min(n - n_min),
        counts,
    }
}

/// The productive subgraph and its bipartite minimum restriction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductiveSubgraph {
    /// Edges `{u,v}` with `v` a productive neighbor of `u` (normalized
    /// `(lo, hi)`, sorted).
    pub edges: Vec<(NodeId, NodeId)>,
    /// Better-informed nodes adjacent to the minimum class.
    pub left: BTreeSet<NodeId>,
    /// Minimum-class nodes adjacent to the rest of the graph.
    pub right: BTreeSet<NodeId>,
    /// Edges of the minimum productive subgraph, oriented `(left, right)`.
    pub min_edges: Vec<(NodeId, NodeId)>,
}

/// Computes the productive subgraph of a snapshot: for each node `u` with
/// neighbors, `s_u` is the smallest neighbor set size and the productive
/// neighbors are those at exactly that size advertising a different
/// fingerprint. The minimum restriction keeps only edges joining a node
/// outside the minimum size class to one inside it.
pub fn productive_subgraph(g: &Graph, snapshot: &Snapshot) -> ProductiveSubgraph {
    let sets = &snapshot.sets;
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for u in g.nodes() {
        let neighbors = g.neighbors(u);
        let Some(s_u) = neighbors.iter().map(|v| sets[v.index()].len()).min() else {
            continue;
        };
        for &v in neighbors {
            if sets[v.index()].len() == s_u
                && sets[v.index()].fingerprint() != sets[u.index()].fingerprint()
            {
                let (lo, hi) = if u < v { (u, v) } else { (v, u) };
                edges.insert((lo, hi));
            }
        }
    }

    let profile = size_profile(snapshot);
    let in_min = |v: NodeId| sets[v.index()].len() == profile.i_min;
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    for u in g.nodes() {
        let touches_min = g.neighbors(u).iter().any(|&v| in_min(v));
        let touches_rest = g.neighbors(u).iter().any(|&v| !in_min(v));
        if !in_min(u) && touches_min {
            left.insert(u);
        }
        if in_min(u) && touches_rest {
            right.insert(u);
        }
    }
    let min_edges: Vec<(NodeId, NodeId)> = edges
        .iter()
        .filter_map(|&(a, b)| {
            if left.contains(&a) && right.contains(&b) {
                Some((a, b))
            } else if left.contains(&b) && right.contains(&a) {
                Some((b, a))
            } else {
                None
            }
        })
        .collect();

    ProductiveSubgraph {
        edges: edges.into_iter().collect(),
        left,
        right,
        min_edges,
    }
}

/// Result of the per-snapshot matching bound check.
#[derive(Debug, Clone)]
pub struct MinMatchingReport {
    pub matching: Vec<(NodeId, NodeId)>,
    pub n_star_min: usize,
    /// `(α/4) · n*_min`.
    pub bound: Frac,
    pub holds: bool,
}

/// Checks that the maximum matching over the minimum productive subgraph
/// has size at least `(α/4) · n*_min`, as an exact rational comparison.
pub fn check_min_matching(
    g: &Graph,
    snapshot: &Snapshot,
    alpha: Frac,
) -> Result<MinMatchingReport, AnalysisError> {
    let profile = size_profile(snapshot);
    if profile.classes <= 1 {
        return Err(AnalysisError::CutMissing);
    }
    let sub = productive_subgraph(g, snapshot);
    let matching = max_matching_over_edges(&sub.min_edges);
    let bound = alpha / Frac::from_integer(4) * Frac::from_integer(profile.n_star_min as u64);
    let holds = Frac::from_integer(matching.len() as u64) >= bound;
    Ok(MinMatchingReport {
        matching,
        n_star_min: profile.n_star_min,
        bound,
        holds,
    })
}

// ---------------------------------------------------------------------------
// Snapshot reconstruction
// ---------------------------------------------------------------------------

/// Round-boundary snapshots: index 0 is the initial state (the beginning of
/// round 1), index r the state after round r.
pub fn sync_snapshots(trace: &SyncTrace) -> Vec<Snapshot> {
    let mut sets: Vec<TokenSet> = trace
        .initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();
    let mut out = vec![Snapshot { marker: 0, sets: sets.clone() }];
    for record in &trace.rounds {
        for t in &record.transfers {
            sets[t.to.index()].insert(t.token);
        }
        out.push(Snapshot {
            marker: u64::from(record.round),
            sets: sets.clone(),
        });
    }
    out
}

/// State after every event with time at most `t` (event-boundary
/// convention).
pub fn async_snapshot_at(trace: &AsyncTrace, t: Ticks) -> Snapshot {
    let mut sets: Vec<TokenSet> = trace
        .initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();
    for ev in &trace.events {
        if ev.time > t {
            break;
        }
        if let EventKind::TransferDone { moved: Some(tr), .. } = &ev.kind {
            sets[tr.to.index()].insert(tr.token);
        }
    }
    Snapshot { marker: t, sets }
}

// ---------------------------------------------------------------------------
// Trace invariants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    /// `i_min` decreased across a round (a token set shrank).
    MinSizeDecreased { marker: u64, before: usize, after: usize },
    /// A node's set lost a token between snapshots.
    SetShrank { marker: u64, node: NodeId },
    /// `C(r)=1` while unsolved, yet round r+1 neither split the sizes nor
    /// raised the minimum.
    SameSizeStall { round: u64 },
    /// A node proposed to a non-neighbor.
    ProposalNotNeighbor { round: u32, proposer: NodeId, target: NodeId },
    /// An accepted pair without a matching proposal.
    AcceptedNotProposed { round: u32, proposer: NodeId, acceptor: NodeId },
    /// A node appears twice as proposer or twice as acceptor in one round.
    ConnectionLimit { round: u32, node: NodeId },
    /// A proposed-to node accepted nothing.
    ForcedAcceptanceMissed { round: u32, target: NodeId },
    /// A transfer outside any accepted connection of its round.
    TransferWithoutConnection { round: u32, from: NodeId, to: NodeId },
    /// The sender did not hold the token it sent.
    SenderLacksToken { round: u32, from: NodeId, token: TokenId },
    /// The receiver already held the token (sync transfers always move a
    /// missing token).
    ReceiverAlreadyHeld { round: u32, to: NodeId, token: TokenId },
    /// A recorded advertisement disagrees with the reconstructed state.
    AdMismatch { round: u32, node: NodeId },
    /// The recorded completion round disagrees with the replay.
    CompletionMismatch,
}

#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    pub violations: Vec<InvariantViolation>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Monotonicity and size-class checks over a snapshot sequence: sets only
/// grow, `i_min` never decreases, and whenever all nodes hold equally many
/// tokens while gossip is unsolved, the next step splits the sizes or
/// raises the minimum.
pub fn check_snapshot_sequence(snapshots: &[Snapshot], k: usize) -> Vec<InvariantViolation> {
    let mut violations = Vec::new();
    for w in snapshots.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        for (i, set) in prev.sets.iter().enumerate() {
            if !set.iter().all(|t| next.sets[i].contains(t)) {
                violations.push(InvariantViolation::SetShrank {
                    marker: next.marker,
                    node: NodeId(i as u32),
                });
            }
        }
        let p = size_profile(prev);
        let q = size_profile(next);
        if q.i_min < p.i_min {
            violations.push(InvariantViolation::MinSizeDecreased {
                marker: next.marker,
                before: p.i_min,
                after: q.i_min,
            });
        }
        let solved = p.classes == 1 && p.i_min == k;
        if p.classes == 1 && !solved && q.classes == 1 && q.i_min <= p.i_min {
            violations.push(InvariantViolation::SameSizeStall { round: prev.marker });
        }
    }
    violations
}

/// Full audit of a synchronous trace: structural round records (connection
/// limits, forced acceptance, neighbor discipline), token provenance, ad
/// consistency, and the snapshot-sequence invariants.
pub fn check_trace_invariants(trace: &SyncTrace) -> InvariantReport {
    let mut violations = Vec::new();
    let g = &trace.graph;
    let k = trace.k();

    let mut sets: Vec<TokenSet> = trace
        .initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();
    let mut snapshots = vec![Snapshot { marker: 0, sets: sets.clone() }];

    for record in &trace.rounds {
        let round = record.round;

        for (u, tag) in &record.ads {
            let set = &sets[u.index()];
            if tag.fingerprint != set.fingerprint() || tag.size != set.len() || tag.uid != *u {
                violations.push(InvariantViolation::AdMismatch { round, node: *u });
            }
        }

        for (&proposer, &target) in &record.proposals {
            if !g.has_edge(proposer, target) {
                violations.push(InvariantViolation::ProposalNotNeighbor {
                    round,
                    proposer,
                    target,
                });
            }
        }

        let mut proposers = BTreeSet::new();
        let mut acceptors = BTreeSet::new();
        for &(proposer, acceptor) in &record.accepted {
            if record.proposals.get(&proposer) != Some(&acceptor) {
                violations.push(InvariantViolation::AcceptedNotProposed {
                    round,
                    proposer,
                    acceptor,
                });
            }
            if !proposers.insert(proposer) {
                violations.push(InvariantViolation::ConnectionLimit { round, node: proposer });
            }
            if !acceptors.insert(acceptor) {
                violations.push(InvariantViolation::ConnectionLimit { round, node: acceptor });
            }
        }
        for &target in record.proposals.values() {
            if !acceptors.contains(&target) {
                violations.push(InvariantViolation::ForcedAcceptanceMissed { round, target });
            }
        }

        // Provenance: transfers ride accepted connections, move a token the
        // sender holds and the receiver lacks, one transfer per connection.
        let mut unused: Vec<(NodeId, NodeId)> = record.accepted.clone();
        for t in &record.transfers {
            let slot = unused.iter().position(|&(p, a)| {
                (p == t.from && a == t.to) || (p == t.to && a == t.from)
            });
            match slot {
                Some(i) => {
                    unused.swap_remove(i);
                }
                None => violations.push(InvariantViolation::TransferWithoutConnection {
                    round,
                    from: t.from,
                    to: t.to,
                }),
            }
            if !sets[t.from.index()].contains(t.token) {
                violations.push(InvariantViolation::SenderLacksToken {
                    round,
                    from: t.from,
                    token: t.token,
                });
            }
            if !sets[t.to.index()].insert(t.token) {
                violations.push(InvariantViolation::ReceiverAlreadyHeld {
                    round,
                    to: t.to,
                    token: t.token,
                });
            }
        }
        snapshots.push(Snapshot { marker: u64::from(round), sets: sets.clone() });
    }

    violations.extend(check_snapshot_sequence(&snapshots, k));

    let mut union: BTreeSet<TokenId> = BTreeSet::new();
    for s in &trace.initial {
        union.extend(s.iter().copied());
    }
    let solved = sets
        .iter()
        .all(|s| union.iter().all(|&t| s.contains(t)));
    let completion_consistent = match trace.completion {
        Some(0) => trace.rounds.is_empty() && solved,
        Some(r) => trace.rounds.len() == r as usize && solved,
        None => !solved,
    };
    if !completion_consistent {
        violations.push(InvariantViolation::CompletionMismatch);
    }

    InvariantReport { violations }
}

/// Provenance and consistency audit for asynchronous traces: transfers ride
/// graph edges, senders hold their tokens, updates advertise the true state,
/// and the recorded completion matches the replay.
pub fn check_async_token_invariants(trace: &AsyncTrace) -> InvariantReport {
    let mut violations = Vec::new();
    let mut sets: Vec<TokenSet> = trace
        .initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();

    for ev in &trace.events {
        match &ev.kind {
            EventKind::Update { node, tag } => {
                let set = &sets[node.index()];
                if tag.fingerprint != set.fingerprint()
                    || tag.size != set.len()
                    || tag.uid != *node
                {
                    violations.push(InvariantViolation::AdMismatch {
                        round: 0,
                        node: *node,
                    });
                }
            }
            EventKind::TransferDone { src, dst, moved: Some(t) } => {
                if !trace.graph.has_edge(*src, *dst) {
                    violations.push(InvariantViolation::TransferWithoutConnection {
                        round: 0,
                        from: t.from,
                        to: t.to,
                    });
                }
                if !(t.from == *src && t.to == *dst || t.from == *dst && t.to == *src) {
                    violations.push(InvariantViolation::TransferWithoutConnection {
                        round: 0,
                        from: t.from,
                        to: t.to,
                    });
                }
                if !sets[t.from.index()].contains(t.token) {
                    violations.push(InvariantViolation::SenderLacksToken {
                        round: 0,
                        from: t.from,
                        token: t.token,
                    });
                }
                // Async transfers may re-deliver a token that arrived over a
                // concurrent connection; the insert is idempotent.
                sets[t.to.index()].insert(t.token);
            }
            _ => {}
        }
    }

    let mut union: BTreeSet<TokenId> = BTreeSet::new();
    for s in &trace.initial {
        union.extend(s.iter().copied());
    }
    let solved = sets
        .iter()
        .all(|s| union.iter().all(|&t| s.contains(t)));
    let consistent = match trace.completion {
        Some(_) => solved,
        None => !solved,
    };
    if !consistent {
        violations.push(InvariantViolation::CompletionMismatch);
    }
    InvariantReport { violations }
}

// ---------------------------------------------------------------------------
// Asynchronous window analysis
// ---------------------------------------------------------------------------

/// Default window factor: audits use windows of `c · δ_max`.
pub const DEFAULT_WINDOW_FACTOR: u64 = 3;

/// True when `u` (better-informed side) properly considers `v` within
/// `[t1, t1 + window]`: some recorded `Select` by `u` in the window has `v`
/// among its candidates and no more candidates than `u`'s degree in the
/// minimum productive subgraph fixed at `t1`.
pub fn properly_considers(
    trace: &AsyncTrace,
    t1: Ticks,
    u: NodeId,
    v: NodeId,
    window: Ticks,
) -> Result<bool, AnalysisError> {
    let snapshot = async_snapshot_at(trace, t1);
    let sub = productive_subgraph(&trace.graph, &snapshot);
    if !sub.min_edges.contains(&(u, v)) {
        return Err(AnalysisError::NotMinEdge { u, v, t: t1 });
    }
    let deg_min = sub.min_edges.iter().filter(|&&(l, _)| l == u).count();
    let t2 = t1 + window;
    Ok(trace.events.iter().any(|ev| {
        ev.time >= t1
            && ev.time <= t2
            && matches!(
                &ev.kind,
                EventKind::Select { node, candidates, .. }
                    if *node == u && candidates.contains(&v) && candidates.len() <= deg_min
            )
    }))
}

/// One window edge that was neither properly considered nor rescued by a
/// productive connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowViolation {
    pub t1: Ticks,
    pub u: NodeId,
    pub v: NodeId,
}

/// Audits an asynchronous trace in windows of `c · δ_max`: for every edge
/// `(u, v)` of the minimum productive subgraph fixed at the window start,
/// either `u` properly considers `v` during the window or `v` participates
/// in a productive connection during it.
pub fn audit_async_windows(trace: &AsyncTrace, c: u64) -> Vec<WindowViolation> {
    let window = c * trace.bounds.delta_max();
    let mut violations = Vec::new();
    let mut t1 = 0;
    while t1 < trace.end_time {
        let snapshot = async_snapshot_at(trace, t1);
        let profile = size_profile(&snapshot);
        if profile.classes > 1 {
            let sub = productive_subgraph(&trace.graph, &snapshot);
            let t2 = t1 + window;
            for &(u, v) in &sub.min_edges {
                let deg_min = sub.min_edges.iter().filter(|&&(l, _)| l == u).count();
                let considered = trace.events.iter().any(|ev| {
                    ev.time >= t1
                        && ev.time <= t2
                        && matches!(
                            &ev.kind,
                            EventKind::Select { node, candidates, .. }
                                if *node == u
                                    && candidates.contains(&v)
                                    && candidates.len() <= deg_min
                        )
                });
                let connected = trace.events.iter().any(|ev| {
                    ev.time >= t1
                        && ev.time <= t2
                        && matches!(
                            &ev.kind,
                            EventKind::TransferDone { moved: Some(t), .. }
                                if t.from == v || t.to == v
                        )
                });
                if !considered && !connected {
                    violations.push(WindowViolation { t1, u, v });
                }
            }
        }
        t1 += window;
    }
    violations
}

// ---------------------------------------------------------------------------
// Metric reports
// ---------------------------------------------------------------------------

/// One CSV row per round boundary: the size profile, the productive
/// subgraph dimensions, and (when the expansion is known) the matching
/// bound check.
pub fn sync_metrics_csv(trace: &SyncTrace, alpha: Option<Frac>) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(
        "round,i_min,classes,n_min,n_star_min,productive_edges,min_edges,matching,bound_holds,transfers\n",
    );
    let transfers_of = |marker: u64| {
        if marker == 0 {
            0
        } else {
            trace.rounds[marker as usize - 1].transfers.len()
        }
    };
    for snapshot in sync_snapshots(trace) {
        let p = size_profile(&snapshot);
        let sub = productive_subgraph(&trace.graph, &snapshot);
        let (matching, holds) = match alpha {
            Some(a) if p.classes > 1 => {
                let report = check_min_matching(&trace.graph, &snapshot, a)
                    .expect("classes > 1 checked");
                (report.matching.len().to_string(), report.holds.to_string())
            }
            _ => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            snapshot.marker,
            p.i_min,
            p.classes,
            p.n_min,
            p.n_star_min,
            sub.edges.len(),
            sub.min_edges.len(),
            matching,
            holds,
            transfers_of(snapshot.marker),
        );
    }
    out
}

/// One CSV row per analysis window of `c·δ_max` ticks: the size profile at
/// the window start and the window's productive-consideration audit.
pub fn async_metrics_csv(trace: &AsyncTrace, c: u64) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(
        "window_start,i_min,classes,n_min,n_star_min,min_edges,audit_violations\n",
    );
    let violations = audit_async_windows(trace, c);
    let window = c * trace.bounds.delta_max();
    let mut t1 = 0;
    while t1 < trace.end_time {
        let snapshot = async_snapshot_at(trace, t1);
        let p = size_profile(&snapshot);
        let sub = productive_subgraph(&trace.graph, &snapshot);
        let in_window = violations.iter().filter(|v| v.t1 == t1).count();
        let _ = writeln!(
            out,
            "{t1},{},{},{},{},{},{in_window}",
            p.i_min,
            p.classes,
            p.n_min,
            p.n_star_min,
            sub.min_edges.len(),
        );
        t1 += window;
    }
    out
}

// ---------------------------------------------------------------------------
// Theoretical budgets
// ---------------------------------------------------------------------------

/// Reference quantities for scaling comparisons. Never pass thresholds by
/// themselves; the acceptance envelope multiplies them by a documented
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    /// `(k/α) · log₂n · log₂²Δ` with every log term floored at 1 and Δ
    /// floored at 2.
    pub sync_rounds: f64,
    /// `k·(n−q)/(2q)` with `q = round(n·α)`: the connection-counting round
    /// lower bound for the star-clique family.
    pub lb_rounds: Frac,
    /// `n·k`, the crude deterministic asynchronous bound in units of
    /// `δ_max`.
    pub crude_async: u64,
}

pub fn frac_to_f64(f: Frac) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

pub fn theoretical_budget(k: usize, alpha: Frac, n: usize, max_degree: usize) -> Budget {
    let log_n = (n as f64).log2().max(1.0);
    let log_d = (max_degree.max(2) as f64).log2().max(1.0);
    let sync_rounds = (k as f64) / frac_to_f64(alpha) * log_n * log_d * log_d;

    let q = (alpha * Frac::from_integer(n as u64) + Ratio::new(1, 2))
        .floor()
        .to_integer();
    let lb_rounds = if q >= 1 && q <= n as u64 {
        Frac::new(k as u64 * (n as u64 - q), 2 * q)
    } else {
        Frac::from_integer(0)
    };

    Budget {
        sync_rounds,
        lb_rounds,
        crude_async: (n * k) as u64,
    }
}
