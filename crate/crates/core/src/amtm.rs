//! Discrete-event engine for the asynchronous mobile telephone model.
//!
//! Each node runs the scan-and-connect loop: update the advertisement,
//! collect ads received since the previous pass, select a neighbor, block
//! for the connection attempt, communicate, repeat. Delivery and resolution
//! times are chosen by a [`DelayAdversary`] subject to the model bounds: ads
//! arrive within `δ_update` of their update (and keep arriving at least once
//! per `δ_update`), connection attempts resolve within `δ_conn`, and
//! transfers proceed at no less than `rate_bits` bits per tick.
//!
//! Simulated time is a 64-bit tick count; local computation costs zero
//! ticks. The event queue pops in `(time, seq)` order with `seq` assigned at
//! scheduling time, so a run is a pure function of
//! `(graph, initial tokens, bounds, adversary, seed)`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::behavior::{Behavior, Transfer};
use crate::graph::{Graph, NodeId};
use crate::rng::{stream, StreamId};
use crate::sync::EngineError;
use crate::token::{FingerprintRegistry, Tag, TokenId, TokenSet};

/// Simulated time in ticks.
pub type Ticks = u64;

/// Per-execution delay and rate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayBounds {
    /// Maximum delay for an advertisement to reach a neighbor, and the
    /// maximum spacing between successive deliveries while advertising.
    pub delta_update: Ticks,
    /// Maximum time for a connection attempt (proposal plus response).
    pub delta_conn: Ticks,
    /// Minimum transfer rate, in bits per tick.
    pub rate_bits: u64,
    /// Size of one token in bits.
    pub token_bits: u64,
}

impl DelayBounds {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.delta_update == 0 || self.delta_conn == 0 || self.rate_bits == 0
            || self.token_bits == 0
        {
            return Err(EngineError::BadBounds("all bounds must be positive"));
        }
        Ok(())
    }

    /// Worst-case ticks to move one token at the minimum rate.
    pub fn transfer_ticks(&self) -> Ticks {
        self.token_bits.div_ceil(self.rate_bits)
    }

    /// `δ_max = δ_conn + δ_update + b_max/R_b`, the per-loop-iteration bound.
    pub fn delta_max(&self) -> Ticks {
        self.delta_conn + self.delta_update + self.transfer_ticks()
    }

    /// Doubles every delay bound (halving the rate), doubling `δ_max`.
    pub fn doubled(&self) -> DelayBounds {
        DelayBounds {
            delta_update: self.delta_update * 2,
            delta_conn: self.delta_conn * 2,
            rate_bits: self.rate_bits,
            token_bits: self.token_bits * 2,
        }
    }
}

/// Read-only view the adversary gets when choosing a delay.
pub struct NetView<'a> {
    /// Current token-set size of every node.
    pub sizes: &'a [usize],
    pub bounds: &'a DelayBounds,
}

/// Chooses every delay in the run, within the model bounds.
///
/// Returned delays must be positive and no larger than the stated bound;
/// the engine verifies each one and aborts the run on a violation.
pub trait DelayAdversary {
    /// Delay until the next ad delivery on edge `src -> dst`; in
    /// `(0, delta_update]`.
    fn ad_delay(
        &mut self,
        src: NodeId,
        dst: NodeId,
        now: Ticks,
        view: &NetView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Ticks;

    /// Delay before an idle node re-runs its loop; in `(0, delta_update]`.
    fn wake_delay(
        &mut self,
        node: NodeId,
        now: Ticks,
        view: &NetView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Ticks;

    /// Total proposal-plus-response time; in `(0, delta_conn]`.
    fn conn_roundtrip(
        &mut self,
        src: NodeId,
        dst: NodeId,
        now: Ticks,
        view: &NetView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Ticks;

    /// Time to move `bits` bits; in `(0, ceil(bits/rate_bits)]` so the
    /// effective rate is at least `rate_bits`.
    fn transfer_time(
        &mut self,
        bits: u64,
        now: Ticks,
        view: &NetView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Ticks;

    fn name(&self) -> &'static str;
}

/// Every delay at its bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantMax;

impl DelayAdversary for ConstantMax {
    fn ad_delay(&mut self, _: NodeId, _: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        v.bounds.delta_update
    }
    fn wake_delay(&mut self, _: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        v.bounds.delta_update
    }
    fn conn_roundtrip(&mut self, _: NodeId, _: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        v.bounds.delta_conn
    }
    fn transfer_time(&mut self, bits: u64, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        bits.div_ceil(v.bounds.rate_bits)
    }
    fn name(&self) -> &'static str {
        "constant_max"
    }
}

/// Every delay uniform in `[1, bound]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformDelay;

impl DelayAdversary for UniformDelay {
    fn ad_delay(&mut self, _: NodeId, _: NodeId, _: Ticks, v: &NetView<'_>, rng: &mut ChaCha8Rng) -> Ticks {
        rng.gen_range(1..=v.bounds.delta_update)
    }
    fn wake_delay(&mut self, _: NodeId, _: Ticks, v: &NetView<'_>, rng: &mut ChaCha8Rng) -> Ticks {
        rng.gen_range(1..=v.bounds.delta_update)
    }
    fn conn_roundtrip(&mut self, _: NodeId, _: NodeId, _: Ticks, v: &NetView<'_>, rng: &mut ChaCha8Rng) -> Ticks {
        rng.gen_range(1..=v.bounds.delta_conn)
    }
    fn transfer_time(&mut self, bits: u64, _: Ticks, v: &NetView<'_>, rng: &mut ChaCha8Rng) -> Ticks {
        rng.gen_range(1..=bits.div_ceil(v.bounds.rate_bits).max(1))
    }
    fn name(&self) -> &'static str {
        "uniform_random"
    }
}

/// Alternates near-zero and near-bound phases of length `delta_update`,
/// switching on the parity of `now / delta_update`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bursty;

impl Bursty {
    fn pick(now: Ticks, window: Ticks, bound: Ticks) -> Ticks {
        if (now / window).is_multiple_of(2) {
            1
        } else {
            bound
        }
    }
}

impl DelayAdversary for Bursty {
    fn ad_delay(&mut self, _: NodeId, _: NodeId, now: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        Self::pick(now, v.bounds.delta_update, v.bounds.delta_update)
    }
    fn wake_delay(&mut self, _: NodeId, now: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        Self::pick(now, v.bounds.delta_update, v.bounds.delta_update)
    }
    fn conn_roundtrip(&mut self, _: NodeId, _: NodeId, now: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        Self::pick(now, v.bounds.delta_update, v.bounds.delta_conn)
    }
    fn transfer_time(&mut self, bits: u64, now: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        Self::pick(now, v.bounds.delta_update, bits.div_ceil(v.bounds.rate_bits).max(1))
    }
    fn name(&self) -> &'static str {
        "bursty"
    }
}

/// Maximizes delay on everything touching the currently least-informed node
/// (smallest token set, ties to the smallest id); everything else is fast.
#[derive(Debug, Clone, Copy, Default)]
pub struct TargetedStaller;

impl TargetedStaller {
    fn least(view: &NetView<'_>) -> usize {
        let mut best = 0;
        for (i, &s) in view.sizes.iter().enumerate() {
            if s < view.sizes[best] {
                best = i;
            }
        }
        best
    }
}

impl DelayAdversary for TargetedStaller {
    fn ad_delay(&mut self, src: NodeId, dst: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        let least = Self::least(v);
        if src.index() == least || dst.index() == least {
            v.bounds.delta_update
        } else {
            1
        }
    }
    fn wake_delay(&mut self, node: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        if node.index() == Self::least(v) {
            v.bounds.delta_update
        } else {
            1
        }
    }
    fn conn_roundtrip(&mut self, src: NodeId, dst: NodeId, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        let least = Self::least(v);
        if src.index() == least || dst.index() == least {
            v.bounds.delta_conn
        } else {
            1
        }
    }
    fn transfer_time(&mut self, bits: u64, _: Ticks, v: &NetView<'_>, _: &mut ChaCha8Rng) -> Ticks {
        bits.div_ceil(v.bounds.rate_bits).max(1)
    }
    fn name(&self) -> &'static str {
        "targeted_staller"
    }
}

/// Looks up a built-in adversary by its config name.
pub fn adversary_by_name(name: &str) -> Option<Box<dyn DelayAdversary>> {
    match name {
        "constant_max" => Some(Box::new(ConstantMax)),
        "uniform_random" => Some(Box::new(UniformDelay)),
        "bursty" => Some(Box::new(Bursty)),
        "targeted_staller" => Some(Box::new(TargetedStaller)),
        _ => None,
    }
}

pub const BUILTIN_ADVERSARIES: [&str; 4] =
    ["constant_max", "uniform_random", "bursty", "targeted_staller"];

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// One recorded event; the trace vector is in processing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Ticks,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// The node passed a fresh tag to `update`.
    Update { node: NodeId, tag: Tag },
    /// `dst` received `src`'s advertisement.
    AdDeliver { src: NodeId, dst: NodeId, tag: Tag },
    /// The node's loop ran (or re-ran after a wake delay).
    LoopWake { node: NodeId },
    /// A `Select` call: the candidate set it computed and its pick.
    Select {
        node: NodeId,
        candidates: Vec<NodeId>,
        chosen: Option<NodeId>,
    },
    /// `src` called `blockForConn(dst)` and its loop blocked.
    BlockForConn { src: NodeId, dst: NodeId },
    /// The proposal reached `dst`, which resolves acceptance immediately.
    ProposalDeliver { src: NodeId, dst: NodeId },
    /// The accept/reject answer reached the proposer (`dst`).
    ProposalResponse { src: NodeId, dst: NodeId, accepted: bool },
    /// Connection `src -> dst` (proposer -> acceptor) closed. `moved` is the
    /// applied token movement, `None` for a stale no-op connection.
    TransferDone {
        src: NodeId,
        dst: NodeId,
        moved: Option<Transfer>,
    },
}

/// Full record of an asynchronous run.
#[derive(Debug, Clone, PartialEq)]
pub struct AsyncTrace {
    pub graph: Graph,
    pub bounds: DelayBounds,
    pub initial: Vec<BTreeSet<TokenId>>,
    pub events: Vec<TraceEvent>,
    /// Time at which every node first held every token.
    pub completion: Option<Ticks>,
    /// Completion time, or the max-time horizon if gossip never completed.
    pub end_time: Ticks,
    pub seed: u64,
}

impl AsyncTrace {
    pub fn k(&self) -> usize {
        let mut union = BTreeSet::new();
        for set in &self.initial {
            union.extend(set.iter().copied());
        }
        union.len()
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Pending {
    AdDeliver { src: NodeId, dst: NodeId },
    LoopWake { node: NodeId },
    ProposalDeliver { src: NodeId, dst: NodeId, resp_delay: Ticks },
    ProposalResponse { src: NodeId, dst: NodeId, accepted: bool },
    TransferDone { src: NodeId, dst: NodeId, moved: Option<Transfer> },
}

struct Queued {
    time: Ticks,
    seq: u64,
    pending: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Persistent loop phases. Updating, collecting, and selecting cost zero
/// simulated time, so they never persist between events and collapse into
/// the processing of a single event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Blocked,
    Communicating,
}

struct Engine<'a> {
    g: &'a Graph,
    behavior: &'a dyn Behavior,
    adversary: &'a mut dyn DelayAdversary,
    bounds: DelayBounds,
    queue: BinaryHeap<Reverse<Queued>>,
    next_seq: u64,
    sets: Vec<TokenSet>,
    sizes: Vec<usize>,
    phase: Vec<Phase>,
    in_incoming: Vec<bool>,
    advertising: Vec<bool>,
    pending_ads: Vec<BTreeMap<NodeId, Tag>>,
    last_tag: Vec<Tag>,
    node_rngs: Vec<ChaCha8Rng>,
    adversary_rng: ChaCha8Rng,
    registry: FingerprintRegistry,
    events: Vec<TraceEvent>,
    k: usize,
    full_count: usize,
    completion: Option<Ticks>,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, time: Ticks, pending: Pending) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Queued { time, seq, pending }));
    }

    fn emit(&mut self, time: Ticks, kind: EventKind) {
        self.events.push(TraceEvent { time, kind });
    }

    fn checked(
        &self,
        what: &'static str,
        got: Ticks,
        bound: Ticks,
    ) -> Result<Ticks, EngineError> {
        if got == 0 || got > bound {
            return Err(EngineError::GuaranteeViolation { what, got, bound });
        }
        Ok(got)
    }

    fn ad_delay(&mut self, src: NodeId, dst: NodeId, now: Ticks) -> Result<Ticks, EngineError> {
        let view = NetView { sizes: &self.sizes, bounds: &self.bounds };
        let d = self
            .adversary
            .ad_delay(src, dst, now, &view, &mut self.adversary_rng);
        self.checked("ad_delay", d, self.bounds.delta_update)
    }

    fn wake_delay(&mut self, node: NodeId, now: Ticks) -> Result<Ticks, EngineError> {
        let view = NetView { sizes: &self.sizes, bounds: &self.bounds };
        let d = self
            .adversary
            .wake_delay(node, now, &view, &mut self.adversary_rng);
        self.checked("wake_delay", d, self.bounds.delta_update)
    }

    fn conn_roundtrip(&mut self, src: NodeId, dst: NodeId, now: Ticks) -> Result<Ticks, EngineError> {
        let view = NetView { sizes: &self.sizes, bounds: &self.bounds };
        let d = self
            .adversary
            .conn_roundtrip(src, dst, now, &view, &mut self.adversary_rng);
        self.checked("conn_roundtrip", d, self.bounds.delta_conn)
    }

    fn transfer_time(&mut self, bits: u64, now: Ticks) -> Result<Ticks, EngineError> {
        let view = NetView { sizes: &self.sizes, bounds: &self.bounds };
        let d = self
            .adversary
            .transfer_time(bits, now, &view, &mut self.adversary_rng);
        self.checked("transfer_time", d, bits.div_ceil(self.bounds.rate_bits).max(1))
    }

    /// One pass of the scan-and-connect loop for `node`.
    fn loop_pass(&mut self, node: NodeId, now: Ticks) -> Result<(), EngineError> {
        debug_assert_eq!(self.phase[node.index()], Phase::Idle);

        // update(GetTag())
        let tag = self.behavior.advertise(node, &self.sets[node.index()]);
        self.last_tag[node.index()] = tag;
        self.emit(now, EventKind::Update { node, tag });
        if !self.advertising[node.index()] {
            self.advertising[node.index()] = true;
            for &v in self.g.neighbors(node) {
                let d = self.ad_delay(node, v, now)?;
                self.schedule(now + d, Pending::AdDeliver { src: node, dst: v });
            }
        }

        // receiveAds(): everything delivered since the previous pass.
        let ads: Vec<Tag> = std::mem::take(&mut self.pending_ads[node.index()])
            .into_values()
            .collect();
        if ads.is_empty() {
            let d = self.wake_delay(node, now)?;
            self.schedule(now + d, Pending::LoopWake { node });
            return Ok(());
        }

        let candidates = self
            .behavior
            .candidates(node, &self.sets[node.index()], &ads);
        let chosen = self.behavior.select(
            node,
            &self.sets[node.index()],
            &ads,
            &mut self.node_rngs[node.index()],
        );
        self.emit(
            now,
            EventKind::Select { node, candidates, chosen },
        );
        let Some(receiver) = chosen else {
            let d = self.wake_delay(node, now)?;
            self.schedule(now + d, Pending::LoopWake { node });
            return Ok(());
        };
        if !ads.iter().any(|t| t.uid == receiver) {
            return Err(EngineError::BehaviorViolation { node, chosen: receiver });
        }

        // blockForConn(receiver)
        self.emit(now, EventKind::BlockForConn { src: node, dst: receiver });
        self.phase[node.index()] = Phase::Blocked;
        let d = self.conn_roundtrip(node, receiver, now)?;
        let prop_delay = d.div_ceil(2);
        self.schedule(
            now + prop_delay,
            Pending::ProposalDeliver {
                src: node,
                dst: receiver,
                resp_delay: d - prop_delay,
            },
        );
        Ok(())
    }

    fn apply_transfer(&mut self, t: Transfer, now: Ticks) -> Result<(), EngineError> {
        if self.sets[t.to.index()].insert(t.token) {
            self.sizes[t.to.index()] += 1;
            self.registry.observe(&self.sets[t.to.index()])?;
            if self.sets[t.to.index()].len() == self.k {
                self.full_count += 1;
                if self.full_count == self.g.node_count() {
                    self.completion = Some(now);
                }
            }
        }
        Ok(())
    }

    fn handle(&mut self, time: Ticks, pending: Pending) -> Result<(), EngineError> {
        match pending {
            Pending::AdDeliver { src, dst } => {
                let tag = self.last_tag[src.index()];
                self.emit(time, EventKind::AdDeliver { src, dst, tag });
                self.pending_ads[dst.index()].insert(src, tag);
                // Perpetual redelivery keeps the at-least-once-per-window
                // guarantee; exactly one chain event per directed edge is in
                // flight at any time.
                let d = self.ad_delay(src, dst, time)?;
                self.schedule(time + d, Pending::AdDeliver { src, dst });
            }
            Pending::LoopWake { node } => {
                self.emit(time, EventKind::LoopWake { node });
                self.loop_pass(node, time)?;
            }
            Pending::ProposalDeliver { src, dst, resp_delay } => {
                self.emit(time, EventKind::ProposalDeliver { src, dst });
                let accepted = !self.in_incoming[dst.index()];
                if accepted {
                    self.in_incoming[dst.index()] = true;
                }
                self.schedule(
                    time + resp_delay,
                    Pending::ProposalResponse { src: dst, dst: src, accepted },
                );
            }
            Pending::ProposalResponse { src, dst, accepted } => {
                // src = acceptor, dst = proposer (message direction).
                self.emit(time, EventKind::ProposalResponse { src, dst, accepted });
                let proposer = dst;
                let acceptor = src;
                if accepted {
                    let decision = self.behavior.communicate(
                        proposer,
                        &self.sets[proposer.index()],
                        acceptor,
                        &self.sets[acceptor.index()],
                    );
                    self.phase[proposer.index()] = Phase::Communicating;
                    match decision {
                        Some(t) => {
                            let d = self.transfer_time(self.bounds.token_bits, time)?;
                            self.schedule(
                                time + d,
                                Pending::TransferDone {
                                    src: proposer,
                                    dst: acceptor,
                                    moved: Some(t),
                                },
                            );
                        }
                        None => {
                            // Stale connection: nothing to send, close now.
                            self.schedule(
                                time,
                                Pending::TransferDone {
                                    src: proposer,
                                    dst: acceptor,
                                    moved: None,
                                },
                            );
                        }
                    }
                } else {
                    self.phase[proposer.index()] = Phase::Idle;
                    self.schedule(time, Pending::LoopWake { node: proposer });
                }
            }
            Pending::TransferDone { src, dst, moved } => {
                self.emit(time, EventKind::TransferDone { src, dst, moved });
                if let Some(t) = moved {
                    self.apply_transfer(t, time)?;
                }
                self.in_incoming[dst.index()] = false;
                self.phase[src.index()] = Phase::Idle;
                self.schedule(time, Pending::LoopWake { node: src });
            }
        }
        Ok(())
    }
}

/// Runs the asynchronous loop for every node until gossip completes or
/// `max_time` passes. Non-completion is reported, not an error.
pub fn run_async(
    g: &Graph,
    initial: &[BTreeSet<TokenId>],
    behavior: &dyn Behavior,
    bounds: DelayBounds,
    adversary: &mut dyn DelayAdversary,
    seed: u64,
    max_time: Ticks,
) -> Result<AsyncTrace, EngineError> {
    bounds.validate()?;
    if initial.len() != g.node_count() {
        return Err(EngineError::StateMismatch {
            got: initial.len(),
            want: g.node_count(),
        });
    }
    let mut union: BTreeSet<TokenId> = BTreeSet::new();
    for set in initial {
        union.extend(set.iter().copied());
    }
    let k = union.len();

    let sets: Vec<TokenSet> = initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();
    let mut registry = FingerprintRegistry::new();
    for s in &sets {
        registry.observe(s)?;
    }
    let sizes: Vec<usize> = sets.iter().map(TokenSet::len).collect();
    let full_count = sets.iter().filter(|s| s.len() == k).count();
    let n = g.node_count();

    let mut engine = Engine {
        g,
        behavior,
        adversary,
        bounds,
        queue: BinaryHeap::new(),
        next_seq: 0,
        last_tag: sets
            .iter()
            .enumerate()
            .map(|(i, s)| s.tag(NodeId(i as u32)))
            .collect(),
        sets,
        sizes,
        phase: vec![Phase::Idle; n],
        in_incoming: vec![false; n],
        advertising: vec![false; n],
        pending_ads: vec![BTreeMap::new(); n],
        node_rngs: (0..n as u32)
            .map(|node| stream(seed, StreamId::Node { node }))
            .collect(),
        adversary_rng: stream(seed, StreamId::Adversary),
        registry,
        events: Vec::new(),
        k,
        full_count,
        completion: None,
    };

    let mut trace = AsyncTrace {
        graph: g.clone(),
        bounds,
        initial: initial.to_vec(),
        events: Vec::new(),
        completion: None,
        end_time: 0,
        seed,
    };

    if engine.full_count == n {
        trace.completion = Some(0);
        return Ok(trace);
    }

    for node in g.nodes() {
        engine.schedule(0, Pending::LoopWake { node });
    }

    let mut end_time = max_time;
    while let Some(Reverse(next)) = engine.queue.pop() {
        if next.time > max_time {
            break;
        }
        engine.handle(next.time, next.pending)?;
        if let Some(t) = engine.completion {
            end_time = t;
            break;
        }
    }

    trace.events = engine.events;
    trace.completion = engine.completion;
    trace.end_time = end_time;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Offline guarantee checking
// ---------------------------------------------------------------------------

/// One detected violation of the model guarantees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// (a) An ad arrived more than `delta_update` after the update call
    /// that produced it.
    AdStale { src: NodeId, dst: NodeId, time: Ticks, age: Ticks },
    /// (b) An ad arrived although a newer update had superseded it beyond
    /// its window (or the content was never passed to update at all).
    AdSuperseded { src: NodeId, dst: NodeId, time: Ticks },
    /// (c) A `delta_update` window passed in which an advertising node's
    /// neighbor heard nothing from it.
    AdGap { src: NodeId, dst: NodeId, at: Ticks, gap: Ticks },
    /// (d) A `blockForConn` call took longer than `delta_conn` to resolve.
    ConnTimeout { src: NodeId, dst: NodeId, call: Ticks, took: Ticks },
    /// (e) A node serviced two incoming connections at once.
    DoubleIncoming { node: NodeId, first_open: Ticks, second_open: Ticks },
    /// (f) A transfer ran slower than the minimum bit rate.
    RateTooSlow { src: NodeId, dst: NodeId, took: Ticks, max: Ticks },
}

/// Audits a trace against the model guarantees; returns every violation.
///
/// Checks: (a) ad freshness, (b) no superseded-beyond-window deliveries,
/// (c) at-least-one-ad per `delta_update` window per advertising edge,
/// (d) connection resolution within `delta_conn`, (e) single incoming
/// connection at a time, (f) effective transfer rate at least `rate_bits`.
pub fn check_guarantees(trace: &AsyncTrace, bounds: &DelayBounds) -> Vec<Violation> {
    let mut violations = Vec::new();
    let du = bounds.delta_update;
    let n = trace.graph.node_count();

    // Indexed views of the event stream, keyed by directed node pair.
    // Emission index doubles as the within-tick precedence.
    type PerPair<T> = BTreeMap<(NodeId, NodeId), Vec<T>>;
    let mut updates: Vec<Vec<(usize, Ticks, Tag)>> = vec![Vec::new(); n];
    let mut blocks: Vec<Vec<(usize, Ticks)>> = vec![Vec::new(); n];
    let mut deliveries: PerPair<(usize, Ticks, Tag)> = BTreeMap::new();
    let mut calls: PerPair<Ticks> = BTreeMap::new();
    let mut prop_delivers: PerPair<(usize, Ticks)> = BTreeMap::new();
    let mut responses: PerPair<(usize, Ticks, bool)> = BTreeMap::new();
    let mut dones: PerPair<(usize, Ticks, bool)> = BTreeMap::new();

    for (idx, ev) in trace.events.iter().enumerate() {
        match &ev.kind {
            EventKind::Update { node, tag } => updates[node.index()].push((idx, ev.time, *tag)),
            EventKind::AdDeliver { src, dst, tag } => deliveries
                .entry((*src, *dst))
                .or_default()
                .push((idx, ev.time, *tag)),
            EventKind::BlockForConn { src, dst } => {
                blocks[src.index()].push((idx, ev.time));
                calls.entry((*src, *dst)).or_default().push(ev.time);
            }
            EventKind::ProposalDeliver { src, dst } => prop_delivers
                .entry((*src, *dst))
                .or_default()
                .push((idx, ev.time)),
            EventKind::ProposalResponse { src, dst, accepted } => responses
                .entry((*dst, *src)) // key by (proposer, acceptor)
                .or_default()
                .push((idx, ev.time, *accepted)),
            EventKind::TransferDone { src, dst, moved } => dones
                .entry((*src, *dst))
                .or_default()
                .push((idx, ev.time, moved.is_some())),
            _ => {}
        }
    }

    // (a) + (b): delivered content must trace to an update call, current
    // content must be at most delta_update old unless the advertiser's loop
    // is provably blocked in a connection attempt, and superseded content is
    // illegal once its successor's window has elapsed. "Before" is emission
    // order, which refines the tick ordering.
    for ((src, dst), dels) in &deliveries {
        let ups = &updates[src.index()];
        for &(d_idx, time, tag) in dels {
            let matching = ups
                .iter()
                .rev()
                .skip_while(|(i, _, _)| *i > d_idx)
                .find(|(_, _, u)| *u == tag);
            let Some(&(m_idx, m_time, _)) = matching else {
                violations.push(Violation::AdSuperseded { src: *src, dst: *dst, time });
                continue;
            };
            let successor = ups.iter().find(|(i, _, _)| *i > m_idx && *i < d_idx);
            match successor {
                // Content still current.
                None => {
                    if time - m_time > du {
                        // A loop stuck in blockForConn/communicate since the
                        // update cannot refresh its advertisement; that gap
                        // is the model's own loop latency, not a violation.
                        let excused = blocks[src.index()]
                            .iter()
                            .any(|&(b_idx, b_time)| b_idx > m_idx && b_time <= time);
                        if !excused {
                            violations.push(Violation::AdStale {
                                src: *src,
                                dst: *dst,
                                time,
                                age: time - m_time,
                            });
                        }
                    }
                }
                // Superseded: allowed only inside the successor's window.
                Some(&(_, s_time, _)) => {
                    if time > s_time + du {
                        violations.push(Violation::AdSuperseded { src: *src, dst: *dst, time });
                    }
                }
            }
        }
    }

    // (c): once a node advertises, each neighbor hears from it at least once
    // per delta_update window until the end of the trace.
    for src in trace.graph.nodes() {
        let Some(&(_, first_update, _)) = updates[src.index()].first() else {
            continue;
        };
        for &dst in trace.graph.neighbors(src) {
            let times: Vec<Ticks> = deliveries
                .get(&(src, dst))
                .map(|v| v.iter().map(|&(_, t, _)| t).collect())
                .unwrap_or_default();
            let mut last = first_update;
            for &t in &times {
                if t > last + du {
                    violations.push(Violation::AdGap { src, dst, at: last, gap: t - last });
                }
                last = t;
            }
            if trace.end_time > last + du {
                violations.push(Violation::AdGap {
                    src,
                    dst,
                    at: last,
                    gap: trace.end_time - last,
                });
            }
        }
    }

    // (d): blockForConn resolves within delta_conn. Calls and responses on
    // one directed pair match in order (the proposer is blocked meanwhile).
    for (pair, call_times) in &calls {
        let resp = responses.get(pair).map(Vec::as_slice).unwrap_or(&[]);
        for (i, &call) in call_times.iter().enumerate() {
            match resp.get(i) {
                Some(&(_, t, _)) => {
                    if t - call > bounds.delta_conn {
                        violations.push(Violation::ConnTimeout {
                            src: pair.0,
                            dst: pair.1,
                            call,
                            took: t - call,
                        });
                    }
                }
                None => {
                    if trace.end_time > call + bounds.delta_conn {
                        violations.push(Violation::ConnTimeout {
                            src: pair.0,
                            dst: pair.1,
                            call,
                            took: trace.end_time - call,
                        });
                    }
                }
            }
        }
    }

    // (e): intervals during which a node services an incoming connection
    // must not overlap. An accepted connection opens at proposal delivery
    // and closes at its TransferDone.
    let mut incoming: Vec<Vec<(usize, Ticks, usize, Ticks)>> = vec![Vec::new(); n];
    for (pair, delivers) in &prop_delivers {
        let resp = responses.get(pair).map(Vec::as_slice).unwrap_or(&[]);
        let done = dones.get(pair).map(Vec::as_slice).unwrap_or(&[]);
        let mut done_iter = done.iter();
        for (i, &(open_idx, open_t)) in delivers.iter().enumerate() {
            // A proposal whose response fell past the end of the trace has
            // an unknowable decision; skip it.
            let accepted = resp.get(i).map(|&(_, _, a)| a);
            if accepted == Some(true) {
                let (close_idx, close_t) = match done_iter.next() {
                    Some(&(idx, t, _)) => (idx, t),
                    None => (usize::MAX, trace.end_time),
                };
                incoming[pair.1.index()].push((open_idx, open_t, close_idx, close_t));
            }
        }
    }
    for (node, intervals) in incoming.iter_mut().enumerate() {
        intervals.sort_unstable();
        for w in intervals.windows(2) {
            let (_, first_open, close_idx, _) = w[0];
            let (open_idx, second_open, _, _) = w[1];
            if open_idx < close_idx {
                violations.push(Violation::DoubleIncoming {
                    node: NodeId(node as u32),
                    first_open,
                    second_open,
                });
            }
        }
    }

    // (f): a real transfer takes at most ceil(token_bits/rate) ticks from
    // the accepted response.
    let max_ticks = bounds.transfer_ticks();
    for (pair, done) in &dones {
        let resp: Vec<&(usize, Ticks, bool)> = responses
            .get(pair)
            .map(|v| v.iter().filter(|&&(_, _, a)| a).collect())
            .unwrap_or_default();
        for (i, &(_, t_done, real)) in done.iter().enumerate() {
            if !real {
                continue;
            }
            if let Some(&&(_, t_resp, _)) = resp.get(i) {
                let took = t_done - t_resp;
                if took > max_ticks {
                    violations.push(Violation::RateTooSlow {
                        src: pair.0,
                        dst: pair.1,
                        took,
                        max: max_ticks,
                    });
                }
            }
        }
    }

    violations
}
