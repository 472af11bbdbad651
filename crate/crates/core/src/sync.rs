//! The synchronous round engine.
//!
//! A round proceeds in five steps: every node's advertisement is delivered
//! to all of its neighbors; every node may submit one connection proposal;
//! every node that received at least one proposal accepts exactly one,
//! chosen by the acceptance policy; each accepted pair communicates exactly
//! once; token sets are updated. A node may hold one outgoing and one
//! incoming connection in the same round.
//!
//! Nodes are processed in ascending id order and every random decision is
//! drawn from a per-`(seed, node, round)` stream, so a trace is a pure
//! function of `(graph, initial tokens, behavior, policy, seed)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::behavior::{Behavior, Transfer};
use crate::graph::{Graph, NodeId};
use crate::rng::{stream, StreamId};
use crate::token::{FingerprintCollision, Tag, TokenId, TokenSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("behavior violation: node {node} selected {chosen}, not an advertising neighbor")]
    BehaviorViolation { node: NodeId, chosen: NodeId },
    #[error("policy violation: acceptor {target} chose {chosen}, not a proposer")]
    PolicyViolation { target: NodeId, chosen: NodeId },
    #[error(transparent)]
    FingerprintCollision(#[from] FingerprintCollision),
    #[error("states defined for {got} nodes, graph has {want}")]
    StateMismatch { got: usize, want: usize },
    #[error("guarantee violation: adversary exceeded the {what} bound, returned {got} > {bound}")]
    GuaranteeViolation { what: &'static str, got: u64, bound: u64 },
    #[error("invalid delay bounds: {0}")]
    BadBounds(&'static str),
}

/// Decides which proposal a node accepts; realizes the model's freedom to
/// "arbitrarily" resolve contention.
pub trait AcceptancePolicy {
    /// `proposers` is nonempty and sorted ascending; the returned id must be
    /// one of them. `states` are the round-start token sets of all nodes.
    fn choose(
        &self,
        target: NodeId,
        proposers: &[NodeId],
        states: &[TokenSet],
        rng: &mut dyn RngCore,
    ) -> NodeId;

    fn name(&self) -> &'static str;
}

/// Accepts the smallest proposer id.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstById;

impl AcceptancePolicy for FirstById {
    fn choose(
        &self,
        _target: NodeId,
        proposers: &[NodeId],
        _states: &[TokenSet],
        _rng: &mut dyn RngCore,
    ) -> NodeId {
        proposers[0]
    }

    fn name(&self) -> &'static str {
        "first_by_id"
    }
}

/// Accepts a uniformly random proposer.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformAccept;

impl AcceptancePolicy for UniformAccept {
    fn choose(
        &self,
        _target: NodeId,
        proposers: &[NodeId],
        _states: &[TokenSet],
        rng: &mut dyn RngCore,
    ) -> NodeId {
        proposers[rng.gen_range(0..proposers.len())]
    }

    fn name(&self) -> &'static str {
        "uniform_random"
    }
}

/// Heuristic adversary: accepts the proposer whose (hypothetical) transfer
/// yields the fewest distinct token-set sizes across the network, i.e. the
/// least sorting progress. Ties go to the smallest proposer id.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdversarialMinProgress;

impl AcceptancePolicy for AdversarialMinProgress {
    fn choose(
        &self,
        target: NodeId,
        proposers: &[NodeId],
        states: &[TokenSet],
        _rng: &mut dyn RngCore,
    ) -> NodeId {
        let mut sizes: Vec<usize> = states.iter().map(TokenSet::len).collect();
        let distinct = |sizes: &[usize]| sizes.iter().collect::<BTreeSet<_>>().len();
        let mut best = proposers[0];
        let mut best_classes = usize::MAX;
        for &p in proposers {
            let decision = crate::behavior::transfer_decision(
                p,
                &states[p.index()],
                target,
                &states[target.index()],
            );
            let classes = match decision {
                None => distinct(&sizes),
                Some(t) => {
                    sizes[t.to.index()] += 1;
                    let c = distinct(&sizes);
                    sizes[t.to.index()] -= 1;
                    c
                }
            };
            if classes < best_classes {
                best_classes = classes;
                best = p;
            }
        }
        best
    }

    fn name(&self) -> &'static str {
        "adversarial_min_progress"
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: u32,
    /// Advertisement of every node at the start of the round.
    pub ads: BTreeMap<NodeId, Tag>,
    /// proposer -> target; at most one entry per proposer.
    pub proposals: BTreeMap<NodeId, NodeId>,
    /// Accepted `(proposer, acceptor)` pairs, ascending by proposer, which
    /// is also the order the connections communicate in.
    pub accepted: Vec<(NodeId, NodeId)>,
    /// Applied token movements, in execution order. A connection whose
    /// endpoints turned out equal contributes no entry.
    pub transfers: Vec<Transfer>,
}

/// Full record of a synchronous run.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncTrace {
    pub graph: Graph,
    pub initial: Vec<BTreeSet<TokenId>>,
    pub rounds: Vec<RoundRecord>,
    /// Round after which every node held every token; 0 means the initial
    /// distribution was already complete. `None`: max_rounds exhausted.
    pub completion: Option<u32>,
    pub seed: u64,
}

impl SyncTrace {
    pub fn k(&self) -> usize {
        let mut union = BTreeSet::new();
        for set in &self.initial {
            union.extend(set.iter().copied());
        }
        union.len()
    }
}

/// Runs one synchronous round, mutating `states` in place.
pub fn run_round(
    g: &Graph,
    states: &mut [TokenSet],
    behavior: &dyn Behavior,
    policy: &dyn AcceptancePolicy,
    registry: &mut crate::token::FingerprintRegistry,
    seed: u64,
    round: u32,
) -> Result<RoundRecord, EngineError> {
    if states.len() != g.node_count() {
        return Err(EngineError::StateMismatch {
            got: states.len(),
            want: g.node_count(),
        });
    }

    // One stream per node per round, drawn sequentially: first the node's
    // select, then its acceptance choice.
    let mut rngs: Vec<_> = g
        .nodes()
        .map(|u| stream(seed, StreamId::NodeRound { node: u.0, round }))
        .collect();

    // Step 1: advertisements, computed from round-start state.
    let ads: BTreeMap<NodeId, Tag> = g
        .nodes()
        .map(|u| (u, behavior.advertise(u, &states[u.index()])))
        .collect();

    // Step 2: proposals. Each node sees exactly its neighbors' tags, in
    // ascending neighbor order.
    let mut proposals: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for u in g.nodes() {
        let received: Vec<Tag> = g.neighbors(u).iter().map(|v| ads[v]).collect();
        if let Some(target) =
            behavior.select(u, &states[u.index()], &received, &mut rngs[u.index()])
        {
            if !received.iter().any(|t| t.uid == target) {
                return Err(EngineError::BehaviorViolation { node: u, chosen: target });
            }
            proposals.insert(u, target);
        }
    }

    // Step 3: forced acceptance, one per proposed-to node, resolved by the
    // policy with the target's own stream.
    let mut proposers_of: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (&proposer, &target) in &proposals {
        proposers_of.entry(target).or_default().push(proposer);
    }
    let mut accepted: Vec<(NodeId, NodeId)> = Vec::new();
    for (&target, proposers) in &proposers_of {
        let chosen = policy.choose(target, proposers, states, &mut rngs[target.index()]);
        if !proposers.contains(&chosen) {
            return Err(EngineError::PolicyViolation { target, chosen });
        }
        accepted.push((chosen, target));
    }
    accepted.sort_unstable();

    // Steps 4-5: each accepted pair communicates exactly once, in ascending
    // proposer order, seeing sets as already updated by earlier connections
    // this round.
    let mut transfers = Vec::new();
    for &(proposer, acceptor) in &accepted {
        let decision = behavior.communicate(
            proposer,
            &states[proposer.index()],
            acceptor,
            &states[acceptor.index()],
        );
        if let Some(t) = decision {
            states[t.to.index()].insert(t.token);
            registry.observe(&states[t.to.index()])?;
            transfers.push(t);
        }
    }

    Ok(RoundRecord {
        round,
        ads,
        proposals,
        accepted,
        transfers,
    })
}

/// Runs rounds until gossip is solved or `max_rounds` is reached.
///
/// Non-completion is reported through `completion: None`, never an error.
pub fn run_until_complete(
    g: &Graph,
    initial: &[BTreeSet<TokenId>],
    behavior: &dyn Behavior,
    policy: &dyn AcceptancePolicy,
    seed: u64,
    max_rounds: u32,
) -> Result<SyncTrace, EngineError> {
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

    let mut registry = crate::token::FingerprintRegistry::new();
    let mut states: Vec<TokenSet> = initial
        .iter()
        .map(|s| TokenSet::from_tokens(s.iter().copied()))
        .collect();
    for s in &states {
        registry.observe(s)?;
    }

    let solved = |states: &[TokenSet]| states.iter().all(|s| s.len() == k);

    let mut trace = SyncTrace {
        graph: g.clone(),
        initial: initial.to_vec(),
        rounds: Vec::new(),
        completion: None,
        seed,
    };
    if solved(&states) {
        trace.completion = Some(0);
        return Ok(trace);
    }
    for round in 1..=max_rounds {
        let record = run_round(g, &mut states, behavior, policy, &mut registry, seed, round)?;
        trace.rounds.push(record);
        if solved(&states) {
            trace.completion = Some(round);
            break;
        }
    }
    Ok(trace)
}

/// Looks up a built-in policy by its config name.
pub fn policy_by_name(name: &str) -> Option<Box<dyn AcceptancePolicy>> {
    match name {
        "first_by_id" => Some(Box::new(FirstById)),
        "uniform_random" => Some(Box::new(UniformAccept)),
        "adversarial_min_progress" => Some(Box::new(AdversarialMinProgress)),
        _ => None,
    }
}
