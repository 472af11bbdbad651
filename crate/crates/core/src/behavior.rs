//! The random diffusion gossip behavior shared by both engines, and the
//! contract any algorithm must satisfy to run on them.
//!
//! A node advertises `⟨fingerprint, size, id⟩`, proposes to a uniformly
//! random neighbor among those advertising a *different* fingerprint at the
//! *smallest* advertised size, and on connection moves exactly one token
//! from the set difference.

use rand::{Rng, RngCore};

use crate::graph::NodeId;
use crate::token::{Tag, TokenId, TokenSet};

/// One applied token movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub from: NodeId,
    pub to: NodeId,
    pub token: TokenId,
}

/// Contract for algorithms driven by the engines.
///
/// `select` must return an advertiser present in `ads` (the engines verify
/// this). `communicate` decides the token movement for an established
/// connection; the engine applies it.
pub trait Behavior {
    fn advertise(&self, node: NodeId, set: &TokenSet) -> Tag;

    fn select(
        &self,
        node: NodeId,
        set: &TokenSet,
        ads: &[Tag],
        rng: &mut dyn RngCore,
    ) -> Option<NodeId>;

    fn communicate(
        &self,
        proposer: NodeId,
        proposer_set: &TokenSet,
        acceptor: NodeId,
        acceptor_set: &TokenSet,
    ) -> Option<Transfer>;

    /// The candidate set a `select` call draws from, recorded into traces so
    /// offline analysis can replay selection decisions. The default is the
    /// diffusion rule's candidate set.
    fn candidates(&self, _node: NodeId, set: &TokenSet, ads: &[Tag]) -> Vec<NodeId> {
        select_candidates(set.fingerprint(), ads)
    }
}

/// The candidate set: advertisers with a differing fingerprint at the
/// minimum differing size, ascending by id.
pub fn select_candidates(own_fingerprint: u64, ads: &[Tag]) -> Vec<NodeId> {
    let min_size = ads
        .iter()
        .filter(|t| t.fingerprint != own_fingerprint)
        .map(|t| t.size)
        .min();
    let Some(min_size) = min_size else {
        return Vec::new();
    };
    let mut out: Vec<NodeId> = ads
        .iter()
        .filter(|t| t.fingerprint != own_fingerprint && t.size == min_size)
        .map(|t| t.uid)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Uniform draw over the candidate set; `None` when every advertisement
/// carries the node's own fingerprint (the minimum over an empty set is
/// undefined, so the node abstains).
pub fn select_uniform(
    own_fingerprint: u64,
    ads: &[Tag],
    rng: &mut dyn RngCore,
) -> Option<NodeId> {
    let candidates = select_candidates(own_fingerprint, ads);
    if candidates.is_empty() {
        return None;
    }
    let idx = rng.gen_range(0..candidates.len());
    Some(candidates[idx])
}

/// The one-token communicate rule.
///
/// The token flows toward the endpoint with the smaller set (ties toward the
/// acceptor) and is the smallest-id token the receiver is missing. Equal
/// fingerprints mean a stale connection; nothing moves.
pub fn transfer_decision(
    proposer: NodeId,
    proposer_set: &TokenSet,
    acceptor: NodeId,
    acceptor_set: &TokenSet,
) -> Option<Transfer> {
    if proposer_set.fingerprint() == acceptor_set.fingerprint() {
        return None;
    }
    let acceptor_receives = acceptor_set.len() <= proposer_set.len();
    let (from, from_set, to, to_set) = if acceptor_receives {
        (proposer, proposer_set, acceptor, acceptor_set)
    } else {
        (acceptor, acceptor_set, proposer, proposer_set)
    };
    let token = to_set.smallest_missing_from(from_set)?;
    Some(Transfer { from, to, token })
}

/// Random diffusion gossip.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomDiffusion;

impl Behavior for RandomDiffusion {
    fn advertise(&self, node: NodeId, set: &TokenSet) -> Tag {
        set.tag(node)
    }

    fn select(
        &self,
        _node: NodeId,
        set: &TokenSet,
        ads: &[Tag],
        rng: &mut dyn RngCore,
    ) -> Option<NodeId> {
        select_uniform(set.fingerprint(), ads, rng)
    }

    fn communicate(
        &self,
        proposer: NodeId,
        proposer_set: &TokenSet,
        acceptor: NodeId,
        acceptor_set: &TokenSet,
    ) -> Option<Transfer> {
        transfer_decision(proposer, proposer_set, acceptor, acceptor_set)
    }
}
