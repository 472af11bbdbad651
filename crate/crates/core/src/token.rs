//! Tokens, token sets, fingerprints, and advertisement tags.
//!
//! A token is an opaque identifier; nodes compare sets only through a 64-bit
//! fingerprint. Fingerprints are an order-independent XOR of strong per-token
//! mixes, so they can be maintained incrementally. Equality of fingerprints
//! is *assumed* to mean equality of sets; the [`FingerprintRegistry`] turns
//! that assumption into a run-time check and aborts the run on a collision.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::graph::NodeId;
use crate::rng::mix64;

/// Opaque token identifier, unique per token across a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The advertised triple: set fingerprint, set size, advertiser id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag {
    pub fingerprint: u64,
    pub size: usize,
    pub uid: NodeId,
}

/// A node's token set with its maintained fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSet {
    tokens: BTreeSet<TokenId>,
    fingerprint: u64,
}

impl TokenSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens(tokens: impl IntoIterator<Item = TokenId>) -> Self {
        let mut set = Self::new();
        for t in tokens {
            set.insert(t);
        }
        set
    }

    /// Inserts a token; returns false if it was already present.
    pub fn insert(&mut self, token: TokenId) -> bool {
        let added = self.tokens.insert(token);
        if added {
            self.fingerprint ^= mix64(token.0);
        }
        added
    }

    pub fn contains(&self, token: TokenId) -> bool {
        self.tokens.contains(&token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.tokens.iter().copied()
    }

    pub fn tokens(&self) -> &BTreeSet<TokenId> {
        &self.tokens
    }

    /// The current advertisement for this set.
    pub fn tag(&self, uid: NodeId) -> Tag {
        Tag {
            fingerprint: self.fingerprint,
            size: self.tokens.len(),
            uid,
        }
    }

    /// Smallest token the peer holds that this set lacks.
    pub fn smallest_missing_from(&self, other: &TokenSet) -> Option<TokenId> {
        other.iter().find(|&t| !self.contains(t))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("fingerprint collision: {fingerprint:#018x} covers two distinct token sets")]
pub struct FingerprintCollision {
    pub fingerprint: u64,
}

/// Run-scoped registry asserting that distinct materialized sets never share
/// a fingerprint. A detected collision invalidates the whole run.
#[derive(Debug, Default)]
pub struct FingerprintRegistry {
    seen: HashMap<u64, BTreeSet<TokenId>>,
}

impl FingerprintRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, set: &TokenSet) -> Result<(), FingerprintCollision> {
        match self.seen.get(&set.fingerprint) {
            Some(prev) if prev != &set.tokens => Err(FingerprintCollision {
                fingerprint: set.fingerprint,
            }),
            Some(_) => Ok(()),
            None => {
                self.seen.insert(set.fingerprint, set.tokens.clone());
                Ok(())
            }
        }
    }

    pub fn distinct_sets(&self) -> usize {
        self.seen.len()
    }
}
