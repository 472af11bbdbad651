//! Shared fixtures for the benchmark targets.

use std::collections::BTreeSet;

use mtm_core::TokenId;

/// k tokens spread round-robin over the first k nodes.
pub fn round_robin_seeding(n: usize, k: usize) -> Vec<BTreeSet<TokenId>> {
    let mut out = vec![BTreeSet::new(); n];
    for t in 0..k {
        out[t % n].insert(TokenId(t as u64));
    }
    out
}
