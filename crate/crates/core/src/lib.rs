//! Deterministic desk-scale simulation of random diffusion gossip in the
//! mobile telephone model (MTM) and its asynchronous variant (aMTM).
//!
//! The crate is organized around six pieces:
//!
//! - [`graph`]: immutable topologies, generators (including the star-clique
//!   lower-bound family), exact vertex expansion, and maximum bipartite
//!   matchings.
//! - [`token`] and [`behavior`]: token sets with collision-checked
//!   fingerprints, and the diffusion algorithm itself (advertise / select /
//!   one-token communicate).
//! - [`sync`]: the synchronous round engine: advertise, propose,
//!   adversarially accept, connect, communicate.
//! - [`amtm`]: the discrete-event asynchronous engine with adversarial
//!   delays bounded by `δ_update`, `δ_conn`, and a minimum bit rate.
//! - [`analysis`]: offline reconstruction of the analytic quantities
//!   (size profiles, productive subgraphs, matching bounds) and
//!   machine-checked trace invariants.
//! - [`harness`]: configuration-driven experiment runner with seed and
//!   parameter sweeps emitting CSV.
//!
//! Every run is a pure function of its configuration and seed: same inputs,
//! bit-identical traces.

pub mod amtm;
pub mod analysis;
pub mod behavior;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod sync;
pub mod token;
pub mod trace;

pub use amtm::{AsyncTrace, DelayAdversary, DelayBounds, EventKind, Ticks, TraceEvent};
pub use analysis::{Budget, InvariantReport, SizeProfile, Snapshot};
pub use behavior::{Behavior, RandomDiffusion, Transfer};
pub use graph::{Cut, Frac, Graph, GraphError, NodeId, StarClique};
pub use harness::{ExperimentConfig, RunOutcome, RunResult, SweepRow};
pub use sync::{AcceptancePolicy, EngineError, RoundRecord, SyncTrace};
pub use token::{FingerprintRegistry, Tag, TokenId, TokenSet};
