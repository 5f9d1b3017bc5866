//! Depth-first factor-chain search.
//!
//! A node of the tree ([`BranchState`]) records the *on* primes, whose
//! exponents are settled (exactly, or as a lower bound), the *off* primes,
//! which are known to divide `n` but still await expansion, and a floor `P`
//! below which every other prime factor of `n` has already been accounted
//! for. [`Engine::expand`] turns one node into its children or a terminal
//! [`TerminalEvent`]; [`Engine::run`] walks the whole tree sequentially.

mod config;
mod engine;
mod state;

pub use config::{ConfigError, SearchConfig};
pub use engine::{Engine, EngineError, EngineOptions, Expansion, MergeOutcome, Placement, SearchStats};
pub use state::{BranchState, EventKind, ExponentKind, OffEntry, OnEntry, TerminalEvent};
