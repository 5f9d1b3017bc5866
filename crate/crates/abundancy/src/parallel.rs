//! Parallel tree walk.
//!
//! Subtrees above `split_depth` are expanded on the rayon pool and their
//! results concatenated in child order, so the event sequence equals the
//! sequential one.

use abundancy_core::{BranchState, Engine, Factorizer, SearchStats, TerminalEvent};
use rayon::prelude::*;

pub struct Walk {
    pub events: Vec<TerminalEvent>,
    pub stats: SearchStats,
}

/// Walks the subtree below `state`, keeping the events accepted by `keep`.
pub fn explore<F, K>(engine: &Engine<'_, F>, state: BranchState, split_depth: u32, keep: &K) -> Walk
where
    F: Factorizer + Sync + ?Sized,
    K: Fn(&TerminalEvent) -> bool + Sync,
{
    if state.depth >= split_depth {
        let mut events = Vec::new();
        let stats = engine.run_from(state, |e| {
            if keep(&e) {
                events.push(e)
            }
        });
        return Walk { events, stats };
    }
    let expansion = engine.expand(&state);
    let mut stats = SearchStats { branches: 1, ..SearchStats::default() };
    let mut events = Vec::new();
    for e in expansion.events {
        stats.record(e.kind);
        if keep(&e) {
            events.push(e);
        }
    }
    let walks: Vec<Walk> =
        expansion.children.into_par_iter().map(|child| explore(engine, child, split_depth, keep)).collect();
    for walk in walks {
        stats.absorb(&walk.stats);
        events.extend(walk.events);
    }
    Walk { events, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use abundancy_core::arith::ratio;
    use abundancy_core::{SearchConfig, TierFactorizer, TierPolicy};
    use num_bigint::BigUint;

    #[test]
    fn matches_sequential_order() {
        let cfg = SearchConfig::new(ratio(9, 5), 5, vec![BigUint::from(3u32)], BigUint::from(10u32), BigUint::from(4u32));
        let fz = TierFactorizer::new(TierPolicy::default());
        let engine = Engine::new(&cfg, &fz).unwrap();
        let mut seq = Vec::new();
        let seq_stats = engine.run(|e| seq.push(e));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let walk = pool.install(|| explore(&engine, engine.root(), 3, &|_: &TerminalEvent| true));
        assert_eq!(walk.events, seq);
        assert_eq!(walk.stats, seq_stats);
    }
}
