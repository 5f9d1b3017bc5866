use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use super::config::{ConfigError, SearchConfig};
use super::state::{BranchState, EventKind, OffEntry, OnEntry, TerminalEvent};
use crate::arith::{ceil_log, Rational};
use crate::bounds::{self, Ratios};
use crate::factor::{Factorization, Factorizer};
use crate::primes::{next_prime, PrimeRange};
use crate::valuation::{special_exponent_ok, SpecialPrimeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Apply the special-prime prune and early break. When off, the special
    /// prime is ignored entirely.
    pub special_pruning: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { special_pruning: true }
    }
}

/// How the expanded prime enters `S_on`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Moved from `S_off`; off primes are acceptable `σ` factors.
    FromOff,
    /// A fresh window prime; becomes the new floor.
    NewPrime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    Child(BranchState),
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("σ({p}^{a}) is not fully factored (cofactor {cofactor})")]
    Partial { p: BigUint, a: u32, cofactor: BigUint },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expansion {
    pub children: Vec<BranchState>,
    pub events: Vec<TerminalEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub branches: u64,
    pub counts: [u64; 8],
}

impl SearchStats {
    pub fn count(&self, kind: EventKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn record(&mut self, kind: EventKind) {
        self.counts[kind.index()] += 1;
    }

    pub fn absorb(&mut self, other: &SearchStats) {
        self.branches += other.branches;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    pub fn candidates(&self) -> u64 {
        self.count(EventKind::Candidate)
    }

    pub fn no_upper_bound(&self) -> u64 {
        self.count(EventKind::NoUpperBound)
    }

    pub fn inconclusive(&self) -> u64 {
        self.count(EventKind::Inconclusive)
    }

    /// No candidates, no missing upper bounds, no factoring gaps.
    pub fn is_clean(&self) -> bool {
        self.candidates() == 0 && self.no_upper_bound() == 0 && self.inconclusive() == 0
    }
}

pub struct Engine<'a, F: ?Sized> {
    cfg: &'a SearchConfig,
    factorizer: &'a F,
    options: EngineOptions,
}

impl<'a, F: Factorizer + ?Sized> Engine<'a, F> {
    pub fn new(cfg: &'a SearchConfig, factorizer: &'a F) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Engine { cfg, factorizer, options: EngineOptions::default() })
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    pub fn config(&self) -> &SearchConfig {
        self.cfg
    }

    pub fn root(&self) -> BranchState {
        self.cfg.root()
    }

    fn special(&self) -> Option<&SpecialPrimeSpec> {
        if self.options.special_pruning {
            self.cfg.special.as_ref()
        } else {
            None
        }
    }

    pub fn ratios(&self, state: &BranchState) -> Ratios {
        let (exact, floor) = state.bound_parts();
        bounds::ratios(&self.cfg.t_min, &self.cfg.t_max, &exact, &floor)
    }

    fn event(&self, kind: EventKind, state: &BranchState, ratios: &Ratios, detail: Option<String>) -> TerminalEvent {
        TerminalEvent { kind, state: state.clone(), ratios: ratios.clone(), detail }
    }

    /// Current exponent (exact or minimum) of the special prime.
    fn special_exponent(state: &BranchState, r: &BigUint) -> u64 {
        if let Some(e) = state.on_entry(r) {
            return e.e as u64;
        }
        state.s_off.iter().find(|e| e.p == *r).map_or(0, |e| e.b as u64)
    }

    /// One step of the search: either terminal events, or children in
    /// emission order (plus any diagnostics raised while building them).
    pub fn expand(&self, state: &BranchState) -> Expansion {
        let ratios = self.ratios(state);
        let terminal = |kind| Expansion {
            children: Vec::new(),
            events: alloc::vec![self.event(kind, state, &ratios, None)],
        };
        let k = self.cfg.k as usize;
        let known = state.known();
        let one = Rational::one();

        if known > k {
            return terminal(EventKind::TooManyPrimes);
        }
        if ratios.max < one {
            return terminal(EventKind::AbundancyTooLarge);
        }
        if ratios.max == one {
            return terminal(EventKind::ExactSolution);
        }
        match self.special() {
            None => {
                if state.s_on.len() == k {
                    let kind = if ratios.min > one { EventKind::AbundancyTooSmall } else { EventKind::Candidate };
                    return terminal(kind);
                }
            }
            Some(spec) => {
                let exp_r = Self::special_exponent(state, &spec.r);
                if known == k {
                    let kind = if special_exponent_ok(exp_r, self.cfg.k, state.special_sum) {
                        EventKind::Candidate
                    } else {
                        EventKind::SpecialPrune
                    };
                    return terminal(kind);
                }
                if known + 1 == k && ratios.min > one {
                    let high = bounds::upper_bound(&ratios.min, self.cfg.k, known as u32).expect("m > 1, k₁ < k");
                    if high > Rational::from_integer(spec.limit().into()) {
                        return terminal(EventKind::Candidate);
                    }
                    let s = state.special_sum + ceil_log(&spec.r, &high).expect("positive") + spec.delta as u64;
                    let kind = if special_exponent_ok(exp_r, self.cfg.k, s) {
                        EventKind::Candidate
                    } else {
                        EventKind::SpecialPrune
                    };
                    return terminal(kind);
                }
            }
        }

        let mut out = Expansion::default();
        if let Some(off) = state.s_off.iter().min_by(|x, y| x.p.cmp(&y.p)) {
            self.expand_off_prime(state, off, &ratios, &mut out);
        } else if ratios.min <= one {
            return terminal(EventKind::NoUpperBound);
        } else {
            self.expand_window(state, &ratios, &mut out);
        }
        for (i, child) in out.children.iter_mut().enumerate() {
            child.depth = state.depth + 1;
            child.branch_id = state.branch_id.clone();
            child.branch_id.push(i as u32);
        }
        out
    }

    /// Exponent ladder `a, a + 2, …` while `p^a ≤ B`, then the MIN child.
    /// Returns the first exponent past the cutoff.
    fn ladder(
        &self,
        state: &BranchState,
        p: &BigUint,
        start: u32,
        placement: Placement,
        ratios: &Ratios,
        out: &mut Expansion,
    ) -> u32 {
        let mut a = start;
        let mut power = num_traits::pow::pow(p.clone(), a as usize);
        let step = p * p;
        while power <= self.cfg.cutoff {
            let fz = self.factorizer.factor_sigma(p, a);
            match self.merge_sigma_factors(state, p, a, &fz, placement) {
                Ok(MergeOutcome::Child(c)) => out.children.push(c),
                Ok(MergeOutcome::Reject) => {}
                Err(e) => out.events.push(self.event(EventKind::Inconclusive, state, ratios, Some(format!("{e}")))),
            }
            a += 2;
            power *= &step;
        }
        a
    }

    fn expand_off_prime(&self, state: &BranchState, off: &OffEntry, ratios: &Ratios, out: &mut Expansion) {
        let start = off.b + off.b % 2;
        let a = self.ladder(state, &off.p, start, Placement::FromOff, ratios, out);
        let mut child = state.clone();
        child.s_off.retain(|e| e.p != off.p);
        child.s_on.push(OnEntry::min(off.p.clone(), a));
        out.children.push(child);
    }

    fn expand_window(&self, state: &BranchState, ratios: &Ratios, out: &mut Expansion) {
        let k = self.cfg.k;
        let known = state.known() as u32;
        let high = bounds::upper_bound(&ratios.min, k, known).expect("m > 1, k₁ < k");
        let low = bounds::lower_bound(&ratios.max, true).expect("M > 1");
        let floor = Rational::from_integer(state.floor.clone().into());
        let low = if floor > low { floor } else { low };
        let first = (low.floor().to_integer() + 1i32).to_biguint().expect("positive");
        let end = high.ceil().to_integer().to_biguint().unwrap_or_default();

        // the early-break test only depends on p through g(p)
        let early = self.special().and_then(|spec| {
            let limit = Rational::from_integer(spec.limit().into());
            if known + 2 != k || high > limit {
                return None;
            }
            let exp_r = Self::special_exponent(state, &spec.r);
            let base = state.special_sum + ceil_log(&spec.r, &high).expect("positive") + 2 * spec.delta as u64;
            Some((spec, limit, exp_r, base))
        });

        let mut visit = |p: &BigUint| -> bool {
            if state.in_on(p) {
                return true;
            }
            if let Some((spec, limit, exp_r, base)) = &early {
                let a = Rational::from_integer(p.clone().into());
                if let Ok(g) = bounds::second_prime_bound(&ratios.min, k, known, &a) {
                    if g <= *limit {
                        let s = base + ceil_log(&spec.r, &g).expect("positive");
                        if !special_exponent_ok(*exp_r, k, s) {
                            let detail = format!("early break at {p}");
                            out.events.push(self.event(EventKind::SpecialPrune, state, ratios, Some(detail)));
                            return false;
                        }
                    }
                }
            }
            let a = self.ladder(state, p, 2, Placement::NewPrime, ratios, out);
            let mut child = state.clone();
            child.s_on.push(OnEntry::min(p.clone(), a));
            child.floor = p.clone();
            child.special_sum += self.cfg.f_r(p);
            out.children.push(child);
            true
        };

        match (first.to_u64(), end.to_u64()) {
            (Some(lo), Some(hi)) => {
                for p in PrimeRange::new(lo, hi) {
                    if !visit(&BigUint::from(p)) {
                        break;
                    }
                }
            }
            _ => {
                let mut p = next_prime(&first);
                while p < end {
                    if !visit(&p) {
                        break;
                    }
                    p = next_prime(&(p + 1u32));
                }
            }
        }
    }

    fn accepts(&self, state: &BranchState, q: &BigUint, placement: Placement) -> bool {
        *q > state.floor
            || self.cfg.ignored.contains(q)
            || state.in_on(q)
            || (placement == Placement::FromOff && state.in_off(q))
    }

    /// Child for `v_p(n) = a` given the factorisation of `σ(p^a)`, or
    /// [`MergeOutcome::Reject`] if some factor `q ≤ P` is unaccounted for.
    ///
    /// A partial factorisation still rejects when a listed prime fails the
    /// test; otherwise it is an error.
    pub fn merge_sigma_factors(
        &self,
        state: &BranchState,
        p: &BigUint,
        a: u32,
        fz: &Factorization,
        placement: Placement,
    ) -> Result<MergeOutcome, EngineError> {
        if fz.primes().any(|q| !self.accepts(state, q, placement)) {
            return Ok(MergeOutcome::Reject);
        }
        if !fz.is_complete() {
            return Err(EngineError::Partial { p: p.clone(), a, cofactor: fz.cofactor.clone() });
        }
        let mut child = state.clone();
        match placement {
            Placement::FromOff => child.s_off.retain(|e| e.p != *p),
            Placement::NewPrime => {
                child.floor = p.clone();
                child.special_sum += self.cfg.f_r(p);
            }
        }
        child.s_on.push(OnEntry::exact(p.clone(), a));
        for (q, v) in &fz.factors {
            if self.cfg.ignored.contains(q) || child.in_on(q) {
                continue;
            }
            if let Some(entry) = child.s_off.iter_mut().find(|e| e.p == *q) {
                entry.b += v;
            } else {
                child.s_off.push(OffEntry { p: q.clone(), b: *v });
                child.special_sum += self.cfg.f_r(q);
            }
        }
        Ok(MergeOutcome::Child(child))
    }

    /// Sequential depth-first walk from the root. Events reach `sink` in
    /// `branch_id` order.
    pub fn run(&self, sink: impl FnMut(TerminalEvent)) -> SearchStats {
        self.run_from(self.root(), sink)
    }

    /// Sequential walk of the subtree below `state`.
    pub fn run_from(&self, state: BranchState, mut sink: impl FnMut(TerminalEvent)) -> SearchStats {
        let mut stats = SearchStats::default();
        let mut stack = alloc::vec![state];
        while let Some(state) = stack.pop() {
            stats.branches += 1;
            let Expansion { children, events } = self.expand(&state);
            for e in events {
                stats.record(e.kind);
                sink(e);
            }
            stack.extend(children.into_iter().rev());
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{abundancy_prime_power, ratio};
    use crate::factor::{FactorSource, MemoFactorizer, TierFactorizer, TierPolicy};
    use crate::search::ExponentKind;
    use alloc::vec;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn friend_cfg(k: u32, cutoff: u64, floor: u64) -> SearchConfig {
        SearchConfig::new(ratio(9, 5), k, vec![big(3)], big(cutoff), big(floor))
    }

    fn tiers() -> MemoFactorizer<TierFactorizer> {
        MemoFactorizer::new(TierFactorizer::new(TierPolicy::default()))
    }

    #[test]
    fn root_children_are_five_and_seven() {
        let cfg = friend_cfg(5, 1000, 4);
        let fz = tiers();
        let engine = Engine::new(&cfg, &fz).unwrap();
        let exp = engine.expand(&engine.root());
        assert!(exp.events.is_empty());
        let mut primes: Vec<u64> = exp.children.iter().map(|c| c.s_on[0].p.to_u64().unwrap()).collect();
        primes.dedup();
        assert_eq!(primes, [5, 7]);
        for (i, c) in exp.children.iter().enumerate() {
            assert_eq!(c.branch_id, [i as u32]);
            assert_eq!(c.depth, 1);
            assert_eq!(c.s_on[0].e % 2, 0);
        }
        // 5^2, 5^4 ≤ 1000 < 5^6; 7^2 ≤ 1000 < 7^4
        let last = exp.children.last().unwrap();
        assert_eq!(last.s_on[0], OnEntry::min(big(7), 4));
        assert_eq!(last.floor, big(7));
    }

    #[test]
    fn exact_solution_when_ratio_is_one() {
        let mut cfg = SearchConfig::new(ratio(31, 25), 1, vec![big(31)], big(1000), big(1));
        cfg.initial_on = vec![OnEntry::exact(big(5), 2)];
        let fz = tiers();
        let engine = Engine::new(&cfg, &fz).unwrap();
        let exp = engine.expand(&engine.root());
        assert_eq!(exp.events.len(), 1);
        assert_eq!(exp.events[0].kind, EventKind::ExactSolution);
        assert!(exp.events[0].ratios.max.is_one());
    }

    #[test]
    fn merge_examples() {
        let cfg = friend_cfg(8, 1000, 5);
        let fz = tiers();
        let engine = Engine::new(&cfg, &fz).unwrap();
        let mut state = engine.root();
        state.s_off.push(OffEntry { p: big(5), b: 2 });

        let child = |a: u32| match engine.merge_sigma_factors(&state, &big(5), a, &fz.factor_sigma(&big(5), a), Placement::FromOff) {
            Ok(MergeOutcome::Child(c)) => c,
            other => panic!("{other:?}"),
        };
        let c2 = child(2);
        assert_eq!(c2.s_on, [OnEntry::exact(big(5), 2)]);
        assert_eq!(c2.s_off, [OffEntry { p: big(31), b: 1 }]);
        assert_eq!(child(6).s_off, [OffEntry { p: big(19531), b: 1 }]);

        // σ(7^1) = 8: the factor 2 ≤ P = 5 is unaccounted for
        let eight = fz.factor(&big(8));
        assert_eq!(
            engine.merge_sigma_factors(&state, &big(7), 1, &eight, Placement::NewPrime),
            Ok(MergeOutcome::Reject)
        );
        // σ(2^1) = 3 is ignored
        let three = fz.factor(&big(3));
        match engine.merge_sigma_factors(&state, &big(2), 1, &three, Placement::NewPrime) {
            Ok(MergeOutcome::Child(c)) => assert_eq!(c.s_off.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn merge_adds_to_existing_off_exponent() {
        let cfg = friend_cfg(8, 1000, 5);
        let fz = tiers();
        let engine = Engine::new(&cfg, &fz).unwrap();
        let mut state = engine.root();
        state.s_off = vec![OffEntry { p: big(7), b: 2 }, OffEntry { p: big(31), b: 2 }];
        match engine.merge_sigma_factors(&state, &big(7), 2, &fz.factor_sigma(&big(7), 2), Placement::FromOff) {
            Ok(MergeOutcome::Child(c)) => {
                // σ(7^2) = 57 = 3·19
                assert_eq!(c.s_off, [OffEntry { p: big(31), b: 2 }, OffEntry { p: big(19), b: 1 }]);
                assert_eq!(c.s_on[0].kind, ExponentKind::Exact);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_factorisation_is_inconclusive() {
        let cfg = friend_cfg(8, 1000, 5);
        let fz = tiers();
        let engine = Engine::new(&cfg, &fz).unwrap();
        let state = engine.root();
        let n = big(1_000_003) * big(1_000_033);
        let partial = Factorization::from_parts(n.clone(), Vec::new(), n.clone(), FactorSource::Trial);
        assert!(matches!(
            engine.merge_sigma_factors(&state, &big(7), 2, &partial, Placement::NewPrime),
            Err(EngineError::Partial { .. })
        ));
        let with_two = Factorization::from_parts(n.clone() * 2u32, vec![(big(2), 1)], n, FactorSource::Trial);
        assert_eq!(
            engine.merge_sigma_factors(&state, &big(7), 2, &with_two, Placement::NewPrime),
            Ok(MergeOutcome::Reject)
        );
    }

    #[test]
    fn small_friend_of_ten_runs_are_clean() {
        let fz = tiers();
        for (k, cutoff) in [(5u32, 1_000u64), (6, 10_000_000)] {
            let cfg = friend_cfg(k, cutoff, 4);
            let engine = Engine::new(&cfg, &fz).unwrap();
            let mut ids = Vec::new();
            let stats = engine.run(|e| ids.push(e.state.branch_id));
            assert!(stats.is_clean(), "k = {k}: {stats:?}");
            assert!(ids.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tiny_cutoff_is_not_clean() {
        // with B = 10 nothing is expanded exactly, and the branch 5, 7, 11,
        // 13, 17 (all MIN) has m ≤ 1
        let fz = tiers();
        let cfg = friend_cfg(5, 10, 4);
        let engine = Engine::new(&cfg, &fz).unwrap();
        let stats = engine.run(|_| {});
        assert!(stats.candidates() > 0, "{stats:?}");
        assert_eq!(stats.no_upper_bound(), 0);
    }

    #[test]
    fn planted_square_is_found() {
        // n = 5²·13²·17²
        let fz = tiers();
        let t = abundancy_prime_power(&big(5), 2) * abundancy_prime_power(&big(13), 2) * abundancy_prime_power(&big(17), 2);
        let numer = t.numer().to_biguint().unwrap();
        let ignored: Vec<BigUint> = crate::factor::factor(&numer, &TierPolicy::default()).primes().cloned().collect();
        let cfg = SearchConfig::new(t, 3, ignored, big(17 * 17), big(4));
        let engine = Engine::new(&cfg, &fz).unwrap();
        let mut hits = 0;
        engine.run(|e| {
            if matches!(e.kind, EventKind::ExactSolution | EventKind::Candidate) {
                let exact: Vec<(u64, u32)> =
                    e.state.s_on.iter().map(|o| (o.p.to_u64().unwrap(), o.e)).collect();
                if exact.contains(&(5, 2)) && exact.contains(&(13, 2)) && exact.contains(&(17, 2)) {
                    hits += 1;
                }
            }
        });
        assert!(hits >= 1);
    }

    #[test]
    fn pruning_off_is_a_superset() {
        let fz = tiers();
        let mut cfg = friend_cfg(9, 100_000, 5);
        cfg.initial_on = vec![OnEntry::exact(big(5), 2), OnEntry::min(big(31), 96)];
        cfg.special = Some(SpecialPrimeSpec { r: big(31), l_exponent: 14, delta: 1 });
        let engine = Engine::new(&cfg, &fz).unwrap();
        let root = engine.root();
        let pruned = engine.expand(&root);
        let open = Engine::new(&cfg, &fz).unwrap().with_options(EngineOptions { special_pruning: false });
        let unpruned = open.expand(&root);
        assert!(unpruned.children.len() >= pruned.children.len());
    }
}
