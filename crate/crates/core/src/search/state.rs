use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;

use crate::bounds::Ratios;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExponentKind {
    /// `v_p(n) = e`
    Exact,
    /// `v_p(n) ≥ e`
    Min,
}

impl ExponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExponentKind::Exact => "exact",
            ExponentKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OnEntry {
    pub p: BigUint,
    pub kind: ExponentKind,
    pub e: u32,
}

impl OnEntry {
    pub fn exact(p: BigUint, e: u32) -> Self {
        OnEntry { p, kind: ExponentKind::Exact, e }
    }

    pub fn min(p: BigUint, e: u32) -> Self {
        OnEntry { p, kind: ExponentKind::Min, e }
    }
}

/// A known prime factor with minimum exponent `b`, not yet expanded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OffEntry {
    pub p: BigUint,
    pub b: u32,
}

/// One node of the search tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchState {
    pub s_on: Vec<OnEntry>,
    pub s_off: Vec<OffEntry>,
    /// Every prime factor outside `s_on ∪ s_off` exceeds this.
    pub floor: BigUint,
    pub depth: u32,
    /// Child indices from the root; lexicographic order is DFS order.
    pub branch_id: Vec<u32>,
    /// Running `Σ f_r(q)` over `s_on ∪ s_off` when a special prime `r` is set.
    pub special_sum: u64,
}

impl BranchState {
    pub fn known(&self) -> usize {
        self.s_on.len() + self.s_off.len()
    }

    pub fn on_entry(&self, p: &BigUint) -> Option<&OnEntry> {
        self.s_on.iter().find(|e| e.p == *p)
    }

    pub fn in_on(&self, p: &BigUint) -> bool {
        self.s_on.iter().any(|e| e.p == *p)
    }

    pub fn in_off(&self, p: &BigUint) -> bool {
        self.s_off.iter().any(|e| e.p == *p)
    }

    /// `(exact, floor)` parts for the bound calculus: exact on primes, then
    /// minimum-exponent on primes and all off primes.
    pub fn bound_parts(&self) -> (Vec<(BigUint, u32)>, Vec<(BigUint, u32)>) {
        let mut exact = Vec::new();
        let mut floor = Vec::new();
        for e in &self.s_on {
            match e.kind {
                ExponentKind::Exact => exact.push((e.p.clone(), e.e)),
                ExponentKind::Min => floor.push((e.p.clone(), e.e)),
            }
        }
        floor.extend(self.s_off.iter().map(|e| (e.p.clone(), e.b)));
        (exact, floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    TooManyPrimes,
    AbundancyTooLarge,
    ExactSolution,
    AbundancyTooSmall,
    Candidate,
    NoUpperBound,
    SpecialPrune,
    /// A required `σ(p^a)` could not be factored completely; the branch was
    /// abandoned and the run cannot rule it out.
    Inconclusive,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::TooManyPrimes,
        EventKind::AbundancyTooLarge,
        EventKind::ExactSolution,
        EventKind::AbundancyTooSmall,
        EventKind::Candidate,
        EventKind::NoUpperBound,
        EventKind::SpecialPrune,
        EventKind::Inconclusive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::TooManyPrimes => "TOO_MANY_PRIMES",
            EventKind::AbundancyTooLarge => "ABUNDANCY_TOO_LARGE",
            EventKind::ExactSolution => "EXACT_SOLUTION",
            EventKind::AbundancyTooSmall => "ABUNDANCY_TOO_SMALL",
            EventKind::Candidate => "CANDIDATE",
            EventKind::NoUpperBound => "NO_UPPER_BOUND",
            EventKind::SpecialPrune => "SPECIAL_PRUNE",
            EventKind::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    /// Events that leave a branch un-refuted.
    pub fn is_open(self) -> bool {
        matches!(self, EventKind::Candidate | EventKind::NoUpperBound | EventKind::Inconclusive)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalEvent {
    pub kind: EventKind,
    pub state: BranchState,
    pub ratios: Ratios,
    pub detail: Option<String>,
}
