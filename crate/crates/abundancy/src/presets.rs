//! Run matrix for friends of 10 (`σ(n)/n = 9/5`).
//!
//! Rows are first expanded into [`Plan`]s, which fix the on primes, the
//! exponent being enumerated and the cutoff rule without factoring anything.
//! [`materialize`] then factors `σ(p^a)` to build the initial off sequence
//! and pick `B`.

use abundancy_core::arith::ratio;
use abundancy_core::factor::{trial_division, Factorization};
use abundancy_core::valuation::special_contribution;
use abundancy_core::{Factorizer, OffEntry, OnEntry, SearchConfig, SpecialPrimeSpec};
use num_bigint::BigUint;
use num_traits::Pow;
use thiserror::Error;

use crate::config::RunConfig;
use crate::factordb::builtin_lookup;
use crate::oracle::FactorPolicy;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresetError {
    #[error("unknown preset row {0:?} (known: {1})")]
    UnknownRow(String, String),
    #[error("{name}: no cutoff rule for {count} initial off primes")]
    NoCutoff { name: String, count: usize },
    #[error("{name}: built-in fact missing for σ({p}^{a})")]
    MissingFact { name: String, p: u64, a: u32 },
}

/// How `B` is chosen for one config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cutoff {
    /// `10^e`.
    Fixed(u32),
    /// `10^e` from `at_least = (c, e)` when `|S_off| ≥ c`, else from the
    /// `exact` entry for `|S_off|`. Counts below every entry take the
    /// largest `e`.
    ByOffCount { at_least: (usize, u32), exact: Vec<(usize, u32)> },
}

impl Cutoff {
    fn exponent(&self, count: usize) -> Option<u32> {
        match self {
            Cutoff::Fixed(e) => Some(*e),
            Cutoff::ByOffCount { at_least, exact } => {
                if count >= at_least.0 {
                    return Some(at_least.1);
                }
                let smallest = exact.iter().map(|(c, _)| *c).min().unwrap_or(at_least.0);
                if count < smallest {
                    // partial seed with fewer listed primes than any rule covers
                    return exact.iter().chain([at_least]).map(|(_, e)| *e).max();
                }
                exact.iter().find(|(c, _)| *c == count).map(|(_, e)| *e)
            }
        }
    }
}

/// How the initial off sequence is obtained from `σ(p^a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffSource {
    Factor,
    /// Trial division only, to this limit.
    TrialDivision(u64),
    /// The shipped FactorDB fact.
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub name: String,
    pub k: u32,
    pub on: Vec<OnEntry>,
    /// `(p, a)` whose `σ(p^a)` seeds `S_off`; `None` leaves it empty.
    pub seed: Option<(u64, u32, OffSource)>,
    pub cutoff: Cutoff,
    pub special: Option<SpecialPrimeSpec>,
    pub long_run: bool,
}

impl Plan {
    /// The exponent of 5 in the initial on sequence, if fixed exactly.
    pub fn exponent_of_five(&self) -> Option<u32> {
        self.on.iter().find(|e| e.p == BigUint::from(5u32)).map(|e| e.e)
    }
}

pub struct Row {
    pub id: &'static str,
    pub summary: &'static str,
    pub long_run: bool,
}

pub const ROWS: &[Row] = &[
    Row { id: "k5", summary: "k = 5, empty S_on, B = 10^3", long_run: false },
    Row { id: "k6", summary: "k = 6, empty S_on, B = 10^7", long_run: false },
    Row { id: "k7", summary: "k = 7, empty S_on, B = 10^14", long_run: false },
    Row { id: "k8", summary: "k = 8, a_5 = a ≤ 50", long_run: false },
    Row { id: "k9-5-31", summary: "k = 9, a_5 = 2, a_31 = a ≤ 94", long_run: true },
    Row { id: "k9-5-31-special", summary: "k = 9, a_5 = 2, b_31 = 96, r = 31", long_run: true },
    Row { id: "k9-5-19531", summary: "k = 9, a_5 = 6, a_19531 = a ≤ 86", long_run: true },
    Row { id: "k9-5-19531-special", summary: "k = 9, a_5 = 6, b_19531 = 88, r = 19531", long_run: true },
    Row { id: "k9-5-a4", summary: "k = 9, a_5 = 4, B = 10^18", long_run: true },
    Row { id: "k9-5-a8", summary: "k = 9, a_5 = 8, B = 10^11", long_run: true },
    Row { id: "k9-5-a10", summary: "k = 9, a_5 = 10, B = 10^29", long_run: true },
    Row { id: "k9-5-a12", summary: "k = 9, a_5 = 12, B = 10^29", long_run: true },
    Row { id: "k9-5-a46", summary: "k = 9, a_5 = 46, B = 10^29", long_run: true },
    Row { id: "k9-5-a14-64", summary: "k = 9, a_5 = a ∈ [14, 64], a ≠ 46", long_run: true },
];

/// Group ids accepted besides the row ids.
pub const GROUPS: &[(&str, &[&str])] = &[
    ("small", &["k5", "k6", "k7"]),
    (
        "k9",
        &[
            "k9-5-31",
            "k9-5-31-special",
            "k9-5-19531",
            "k9-5-19531-special",
            "k9-5-a4",
            "k9-5-a8",
            "k9-5-a10",
            "k9-5-a12",
            "k9-5-a46",
            "k9-5-a14-64",
        ],
    ),
    ("all", &[
        "k5",
        "k6",
        "k7",
        "k8",
        "k9-5-31",
        "k9-5-31-special",
        "k9-5-19531",
        "k9-5-19531-special",
        "k9-5-a4",
        "k9-5-a8",
        "k9-5-a10",
        "k9-5-a12",
        "k9-5-a46",
        "k9-5-a14-64",
    ]),
];

const FIVE: u64 = 5;
const TRIAL_2_31: u64 = 1 << 31;

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn evens(lo: u32, hi: u32) -> impl Iterator<Item = u32> {
    (lo..=hi).filter(|a| a % 2 == 0)
}

fn plain(name: String, k: u32, cutoff: u32) -> Plan {
    Plan { name, k, on: Vec::new(), seed: None, cutoff: Cutoff::Fixed(cutoff), special: None, long_run: k >= 9 }
}

fn row_plans(id: &str) -> Option<Vec<Plan>> {
    let name = |suffix: &str| format!("table1:{id}{suffix}");
    let two_prime = Cutoff::ByOffCount { at_least: (3, 5), exact: vec![(2, 11), (1, 18)] };
    let plans = match id {
        "k5" => vec![plain(name(""), 5, 3)],
        "k6" => vec![plain(name(""), 6, 7)],
        "k7" => vec![plain(name(""), 7, 14)],
        "k8" => evens(2, 50)
            .map(|a| {
                let cutoff = match a {
                    2 => Cutoff::Fixed(16),
                    4 => Cutoff::Fixed(11),
                    6 => Cutoff::Fixed(17),
                    8 => Cutoff::Fixed(6),
                    _ => Cutoff::ByOffCount { at_least: (3, 3), exact: vec![(2, 7), (1, 14)] },
                };
                Plan {
                    name: name(&format!(":a{a}")),
                    k: 8,
                    on: vec![OnEntry::exact(big(FIVE), a)],
                    seed: Some((FIVE, a, OffSource::Factor)),
                    cutoff,
                    special: None,
                    long_run: false,
                }
            })
            .collect(),
        "k9-5-31" => evens(2, 94)
            .map(|a| Plan {
                name: name(&format!(":a{a}")),
                k: 9,
                on: vec![OnEntry::exact(big(FIVE), 2), OnEntry::exact(big(31), a)],
                seed: Some((31, a, OffSource::Factor)),
                cutoff: two_prime.clone(),
                special: None,
                long_run: true,
            })
            .collect(),
        "k9-5-31-special" => vec![Plan {
            name: name(""),
            k: 9,
            on: vec![OnEntry::exact(big(FIVE), 2), OnEntry::min(big(31), 96)],
            seed: None,
            cutoff: Cutoff::Fixed(16),
            special: Some(SpecialPrimeSpec { r: big(31), l_exponent: 14, delta: 1 }),
            long_run: true,
        }],
        "k9-5-19531" => evens(2, 86)
            .map(|a| {
                let source = match a {
                    58 | 72 => OffSource::Builtin,
                    30.. => OffSource::TrialDivision(TRIAL_2_31),
                    _ => OffSource::Factor,
                };
                Plan {
                    name: name(&format!(":a{a}")),
                    k: 9,
                    on: vec![OnEntry::exact(big(FIVE), 6), OnEntry::exact(big(19531), a)],
                    seed: Some((19531, a, source)),
                    cutoff: two_prime.clone(),
                    special: None,
                    long_run: true,
                }
            })
            .collect(),
        "k9-5-19531-special" => vec![Plan {
            name: name(""),
            k: 9,
            on: vec![OnEntry::exact(big(FIVE), 6), OnEntry::min(big(19531), 88)],
            seed: None,
            cutoff: Cutoff::Fixed(17),
            special: Some(SpecialPrimeSpec { r: big(19531), l_exponent: 6, delta: 1 }),
            long_run: true,
        }],
        "k9-5-a4" | "k9-5-a8" | "k9-5-a10" | "k9-5-a12" | "k9-5-a46" => {
            let a: u32 = id.trim_start_matches("k9-5-a").parse().expect("literal");
            let cutoff = match a {
                4 => 18,
                8 => 11,
                _ => 29,
            };
            vec![Plan {
                name: name(""),
                k: 9,
                on: vec![OnEntry::exact(big(FIVE), a)],
                seed: Some((FIVE, a, OffSource::Factor)),
                cutoff: Cutoff::Fixed(cutoff),
                special: None,
                long_run: true,
            }]
        }
        "k9-5-a14-64" => evens(14, 64)
            .filter(|&a| a != 46)
            .map(|a| Plan {
                name: name(&format!(":a{a}")),
                k: 9,
                on: vec![OnEntry::exact(big(FIVE), a)],
                seed: Some((FIVE, a, OffSource::Factor)),
                cutoff: Cutoff::ByOffCount { at_least: (4, 4), exact: vec![(3, 7), (2, 14)] },
                special: None,
                long_run: true,
            })
            .collect(),
        _ => return None,
    };
    Some(plans)
}

/// Plans for a row id or group id, in table order.
pub fn plan(id: &str) -> Result<Vec<Plan>, PresetError> {
    let id = id.strip_prefix("table1:").unwrap_or(id);
    if let Some((_, members)) = GROUPS.iter().find(|(g, _)| *g == id) {
        return Ok(members.iter().flat_map(|m| row_plans(m).expect("group member")).collect());
    }
    row_plans(id).ok_or_else(|| {
        let known: Vec<&str> = ROWS.iter().map(|r| r.id).chain(GROUPS.iter().map(|g| g.0)).collect();
        PresetError::UnknownRow(id.into(), known.join(", "))
    })
}

/// The factorisation used to seed `S_off` for a plan.
pub fn seed_factorization<F: Factorizer + ?Sized>(
    plan: &Plan,
    oracle: &F,
) -> Result<Option<Factorization>, PresetError> {
    let Some((p, a, source)) = plan.seed else {
        return Ok(None);
    };
    let fz = match source {
        OffSource::Factor => oracle.factor_sigma(&big(p), a),
        OffSource::TrialDivision(limit) => {
            trial_division(&abundancy_core::arith::geometric_sum(&big(p), a), limit)
        }
        OffSource::Builtin => {
            let n = abundancy_core::arith::geometric_sum(&big(p), a);
            builtin_lookup(&n).ok_or_else(|| PresetError::MissingFact { name: plan.name.clone(), p, a })?
        }
    };
    Ok(Some(fz))
}

/// Off sequence from a seed: the distinct primes `q > 5` with `b_q = v_q`.
/// For a partial factorisation only the listed primes are used.
pub fn off_sequence(fz: &Factorization) -> Vec<OffEntry> {
    fz.factors
        .iter()
        .filter(|(q, _)| *q > big(FIVE))
        .map(|(q, e)| OffEntry { p: q.clone(), b: *e })
        .collect()
}

pub fn materialize<F: Factorizer + ?Sized>(
    plan: &Plan,
    oracle: &F,
    policy: &FactorPolicy,
) -> Result<RunConfig, PresetError> {
    let initial_off = match seed_factorization(plan, oracle)? {
        Some(fz) => {
            if !fz.is_complete() {
                log::warn!("{}: σ seed only partially factored; using the {} listed primes", plan.name, fz.factors.len());
            }
            off_sequence(&fz)
        }
        None => Vec::new(),
    };
    let e = plan
        .cutoff
        .exponent(initial_off.len())
        .ok_or_else(|| PresetError::NoCutoff { name: plan.name.clone(), count: initial_off.len() })?;
    let mut search = SearchConfig::new(ratio(9, 5), plan.k, vec![big(3)], big(10).pow(e), big(if plan.k <= 7 { 4 } else { 5 }));
    search.initial_on = plan.on.clone();
    search.initial_off = initial_off;
    if let Some(spec) = &plan.special {
        search.initial_f_r = search
            .initial_on
            .iter()
            .map(|e| &e.p)
            .chain(search.initial_off.iter().map(|e| &e.p))
            .map(|q| (q.clone(), special_contribution(q, &spec.r)))
            .collect();
        search.special = Some(spec.clone());
    }
    Ok(RunConfig { name: plan.name.clone(), search, factor_policy: policy.clone(), long_run: plan.long_run })
}

/// Plans and materialises a row in one go.
pub fn preset_table1<F: Factorizer + ?Sized>(
    id: &str,
    oracle: &F,
    policy: &FactorPolicy,
) -> Result<Vec<RunConfig>, PresetError> {
    plan(id)?.iter().map(|p| materialize(p, oracle, policy)).collect()
}
