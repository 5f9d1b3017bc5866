//! Tiered integer factorisation.
//!
//! [`factor`] runs trial division, then (if allowed) Pollard rho with Brent's
//! cycle detection, Pollard `p − 1` and the elliptic-curve method. Whatever is still composite
//! afterwards is reported as the cofactor of a [`FactorStatus::Partial`]
//! result. Caching and remote lookups are layered on top by implementors of
//! [`Factorizer`] outside this crate.

mod cyclotomic;
mod ecm;
mod rho;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::geometric_sum;
use crate::primes::{self, Primality, PrimeRange};

pub use cyclotomic::{cyclotomic_value, sigma_cyclotomic_parts};
pub use ecm::ecm_big;
pub use rho::{pm1_big, rho_big, rho_u64};

/// Trial division below this bound uses a prime table built once per
/// factorizer; beyond it primes are produced by a segmented sieve.
const TABLE_LIMIT: u32 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorStatus {
    Complete,
    Partial,
}

/// Which tier produced a factorisation. Ordered by how far down the tier
/// chain a result had to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorSource {
    Trial,
    General,
    Cache,
    FactorDb,
}

impl FactorSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorSource::Trial => "trial",
            FactorSource::General => "general",
            FactorSource::Cache => "cache",
            FactorSource::FactorDb => "factordb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "trial" => FactorSource::Trial,
            "general" => FactorSource::General,
            "cache" => FactorSource::Cache,
            "factordb" => FactorSource::FactorDb,
            _ => return None,
        })
    }
}

/// A tier that was attempted and failed (for example a network error).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierFailure {
    pub source: FactorSource,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("factors multiply to {product}, expected {n}")]
    ProductMismatch { n: BigUint, product: BigUint },
    #[error("listed factor {0} is not prime")]
    NotPrime(BigUint),
    #[error("factors are not strictly increasing")]
    Unordered,
    #[error("status does not match cofactor")]
    StatusMismatch,
}

/// `n = ∏ p^e × cofactor` with strictly increasing primes `p`.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub n: BigUint,
    pub status: FactorStatus,
    pub factors: Vec<(BigUint, u32)>,
    pub cofactor: BigUint,
    pub source: FactorSource,
    /// Some listed prime is only a strong probable prime.
    pub probable: bool,
    pub failures: Vec<TierFailure>,
}

/// Content equality: metadata (`source`, `probable`, `failures`) is ignored.
impl PartialEq for Factorization {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.status == other.status
            && self.factors == other.factors
            && self.cofactor == other.cofactor
    }
}

impl Eq for Factorization {}

impl Factorization {
    /// Normalises `factors` (sorts, merges repeats) and derives the status
    /// from the cofactor.
    pub fn from_parts(
        n: BigUint,
        mut factors: Vec<(BigUint, u32)>,
        cofactor: BigUint,
        source: FactorSource,
    ) -> Self {
        factors.sort();
        let mut merged: Vec<(BigUint, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let status = if cofactor.is_one() { FactorStatus::Complete } else { FactorStatus::Partial };
        Factorization {
            n,
            status,
            factors: merged,
            cofactor,
            source,
            probable: false,
            failures: Vec::new(),
        }
    }

    pub fn unit() -> Self {
        Self::from_parts(BigUint::one(), Vec::new(), BigUint::one(), FactorSource::Trial)
    }

    pub fn is_complete(&self) -> bool {
        self.status == FactorStatus::Complete
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    /// Exponent of `q` among the listed factors (0 if absent).
    pub fn exponent_of(&self, q: &BigUint) -> u32 {
        self.factors.iter().find(|(p, _)| p == q).map_or(0, |(_, e)| *e)
    }

    pub fn product(&self) -> BigUint {
        self.factors
            .iter()
            .fold(self.cofactor.clone(), |acc, (p, e)| acc * num_traits::pow::pow(p.clone(), *e as usize))
    }

    /// Checks every structural invariant, including primality of the
    /// listed factors.
    pub fn check(&self) -> Result<(), FactorError> {
        let product = self.product();
        if product != self.n {
            return Err(FactorError::ProductMismatch { n: self.n.clone(), product });
        }
        if self.factors.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(FactorError::Unordered);
        }
        for (p, _) in &self.factors {
            if !primes::is_prime(p) {
                return Err(FactorError::NotPrime(p.clone()));
            }
        }
        if self.is_complete() != self.cofactor.is_one() {
            return Err(FactorError::StatusMismatch);
        }
        Ok(())
    }

    /// Stitches factorisations of pairwise products into one for `n`.
    pub fn combine(n: BigUint, parts: Vec<Factorization>) -> Self {
        let mut factors = Vec::new();
        let mut cofactor = BigUint::one();
        let mut source = FactorSource::Trial;
        let mut probable = false;
        let mut failures = Vec::new();
        for part in parts {
            factors.extend(part.factors);
            cofactor *= part.cofactor;
            source = source.max(part.source);
            probable |= part.probable;
            failures.extend(part.failures);
        }
        let mut out = Self::from_parts(n, factors, cofactor, source);
        out.probable = probable;
        out.failures = failures;
        out
    }
}

/// Knobs for the pure tiers. The FactorDB and cache settings live with the
/// caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierPolicy {
    pub trial_limit: u64,
    pub allow_general: bool,
    /// Iteration budget per rho attempt on numbers above 64 bits.
    pub rho_iterations: u64,
    pub pm1_bound1: u64,
    pub pm1_bound2: u64,
    pub ecm_bound1: u64,
    pub ecm_bound2: u64,
    pub ecm_curves: u32,
}

impl Default for TierPolicy {
    fn default() -> Self {
        TierPolicy {
            trial_limit: 1_000_000,
            allow_general: true,
            rho_iterations: 1 << 22,
            pm1_bound1: 200_000,
            pm1_bound2: 20_000_000,
            ecm_bound1: 11_000,
            ecm_bound2: 1_100_000,
            ecm_curves: 80,
        }
    }
}

/// Source of prime factorisations for the search.
pub trait Factorizer {
    fn factor(&self, n: &BigUint) -> Factorization;

    /// Factorisation of `σ(p^a)`. The default splits it into cyclotomic
    /// values `Φ_d(p)` first, which are far easier to factor than the
    /// product.
    fn factor_sigma(&self, p: &BigUint, a: u32) -> Factorization {
        factor_sigma_split(self, p, a)
    }
}

/// Factors `σ(p^a)` piece by piece through [`sigma_cyclotomic_parts`].
pub fn factor_sigma_split<F: Factorizer + ?Sized>(f: &F, p: &BigUint, a: u32) -> Factorization {
    let n = geometric_sum(p, a);
    if a == 0 {
        return Factorization::unit();
    }
    let parts = sigma_cyclotomic_parts(p, a)
        .into_iter()
        .map(|(_, value)| f.factor(&value))
        .collect();
    Factorization::combine(n, parts)
}

/// The pure tier chain with a cached table of small primes.
#[derive(Debug, Clone)]
pub struct TierFactorizer {
    policy: TierPolicy,
    table: Vec<u32>,
}

impl TierFactorizer {
    pub fn new(policy: TierPolicy) -> Self {
        let table = primes::small_primes(TABLE_LIMIT.min(policy.trial_limit.min(u32::MAX as u64) as u32));
        TierFactorizer { policy, table }
    }

    pub fn policy(&self) -> &TierPolicy {
        &self.policy
    }

    pub fn trial_division(&self, n: &BigUint, limit: u64) -> Factorization {
        trial_division_with(n, limit, &self.table)
    }
}

impl Default for TierFactorizer {
    fn default() -> Self {
        Self::new(TierPolicy::default())
    }
}

impl Factorizer for TierFactorizer {
    fn factor(&self, n: &BigUint) -> Factorization {
        factor_with(n, &self.policy, &self.table)
    }
}

/// Wraps a factorizer with a single-threaded memo table.
#[derive(Debug)]
pub struct MemoFactorizer<F> {
    inner: F,
    memo: RefCell<BTreeMap<BigUint, Factorization>>,
    sigma_memo: RefCell<BTreeMap<(BigUint, u32), Factorization>>,
}

impl<F: Factorizer> MemoFactorizer<F> {
    pub fn new(inner: F) -> Self {
        MemoFactorizer { inner, memo: RefCell::default(), sigma_memo: RefCell::default() }
    }
}

impl<F: Factorizer> Factorizer for MemoFactorizer<F> {
    fn factor(&self, n: &BigUint) -> Factorization {
        if let Some(hit) = self.memo.borrow().get(n) {
            return hit.clone();
        }
        let fz = self.inner.factor(n);
        self.memo.borrow_mut().insert(n.clone(), fz.clone());
        fz
    }

    fn factor_sigma(&self, p: &BigUint, a: u32) -> Factorization {
        let key = (p.clone(), a);
        if let Some(hit) = self.sigma_memo.borrow().get(&key) {
            return hit.clone();
        }
        let fz = factor_sigma_split(self, p, a);
        self.sigma_memo.borrow_mut().insert(key, fz.clone());
        fz
    }
}

/// Factors `n` under `policy` without any caching.
pub fn factor(n: &BigUint, policy: &TierPolicy) -> Factorization {
    let table = primes::small_primes(TABLE_LIMIT.min(policy.trial_limit.min(u32::MAX as u64) as u32));
    factor_with(n, policy, &table)
}

/// Every prime `≤ limit` dividing `n` with full multiplicity. The result is
/// complete when the leftover is `1`, or is at most `limit²` (and therefore
/// prime); otherwise the leftover is returned as the cofactor.
pub fn trial_division(n: &BigUint, limit: u64) -> Factorization {
    let table = primes::small_primes(TABLE_LIMIT.min(limit.min(u32::MAX as u64) as u32));
    trial_division_with(n, limit, &table)
}

fn trial_division_with(n: &BigUint, limit: u64, table: &[u32]) -> Factorization {
    assert!(!n.is_zero(), "cannot factor zero");
    let mut factors = Vec::new();
    let mut cofactor = n.clone();
    let exhausted = divide_out(&mut cofactor, &mut factors, 2, limit, table);
    let limit_sq = BigUint::from(limit) * limit;
    if !cofactor.is_one() && (exhausted || cofactor <= limit_sq) {
        factors.push((core::mem::replace(&mut cofactor, BigUint::one()), 1));
    }
    Factorization::from_parts(n.clone(), factors, cofactor, FactorSource::Trial)
}

/// Divides `cofactor` by every prime in `[from, limit]`. Returns `true` when
/// it stopped early because the cofactor became `1` or smaller than the
/// square of the next prime (so that what is left is `1` or prime).
fn divide_out(
    cofactor: &mut BigUint,
    factors: &mut Vec<(BigUint, u32)>,
    from: u64,
    limit: u64,
    table: &[u32],
) -> bool {
    let table_end = table.last().map_or(0, |&p| p as u64);
    let in_table = table.iter().map(|&p| p as u64).filter(|&p| p >= from && p <= limit);
    let beyond = PrimeRange::new(from.max(table_end + 1), limit.saturating_add(1));
    for p in in_table.chain(beyond) {
        if let Some(c) = cofactor.to_u64() {
            if (p as u128) * (p as u128) > c as u128 {
                return true;
            }
            let mut c = c;
            let mut e = 0;
            while c % p == 0 {
                c /= p;
                e += 1;
            }
            if e > 0 {
                factors.push((BigUint::from(p), e));
                *cofactor = BigUint::from(c);
            }
        } else {
            if rem_u64(cofactor, p) != 0 {
                continue;
            }
            let mut e = 0;
            loop {
                let (q, r) = cofactor.div_rem(&BigUint::from(p));
                if !r.is_zero() {
                    break;
                }
                *cofactor = q;
                e += 1;
            }
            factors.push((BigUint::from(p), e));
        }
    }
    cofactor.is_one()
}

fn rem_u64(n: &BigUint, d: u64) -> u64 {
    let mut r: u128 = 0;
    for digit in n.iter_u64_digits().rev() {
        r = ((r << 64) | digit as u128) % d as u128;
    }
    r as u64
}

fn factor_with(n: &BigUint, policy: &TierPolicy, table: &[u32]) -> Factorization {
    assert!(!n.is_zero(), "cannot factor zero");
    if n.is_one() {
        return Factorization::unit();
    }
    // With the general tier available, long trial division is slower than
    // rho; the first pass stops at the table limit.
    let first_limit = if policy.allow_general {
        policy.trial_limit.min(TABLE_LIMIT as u64)
    } else {
        policy.trial_limit
    };
    let mut factors = Vec::new();
    let mut cofactor = n.clone();
    let exhausted = divide_out(&mut cofactor, &mut factors, 2, first_limit, table);
    if cofactor.is_one() {
        return Factorization::from_parts(n.clone(), factors, cofactor, FactorSource::Trial);
    }
    let mut probable = false;
    if exhausted {
        factors.push((cofactor, 1));
        return Factorization::from_parts(n.clone(), factors, BigUint::one(), FactorSource::Trial);
    }
    match primes::primality(&cofactor) {
        Primality::Prime => {
            factors.push((cofactor, 1));
            return Factorization::from_parts(n.clone(), factors, BigUint::one(), FactorSource::Trial);
        }
        Primality::ProbablePrime => {
            let proven = prove_prime(&cofactor, policy);
            factors.push((cofactor, 1));
            let mut fz = Factorization::from_parts(n.clone(), factors, BigUint::one(), FactorSource::Trial);
            fz.probable = !proven;
            return fz;
        }
        Primality::Composite => {}
    }

    let mut source = FactorSource::Trial;
    let mut leftovers = Vec::new();
    if policy.allow_general {
        source = FactorSource::General;
        let mut stack = alloc::vec![cofactor];
        while let Some(c) = stack.pop() {
            match primes::primality(&c) {
                Primality::Prime => factors.push((c, 1)),
                Primality::ProbablePrime => {
                    probable |= !prove_prime(&c, policy);
                    factors.push((c, 1));
                }
                Primality::Composite => match split(&c, policy) {
                    Some(d) => {
                        let other = &c / &d;
                        stack.push(d);
                        stack.push(other);
                    }
                    None => leftovers.push(c),
                },
            }
        }
    } else {
        leftovers.push(cofactor);
    }

    // Anything still composite must be free of primes up to the trial limit.
    let mut rest = BigUint::one();
    for mut c in leftovers {
        if first_limit < policy.trial_limit {
            let mut found = Vec::new();
            let exhausted = divide_out(&mut c, &mut found, first_limit + 1, policy.trial_limit, table);
            factors.extend(found);
            if c.is_one() {
                continue;
            }
            if exhausted || primes::is_prime(&c) {
                factors.push((c, 1));
                continue;
            }
        }
        rest *= c;
    }
    let mut fz = Factorization::from_parts(n.clone(), factors, rest, source);
    fz.probable = probable;
    fz
}

/// Pocklington: `n` is prime if `n − 1 = F·R` with `F² > n`, `F` fully
/// factored into proven primes, and for each prime `q | F` some `a` has
/// `a^{n−1} ≡ 1` and `gcd(a^{(n−1)/q} − 1, n) = 1 (mod n)`.
pub fn prove_prime(n: &BigUint, policy: &TierPolicy) -> bool {
    match primes::primality(n) {
        Primality::Composite => return false,
        Primality::Prime => return true,
        Primality::ProbablePrime => {}
    }
    let n_minus_1 = n - 1u32;
    let fz = factor(&n_minus_1, policy);
    let mut proven = Vec::new();
    let mut part = BigUint::one();
    for (q, e) in &fz.factors {
        if !fz.probable || prove_prime(q, policy) {
            part *= num_traits::pow::pow(q.clone(), *e as usize);
            proven.push(q);
        }
    }
    if &part * &part <= *n {
        return false;
    }
    proven.into_iter().all(|q| {
        let exp = &n_minus_1 / q;
        (2u32..200).any(|a| {
            let a = BigUint::from(a);
            if !a.modpow(&n_minus_1, n).is_one() {
                return false;
            }
            let t = a.modpow(&exp, n);
            !t.is_zero() && (t - 1u32).gcd(n).is_one()
        })
    })
}

/// A nontrivial divisor of the composite `n`, or `None` if the budgets ran out.
fn split(n: &BigUint, policy: &TierPolicy) -> Option<BigUint> {
    if let Some(root) = exact_root(n, 2).or_else(|| exact_root(n, 3)) {
        return Some(root);
    }
    if let Some(small) = n.to_u64() {
        return (1u64..).find_map(|c| rho_u64(small, 2, c, u64::MAX)).map(BigUint::from);
    }
    for c in 1..=3u64 {
        if let Some(d) = rho_big(n, 2, c, policy.rho_iterations / 3) {
            return Some(d);
        }
    }
    pm1_big(n, policy.pm1_bound1, policy.pm1_bound2)
        .or_else(|| ecm_big(n, policy.ecm_bound1, policy.ecm_bound2, policy.ecm_curves))
}

fn exact_root(n: &BigUint, k: u32) -> Option<BigUint> {
    let r = n.nth_root(k);
    (num_traits::pow::pow(r.clone(), k as usize) == *n).then_some(r)
}
