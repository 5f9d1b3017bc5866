use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use super::state::{BranchState, OffEntry, OnEntry};
use crate::arith::Rational;
use crate::factor::{self, TierPolicy};
use crate::primes::is_prime;
use crate::valuation::{special_contribution, SpecialPrimeSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("need 1 < t_min ≤ t_max")]
    BadTargets,
    #[error("k must be at least 1")]
    BadK,
    #[error("cutoff B must be positive")]
    BadCutoff,
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("prime {0} appears twice in the initial sequences")]
    DuplicatePrime(BigUint),
    #[error("exponent of {0} must be at least 1")]
    ZeroExponent(BigUint),
    #[error("{0} divides the numerator of t_min but is not ignored")]
    IgnoredMissing(BigUint),
    #[error("could not factor the numerator of t_min")]
    TargetUnfactored,
    #[error("special prime {0} must be an odd prime")]
    SpecialNotOddPrime(BigUint),
    #[error("special prime {0} must appear in the initial on sequence")]
    SpecialNotListed(BigUint),
    #[error("special prime {0} divides t_min or t_max")]
    SpecialDividesTarget(BigUint),
}

/// One search run: targets, cutoff and root data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub t_min: Rational,
    pub t_max: Rational,
    /// Number of distinct prime factors of `n`.
    pub k: u32,
    pub ignored: Vec<BigUint>,
    /// `B`: prime powers above this are "large".
    pub cutoff: BigUint,
    /// `P` at the root.
    pub floor: BigUint,
    pub initial_on: Vec<OnEntry>,
    pub initial_off: Vec<OffEntry>,
    pub special: Option<SpecialPrimeSpec>,
    /// Overrides for `f_r(q)` of initial primes.
    pub initial_f_r: BTreeMap<BigUint, u64>,
}

impl SearchConfig {
    /// Plain config with empty sequences and no special prime.
    pub fn new(t: Rational, k: u32, ignored: Vec<BigUint>, cutoff: BigUint, floor: BigUint) -> Self {
        SearchConfig {
            t_min: t.clone(),
            t_max: t,
            k,
            ignored,
            cutoff,
            floor,
            initial_on: Vec::new(),
            initial_off: Vec::new(),
            special: None,
            initial_f_r: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.t_min <= Rational::one() || self.t_min > self.t_max {
            return Err(ConfigError::BadTargets);
        }
        if self.k == 0 {
            return Err(ConfigError::BadK);
        }
        if self.cutoff.is_zero() {
            return Err(ConfigError::BadCutoff);
        }
        let mut seen: Vec<&BigUint> = Vec::new();
        let entries = self
            .initial_on
            .iter()
            .map(|e| (&e.p, e.e))
            .chain(self.initial_off.iter().map(|e| (&e.p, e.b)));
        for (p, e) in entries {
            if !is_prime(p) {
                return Err(ConfigError::NotPrime(p.clone()));
            }
            if seen.contains(&p) {
                return Err(ConfigError::DuplicatePrime(p.clone()));
            }
            if e == 0 {
                return Err(ConfigError::ZeroExponent(p.clone()));
            }
            seen.push(p);
        }
        for q in &self.ignored {
            if !is_prime(q) {
                return Err(ConfigError::NotPrime(q.clone()));
            }
        }
        let numer = self.t_min.numer().to_biguint().expect("t_min > 1");
        let fz = factor::factor(&numer, &TierPolicy::default());
        if !fz.is_complete() {
            return Err(ConfigError::TargetUnfactored);
        }
        if let Some(q) = fz.primes().find(|q| !self.ignored.contains(q)) {
            return Err(ConfigError::IgnoredMissing(q.clone()));
        }
        if let Some(spec) = &self.special {
            let r = &spec.r;
            if *r == BigUint::from(2u32) || !is_prime(r) {
                return Err(ConfigError::SpecialNotOddPrime(r.clone()));
            }
            if !self.initial_on.iter().any(|e| e.p == *r) {
                return Err(ConfigError::SpecialNotListed(r.clone()));
            }
            let divides = |x: &Rational| {
                let n = x.numer().to_biguint().expect("positive");
                let d = x.denom().to_biguint().expect("positive");
                (n % r).is_zero() || (d % r).is_zero()
            };
            if divides(&self.t_min) || divides(&self.t_max) {
                return Err(ConfigError::SpecialDividesTarget(r.clone()));
            }
        }
        Ok(())
    }

    /// `f_r(q)` for the configured special prime, honouring overrides.
    pub fn f_r(&self, q: &BigUint) -> u64 {
        match &self.special {
            None => 0,
            Some(spec) => self
                .initial_f_r
                .get(q)
                .copied()
                .unwrap_or_else(|| special_contribution(q, &spec.r)),
        }
    }

    pub fn root(&self) -> BranchState {
        let special_sum = if self.special.is_some() {
            self.initial_on
                .iter()
                .map(|e| &e.p)
                .chain(self.initial_off.iter().map(|e| &e.p))
                .map(|q| self.f_r(q))
                .sum()
        } else {
            0
        };
        BranchState {
            s_on: self.initial_on.clone(),
            s_off: self.initial_off.clone(),
            floor: self.floor.clone(),
            depth: 0,
            branch_id: Vec::new(),
            special_sum,
        }
    }
}
