//! The factor oracle used by runs: cache, pure tiers, built-in facts and
//! FactorDB, in that order.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use abundancy_core::factor::{factor_sigma_split, Factorization, TierFailure};
use abundancy_core::{FactorSource, Factorizer, TierFactorizer, TierPolicy};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cache::{more_complete, CacheError, FactorCache};
use crate::factordb::{self, FactorDbClient, Lookup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FactorDbMode {
    Off,
    /// Built-in facts and the local cache only.
    #[default]
    Cache,
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorPolicy {
    pub tiers: TierPolicy,
    pub factordb: FactorDbMode,
    pub cache_path: Option<PathBuf>,
    pub factordb_url: String,
}

impl Default for FactorPolicy {
    fn default() -> Self {
        FactorPolicy {
            tiers: TierPolicy::default(),
            factordb: FactorDbMode::default(),
            cache_path: None,
            factordb_url: factordb::DEFAULT_URL.into(),
        }
    }
}

pub struct FactorOracle {
    policy: FactorPolicy,
    tiers: TierFactorizer,
    cache: FactorCache,
    client: Option<FactorDbClient>,
    sigma: Mutex<HashMap<(BigUint, u32), Factorization>>,
}

impl FactorOracle {
    pub fn new(policy: FactorPolicy) -> Result<Self, CacheError> {
        let cache = match &policy.cache_path {
            Some(path) => FactorCache::open(path)?,
            None => FactorCache::in_memory(),
        };
        let client = (policy.factordb == FactorDbMode::Online).then(|| FactorDbClient::new(policy.factordb_url.clone()));
        Ok(FactorOracle {
            tiers: TierFactorizer::new(policy.tiers.clone()),
            policy,
            cache,
            client,
            sigma: Mutex::default(),
        })
    }

    pub fn policy(&self) -> &FactorPolicy {
        &self.policy
    }

    pub fn cache(&self) -> &FactorCache {
        &self.cache
    }

    fn store(&self, fz: &Factorization) {
        if let Err(e) = self.cache.insert(fz) {
            log::warn!("{e}");
        }
    }

    fn remote(&self, n: &BigUint, best: Factorization) -> Factorization {
        let mut best = best;
        if self.policy.factordb != FactorDbMode::Off {
            if let Some(fact) = factordb::builtin_lookup(n) {
                best = merge(n, &best, &fact);
            }
        }
        if best.is_complete() {
            return best;
        }
        if let Some(client) = &self.client {
            match client.lookup(n) {
                Ok(Lookup::Known(remote)) => best = merge(n, &best, &remote),
                Ok(Lookup::Unknown) => {}
                Err(e) => best.failures.push(TierFailure { source: FactorSource::FactorDb, message: e.to_string() }),
            }
        }
        best
    }
}

/// Combines the primes of two factorisations of `n`.
fn merge(n: &BigUint, a: &Factorization, b: &Factorization) -> Factorization {
    let mut primes: Vec<BigUint> = a.primes().chain(b.primes()).cloned().collect();
    primes.sort();
    primes.dedup();
    let mut rest = n.clone();
    let mut factors = Vec::new();
    for p in primes {
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        factors.push((p, e));
    }
    if !rest.is_one() && abundancy_core::primes::is_prime(&rest) {
        factors.push((std::mem::replace(&mut rest, BigUint::one()), 1));
    }
    let source = if more_complete(b, a) { b.source } else { a.source.max(b.source) };
    let mut out = Factorization::from_parts(n.clone(), factors, rest, source);
    out.probable = a.probable || b.probable;
    out.failures = a.failures.iter().chain(&b.failures).cloned().collect();
    out
}

impl Factorizer for FactorOracle {
    fn factor(&self, n: &BigUint) -> Factorization {
        if let Some(mut hit) = self.cache.get(n) {
            if hit.is_complete() || self.policy.factordb != FactorDbMode::Online {
                hit.source = FactorSource::Cache;
                return hit;
            }
        }
        let mut fz = self.tiers.factor(n);
        if !fz.is_complete() {
            fz = self.remote(n, fz);
        }
        self.store(&fz);
        fz
    }

    fn factor_sigma(&self, p: &BigUint, a: u32) -> Factorization {
        let key = (p.clone(), a);
        if let Some(hit) = self.sigma.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let fz = factor_sigma_split(self, p, a);
        self.sigma.lock().unwrap().insert(key, fz.clone());
        fz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factordb::BUILTIN_FACTS;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn examples() {
        let oracle = FactorOracle::new(FactorPolicy::default()).unwrap();
        assert_eq!(oracle.factor(&big(403)).factors, vec![(big(13), 1), (big(31), 1)]);
        assert_eq!(oracle.factor(&big(57)).factors, vec![(big(3), 1), (big(19), 1)]);
        let one = oracle.factor(&big(1));
        assert!(one.is_complete() && one.factors.is_empty());
        // second lookup is served from the cache with identical content
        let again = oracle.factor(&big(403));
        assert_eq!(again.source, FactorSource::Cache);
        assert_eq!(again, oracle.factor(&big(403)));
    }

    #[test]
    fn builtin_facts_reach_partial_results() {
        let tiers = TierPolicy { trial_limit: 1000, allow_general: false, ..TierPolicy::default() };
        let with = FactorOracle::new(FactorPolicy { tiers: tiers.clone(), ..FactorPolicy::default() }).unwrap();
        let without =
            FactorOracle::new(FactorPolicy { tiers, factordb: FactorDbMode::Off, ..FactorPolicy::default() }).unwrap();
        let fact = &BUILTIN_FACTS[0];
        let fz = with.factor_sigma(&big(fact.base), fact.exponent);
        assert!(fz.primes().any(|p| *p == fact.prime()));
        assert_eq!(fz.source, FactorSource::FactorDb);
        assert!(fz.check().is_ok());
        let fz = without.factor_sigma(&big(fact.base), fact.exponent);
        assert!(fz.factors.is_empty());
    }

    #[test]
    fn merge_keeps_all_primes() {
        let n = big(7 * 29 * 31);
        let a = Factorization::from_parts(n.clone(), vec![(big(7), 1)], big(899), FactorSource::Trial);
        let b = Factorization::from_parts(n.clone(), vec![(big(29), 1)], big(217), FactorSource::FactorDb);
        let m = merge(&n, &a, &b);
        assert!(m.is_complete());
        assert_eq!(m.factors, vec![(big(7), 1), (big(29), 1), (big(31), 1)]);
    }
}
