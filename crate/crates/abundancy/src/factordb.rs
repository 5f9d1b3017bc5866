//! FactorDB lookups.
//!
//! Remote answers are claims: every factor is divided out of `n` and tested
//! for primality before it is used. Composite "factors" stay in the cofactor.

use std::thread;
use std::time::Duration;

use abundancy_core::arith::geometric_sum;
use abundancy_core::factor::{prove_prime, Factorization};
use abundancy_core::{FactorSource, TierPolicy};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{CheckedSub, One, Pow, Zero};
use serde_json::Value;
use thiserror::Error;

pub const DEFAULT_URL: &str = "http://factordb.com/api";

#[derive(Debug, Error)]
pub enum FactorDbError {
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response for {n} is inconsistent: {message}")]
    Inconsistent { n: BigUint, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    Known(Factorization),
    Unknown,
}

pub struct FactorDbClient {
    base_url: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl FactorDbClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        FactorDbClient { base_url: base_url.into(), agent, retries: 3, backoff: Duration::from_millis(500) }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries.max(1);
        self.backoff = backoff;
        self
    }

    fn fetch(&self, n: &BigUint) -> Result<String, FactorDbError> {
        let mut last = String::new();
        for attempt in 0..self.retries {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.agent.get(&self.base_url).query("query", n.to_string()).call() {
                Ok(mut resp) if resp.status().is_success() => match resp.body_mut().read_to_string() {
                    Ok(body) => return Ok(body),
                    Err(e) => last = e.to_string(),
                },
                Ok(resp) => last = format!("HTTP {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
            log::warn!("factordb attempt {} for {n} failed: {last}", attempt + 1);
        }
        Err(FactorDbError::Transport { attempts: self.retries, message: last })
    }

    pub fn lookup(&self, n: &BigUint) -> Result<Lookup, FactorDbError> {
        let body = self.fetch(n)?;
        parse_response(n, &body)
    }
}

fn as_integer(v: &Value) -> Option<BigUint> {
    match v {
        Value::String(s) => s.parse().ok(),
        Value::Number(x) => x.as_u64().map(BigUint::from),
        _ => None,
    }
}

/// Translates a FactorDB JSON answer for `n` into a verified factorisation.
/// Statuses other than `FF`, `CF` and `P` are [`Lookup::Unknown`].
pub fn parse_response(n: &BigUint, body: &str) -> Result<Lookup, FactorDbError> {
    let v: Value = serde_json::from_str(body).map_err(|e| FactorDbError::Malformed(e.to_string()))?;
    let status = v.get("status").and_then(Value::as_str).ok_or_else(|| FactorDbError::Malformed("no status".into()))?;
    if !matches!(status, "FF" | "CF" | "P") {
        return Ok(Lookup::Unknown);
    }
    let list = v
        .get("factors")
        .and_then(Value::as_array)
        .ok_or_else(|| FactorDbError::Malformed("no factors".into()))?;
    let inconsistent = |message: String| FactorDbError::Inconsistent { n: n.clone(), message };
    let policy = TierPolicy::default();
    let mut rest = n.clone();
    let mut factors = Vec::new();
    for item in list {
        let pair = item.as_array().filter(|a| a.len() == 2).ok_or_else(|| FactorDbError::Malformed(item.to_string()))?;
        let f = as_integer(&pair[0]).ok_or_else(|| FactorDbError::Malformed(item.to_string()))?;
        let e = as_integer(&pair[1])
            .and_then(|e| u32::try_from(e).ok())
            .ok_or_else(|| FactorDbError::Malformed(item.to_string()))?;
        if f <= BigUint::one() {
            return Err(inconsistent(format!("factor {f}")));
        }
        if !prove_prime(&f, &policy) && !abundancy_core::primes::is_prime(&f) {
            // composite piece: leave it in the cofactor
            continue;
        }
        for _ in 0..e {
            let (q, r) = rest.div_rem(&f);
            if !r.is_zero() {
                return Err(inconsistent(format!("{f}^{e} does not divide n")));
            }
            rest = q;
        }
        factors.push((f, e));
    }
    if status == "P" && !(factors.len() == 1 && factors[0].0 == *n) {
        return Err(inconsistent("prime status without n as its factor".into()));
    }
    if !rest.is_one() && abundancy_core::primes::is_prime(&rest) {
        factors.push((std::mem::replace(&mut rest, BigUint::one()), 1));
    }
    let mut fz = Factorization::from_parts(n.clone(), factors, rest, FactorSource::FactorDb);
    fz.probable = fz.factors.iter().any(|(p, _)| !prove_prime(p, &policy));
    Ok(Lookup::Known(fz))
}

/// Expands `a^b-c`, `a^b+c` or `a^b` to a decimal integer.
pub fn expand_expression(expr: &str) -> Option<BigUint> {
    let expr: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(n) = expr.parse() {
        return Some(n);
    }
    let (power, tail) = match expr.find(['+', '-']) {
        Some(i) => expr.split_at(i),
        None => (expr.as_str(), ""),
    };
    let (base, exp) = power.split_once('^')?;
    let base: BigUint = base.parse().ok()?;
    let exp: u32 = exp.parse().ok()?;
    let value = base.pow(exp);
    match tail.split_at_checked(1) {
        None => Some(value),
        Some(("+", c)) => Some(value + c.parse::<BigUint>().ok()?),
        Some(("-", c)) => value.checked_sub(&c.parse::<BigUint>().ok()?),
        _ => None,
    }
}

/// A remote fact shipped with the crate: `prime` divides `σ(base^exponent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinFact {
    pub base: u64,
    pub exponent: u32,
    pub prime: &'static str,
}

impl BuiltinFact {
    pub fn n(&self) -> BigUint {
        geometric_sum(&BigUint::from(self.base), self.exponent)
    }

    pub fn prime(&self) -> BigUint {
        self.prime.parse().expect("valid literal")
    }
}

/// Smallest prime factors of `σ(19531^58)` and `σ(19531^72)`, both beyond the
/// reach of trial division to `2^31`.
pub const BUILTIN_FACTS: [BuiltinFact; 2] = [
    BuiltinFact { base: 19531, exponent: 58, prime: "316636168836007" },
    BuiltinFact { base: 19531, exponent: 72, prime: "57276919728938572349117407" },
];

/// Partial factorisation of `n` from the built-in facts, if any applies.
pub fn builtin_lookup(n: &BigUint) -> Option<Factorization> {
    let fact = BUILTIN_FACTS.iter().find(|f| f.n() == *n)?;
    let q = fact.prime();
    let mut rest = n.clone();
    let mut e = 0;
    while (&rest % &q).is_zero() {
        rest /= &q;
        e += 1;
    }
    if e == 0 {
        return None;
    }
    Some(Factorization::from_parts(n.clone(), vec![(q, e)], rest, FactorSource::FactorDb))
}
