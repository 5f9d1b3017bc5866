//! Valuations of `σ(x^a) = (x^{a+1} − 1)/(x − 1)` at odd primes, primitive
//! prime divisors, the special-prime exponent test, and certification of
//! ceil-log bounds for `v_p(x^{p−1} − 1)`.

use alloc::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{self, valuation_uint, ArithError};
use crate::factor::{Factorizer, TierPolicy};
use crate::primes;

/// Certification is refused above this prime: it loops over every residue.
pub const CERTIFY_PRIME_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValuationError {
    #[error("{0} must be an odd prime")]
    NotOddPrime(BigUint),
    #[error("{p} divides {x}")]
    DividesBase { x: BigUint, p: BigUint },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("σ({p}^{a}) is not completely factored; cannot look for a witness")]
    Incomplete { p: BigUint, a: u32 },
    /// No prime of order `d` although the factorisation is complete. This
    /// contradicts Bang's theorem and means something upstream is broken.
    #[error("BUG: σ({p}^{a}) has no prime factor q with ord_q({p}) = {d} despite a complete factorisation")]
    Missing { p: BigUint, a: u32, d: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("{0} must be an odd prime")]
    NotOddPrime(BigUint),
    #[error("prime {0} is too large to certify by residue enumeration")]
    TooCostly(BigUint),
}

/// A special prime `r` with `v_r(t) = 0`, the range `L = r^{l_exponent}` and
/// slack `δ` such that `v_r(x^{o_r(x)} − 1) ≤ ⌈log_r x⌉ + δ` for all
/// `1 < x ≤ L` coprime to `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpecialPrimeSpec {
    pub r: BigUint,
    pub l_exponent: u32,
    pub delta: u32,
}

impl SpecialPrimeSpec {
    pub fn limit(&self) -> BigUint {
        num_traits::pow::pow(self.r.clone(), self.l_exponent as usize)
    }

    pub fn certify(&self) -> Result<bool, CertifyError> {
        certify_ceil_log(&self.r, self.l_exponent, self.delta)
    }
}

fn require_odd_prime(p: &BigUint) -> Result<(), ValuationError> {
    if p.is_even() || !primes::is_prime(p) {
        return Err(ValuationError::NotOddPrime(p.clone()));
    }
    Ok(())
}

/// `v_p(x^e − 1)` without expanding `x^e`: powers are reduced modulo `p^E`
/// for growing `E` until the residue is not `1`.
pub fn power_minus_one_valuation(x: &BigUint, e: &BigUint, p: &BigUint) -> u64 {
    let mut width = 4usize;
    loop {
        let modulus = num_traits::pow::pow(p.clone(), width);
        let y = x.modpow(e, &modulus);
        let t = (y + &modulus - 1u32) % &modulus;
        if !t.is_zero() {
            return valuation_uint(&t, p).expect("nonzero");
        }
        width *= 2;
    }
}

/// Order of `x` modulo the prime `p` (divides `p − 1`).
pub(crate) fn order_mod_prime(x: &BigUint, p: &BigUint) -> Result<BigUint, ArithError> {
    let x = x % p;
    if x.is_zero() {
        return Err(ArithError::NotCoprime(x, p.clone()));
    }
    arith::order_dividing(&x, p, &(p - 1u32), &TierPolicy::default())
}

/// `v_p((x^{a+1} − 1)/(x − 1))` for an odd prime `p ∤ x`:
/// `v_p(a + 1)` when `p | x − 1`; `v_p(x^{o} − 1) + v_p(a + 1)` when
/// `o = o_p(x)` divides `a + 1`; `0` otherwise.
pub fn sigma_valuation(x: &BigUint, a: u32, p: &BigUint) -> Result<u64, ValuationError> {
    require_odd_prime(p)?;
    if *x <= BigUint::one() {
        return Err(ValuationError::InvalidArgument("base must exceed 1"));
    }
    if a == 0 {
        return Err(ValuationError::InvalidArgument("exponent must be positive"));
    }
    if (x % p).is_zero() {
        return Err(ValuationError::DividesBase { x: x.clone(), p: p.clone() });
    }
    let a_plus_1 = BigUint::from(a + 1);
    if ((x - 1u32) % p).is_zero() {
        return Ok(valuation_uint(&a_plus_1, p)?);
    }
    let order = order_mod_prime(x, p)?;
    if !(&a_plus_1 % &order).is_zero() {
        return Ok(0);
    }
    Ok(power_minus_one_valuation(x, &order, p) + valuation_uint(&a_plus_1, p)?)
}

/// `f_r(q) = v_r(q^{o_r(q)} − 1)` if `gcd(r, q(q − 1)) = 1`, else `0`.
pub fn special_contribution(q: &BigUint, r: &BigUint) -> u64 {
    let q_minus_1 = q - 1u32;
    if !r.gcd(&(q * &q_minus_1)).is_one() {
        return 0;
    }
    let order = order_mod_prime(q, r).expect("q is coprime to r");
    power_minus_one_valuation(q, &order, r)
}

/// Memo table for [`special_contribution`] with a fixed `r`.
#[derive(Debug, Clone)]
pub struct SpecialContributions {
    r: BigUint,
    memo: BTreeMap<BigUint, u64>,
}

impl SpecialContributions {
    pub fn new(r: BigUint) -> Self {
        SpecialContributions { r, memo: BTreeMap::new() }
    }

    pub fn get(&mut self, q: &BigUint) -> u64 {
        if let Some(v) = self.memo.get(q) {
            return *v;
        }
        let v = special_contribution(q, &self.r);
        self.memo.insert(q.clone(), v);
        v
    }
}

/// Whether an exponent `exp_r` of the special prime is compatible with
/// `ω(n) = k` and contribution sum `s`: `exp_r ≤ (k − 1)² + s`.
pub fn special_exponent_ok(exp_r: u64, k: u32, s: u64) -> bool {
    let k1 = (k as u64).saturating_sub(1);
    exp_r <= k1 * k1 + s
}

/// Whether `ord_q(m) = d`, testing only the maximal proper divisors of `d`.
pub fn has_order(m: &BigUint, q: &BigUint, d: u32) -> bool {
    let d_big = BigUint::from(d);
    if !m.modpow(&d_big, q).is_one() {
        return false;
    }
    let mut rest = d;
    let mut ell = 2;
    while rest > 1 {
        if rest % ell == 0 {
            while rest % ell == 0 {
                rest /= ell;
            }
            if m.modpow(&BigUint::from(d / ell), q).is_one() {
                return false;
            }
        }
        ell += 1;
    }
    true
}

/// A prime `q | σ(p^a)` with `ord_q(p) = d`, for odd `p`, even `a` and
/// `d > 1` dividing `a + 1`.
pub fn primitive_order_witness<F: Factorizer + ?Sized>(
    p: &BigUint,
    a: u32,
    d: u32,
    factorizer: &F,
) -> Result<BigUint, WitnessError> {
    require_odd_prime(p)?;
    if a == 0 || a % 2 == 1 {
        return Err(ValuationError::InvalidArgument("exponent must be even and positive").into());
    }
    if d <= 1 || (a + 1) % d != 0 {
        return Err(ValuationError::InvalidArgument("d must exceed 1 and divide a + 1").into());
    }
    let fz = factorizer.factor_sigma(p, a);
    if let Some(q) = fz.primes().find(|q| has_order(p, q, d)) {
        return Ok(q.clone());
    }
    if !fz.is_complete() {
        return Err(WitnessError::Incomplete { p: p.clone(), a });
    }
    Err(WitnessError::Missing { p: p.clone(), a, d })
}

/// The unique `z ≡ y (mod p)` with `z^{p−1} ≡ 1 (mod p^a)`, namely
/// `y^{p^{a−1}} mod p^a`.
pub fn teichmuller_lift(y: &BigUint, p: &BigUint, a: u32) -> BigUint {
    assert!(a >= 1);
    let modulus = num_traits::pow::pow(p.clone(), a as usize);
    let e = num_traits::pow::pow(p.clone(), a as usize - 1);
    y.modpow(&e, &modulus)
}

/// An `x` with `1 < x ≤ p^max_power`, `p ∤ x`, and
/// `v_p(x^{p−1} − 1) > ⌈log_p x⌉ + delta`, if one exists.
///
/// Only lifted roots need checking: a violation at level `v` forces `x` to be
/// the lift of `x mod p` modulo `p^v`, and `x ≤ p^{v−δ−1} < p^v`.
pub fn ceil_log_violation(p: &BigUint, max_power: u32, delta: u32) -> Result<Option<BigUint>, CertifyError> {
    if p.is_even() || !primes::is_prime(p) {
        return Err(CertifyError::NotOddPrime(p.clone()));
    }
    let small = match p.to_u64() {
        Some(v) if v <= CERTIFY_PRIME_LIMIT => v,
        _ => return Err(CertifyError::TooCostly(p.clone())),
    };
    for v in 2..=max_power + delta + 1 {
        if v < delta + 2 {
            continue;
        }
        let bound = num_traits::pow::pow(p.clone(), (v - delta - 1) as usize);
        let modulus = num_traits::pow::pow(p.clone(), v as usize);
        let e = num_traits::pow::pow(p.clone(), v as usize - 1);
        for y in 2..small {
            let z = BigUint::from(y).modpow(&e, &modulus);
            if z > BigUint::one() && z <= bound {
                return Ok(Some(z));
            }
        }
    }
    Ok(None)
}

/// `true` iff `v_p(x^{p−1} − 1) ≤ ⌈log_p x⌉ + delta` for every `x` coprime
/// to `p` with `1 < x ≤ p^max_power`.
pub fn certify_ceil_log(p: &BigUint, max_power: u32, delta: u32) -> Result<bool, CertifyError> {
    Ok(ceil_log_violation(p, max_power, delta)?.is_none())
}
