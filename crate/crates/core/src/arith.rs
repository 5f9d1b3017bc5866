//! Exact integer and rational arithmetic for abundancy computations.
//!
//! Nothing in this module ever goes through floating point. Rationals are
//! [`num_rational::BigRational`], which keeps values reduced with a positive
//! denominator, so equality and ordering are exact.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::factor::{self, TierPolicy};
use crate::primes;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("σ(p^∞) is undefined; infinite exponents are only valid for abundancy limits")]
    InfiniteExponent,
    #[error("prime {0} appears more than once")]
    DuplicatePrime(BigUint),
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("{0} and {1} are not coprime")]
    NotCoprime(BigUint, BigUint),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("could not factor {0} completely")]
    Unfactored(BigUint),
}

/// Exponent of a prime power. `Infinite` stands for the limit `a → ∞` and is
/// only meaningful for [`abundancy_limit`]-style computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(a) => write!(f, "{a}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// A prime `p` together with an exponent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimePower {
    p: BigUint,
    exponent: Exponent,
}

impl PrimePower {
    /// Checks primality of `p` before accepting it.
    pub fn new(p: BigUint, exponent: Exponent) -> Result<Self, ArithError> {
        if !primes::is_prime(&p) {
            return Err(ArithError::NotPrime(p));
        }
        Ok(PrimePower { p, exponent })
    }

    pub fn finite(p: u64, a: u32) -> Result<Self, ArithError> {
        Self::new(BigUint::from(p), Exponent::Finite(a))
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    /// `σ₋₁(p^a)`, or `p/(p − 1)` for an infinite exponent.
    pub fn abundancy(&self) -> Rational {
        match self.exponent {
            Exponent::Finite(a) => abundancy_prime_power(&self.p, a),
            Exponent::Infinite => abundancy_limit_unchecked(&self.p),
        }
    }
}

/// `1 + x + x² + … + x^a` for any integer `x ≥ 2`.
pub fn geometric_sum(x: &BigUint, a: u32) -> BigUint {
    let mut acc = BigUint::one();
    for _ in 0..a {
        acc = acc * x + 1u32;
    }
    acc
}

/// `σ(p^a)`, the sum of divisors of a prime power.
pub fn sigma_prime_power(p: &BigUint, a: Exponent) -> Result<BigUint, ArithError> {
    let Exponent::Finite(a) = a else {
        return Err(ArithError::InfiniteExponent);
    };
    if !primes::is_prime(p) {
        return Err(ArithError::NotPrime(p.clone()));
    }
    Ok(geometric_sum(p, a))
}

/// `σ₋₁(p^a) = σ(p^a) / p^a`. Primality of `p` is the caller's concern.
pub fn abundancy_prime_power(p: &BigUint, a: u32) -> Rational {
    let num = geometric_sum(p, a);
    let den = num_traits::pow::pow(p.clone(), a as usize);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `σ₋₁(p^∞) = p/(p − 1)`.
pub fn abundancy_limit(p: &BigUint) -> Result<Rational, ArithError> {
    if !primes::is_prime(p) {
        return Err(ArithError::NotPrime(p.clone()));
    }
    Ok(abundancy_limit_unchecked(p))
}

pub(crate) fn abundancy_limit_unchecked(p: &BigUint) -> Rational {
    Rational::new(BigInt::from(p.clone()), BigInt::from(p - 1u32))
}

/// Abundancy index of `∏ p^a`, which is multiplicative over coprime parts.
pub fn abundancy(fz: &[PrimePower]) -> Result<Rational, ArithError> {
    let mut seen: Vec<&BigUint> = Vec::with_capacity(fz.len());
    let mut acc = Rational::one();
    for pp in fz {
        if seen.contains(&&pp.p) {
            return Err(ArithError::DuplicatePrime(pp.p.clone()));
        }
        seen.push(&pp.p);
        let Exponent::Finite(a) = pp.exponent else {
            return Err(ArithError::InfiniteExponent);
        };
        acc *= abundancy_prime_power(&pp.p, a);
    }
    Ok(acc)
}

/// Abundancy index of an arbitrary positive integer, via factorisation.
pub fn abundancy_of(n: &BigUint) -> Result<Rational, ArithError> {
    if n.is_zero() {
        return Err(ArithError::InvalidArgument("abundancy of zero"));
    }
    let fz = factor::factor(n, &TierPolicy::default());
    if !fz.is_complete() {
        return Err(ArithError::Unfactored(n.clone()));
    }
    let mut acc = Rational::one();
    for (p, a) in &fz.factors {
        acc *= abundancy_prime_power(p, *a);
    }
    Ok(acc)
}

/// `v_p(x)` for a positive integer.
pub fn valuation_uint(x: &BigUint, p: &BigUint) -> Result<u64, ArithError> {
    if x.is_zero() {
        return Err(ArithError::ZeroValuation);
    }
    if *p < BigUint::from(2u32) {
        return Err(ArithError::InvalidArgument("valuation base must be at least 2"));
    }
    if let (Some(x), Some(p)) = (x.to_u64(), p.to_u64()) {
        return Ok(valuation_u64(x, p));
    }
    let mut v = 0;
    let mut cur = x.clone();
    loop {
        let (q, r) = cur.div_rem(p);
        if !r.is_zero() {
            return Ok(v);
        }
        cur = q;
        v += 1;
    }
}

pub(crate) fn valuation_u64(mut x: u64, p: u64) -> u64 {
    debug_assert!(x > 0 && p >= 2);
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// `v_p(x)` for a nonzero rational: numerator valuation minus denominator
/// valuation. May be negative.
pub fn valuation(x: &Rational, p: &BigUint) -> Result<i64, ArithError> {
    if x.is_zero() {
        return Err(ArithError::ZeroValuation);
    }
    let num = x.numer().abs().to_biguint().expect("abs is nonnegative");
    let den = x.denom().to_biguint().expect("denominator is positive");
    let vn = valuation_uint(&num, p)? as i64;
    let vd = valuation_uint(&den, p)? as i64;
    Ok(vn - vd)
}

/// The order of `m` modulo `n`: the least `c ≥ 1` with `m^c ≡ 1 (mod n)`.
///
/// Computed by factoring the Carmichael function of `n` and stripping prime
/// factors while the power stays `1`.
pub fn multiplicative_order(m: &BigUint, n: &BigUint) -> Result<BigUint, ArithError> {
    if *n < BigUint::from(2u32) {
        return Err(ArithError::InvalidArgument("modulus must be at least 2"));
    }
    if !m.gcd(n).is_one() {
        return Err(ArithError::NotCoprime(m.clone(), n.clone()));
    }
    let m = m % n;
    if m.is_one() {
        return Ok(BigUint::one());
    }
    let policy = TierPolicy::default();
    let lambda = carmichael(n, &policy)?;
    order_dividing(&m, n, &lambda, &policy)
}

/// Least `c | bound` with `m^c ≡ 1 (mod n)`, given that `m^bound ≡ 1`.
pub(crate) fn order_dividing(
    m: &BigUint,
    n: &BigUint,
    bound: &BigUint,
    policy: &TierPolicy,
) -> Result<BigUint, ArithError> {
    let fz = factor::factor(bound, policy);
    if !fz.is_complete() {
        return Err(ArithError::Unfactored(bound.clone()));
    }
    let mut order = bound.clone();
    for (q, e) in &fz.factors {
        for _ in 0..*e {
            let candidate = &order / q;
            if m.modpow(&candidate, n).is_one() {
                order = candidate;
            } else {
                break;
            }
        }
    }
    Ok(order)
}

fn carmichael(n: &BigUint, policy: &TierPolicy) -> Result<BigUint, ArithError> {
    let fz = factor::factor(n, policy);
    if !fz.is_complete() {
        return Err(ArithError::Unfactored(n.clone()));
    }
    let two = BigUint::from(2u32);
    let mut lambda = BigUint::one();
    for (p, e) in &fz.factors {
        let part = if *p == two {
            match e {
                1 => BigUint::one(),
                2 => two.clone(),
                _ => BigUint::one() << (e - 2),
            }
        } else {
            num_traits::pow::pow(p.clone(), (*e - 1) as usize) * (p - 1u32)
        };
        lambda = lambda.lcm(&part);
    }
    Ok(lambda)
}

/// Smallest `e ≥ 0` with `base^e ≥ x`, by exact powering.
pub fn ceil_log(base: &BigUint, x: &Rational) -> Result<u64, ArithError> {
    if *base < BigUint::from(2u32) {
        return Err(ArithError::InvalidArgument("logarithm base must be at least 2"));
    }
    if !x.is_positive() {
        return Err(ArithError::InvalidArgument("logarithm argument must be positive"));
    }
    let num = x.numer().to_biguint().expect("positive");
    let den = x.denom().to_biguint().expect("positive");
    // base^e * den >= num
    let mut e = 0u64;
    let mut lhs = den;
    while lhs < num {
        lhs *= base;
        e += 1;
    }
    Ok(e)
}

pub fn ceil_log_uint(base: &BigUint, x: &BigUint) -> Result<u64, ArithError> {
    ceil_log(base, &Rational::from_integer(BigInt::from(x.clone())))
}

/// Parses `"a/b"` or `"a"` into a reduced rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Formats a rational as `"num/den"`, always with an explicit denominator.
pub fn format_rational(x: &Rational) -> alloc::string::String {
    alloc::format!("{}/{}", x.numer(), x.denom())
}

pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_prime_power(&big(5), Exponent::Finite(2)).unwrap(), big(31));
        assert_eq!(sigma_prime_power(&big(5), Exponent::Finite(6)).unwrap(), big(19531));
        assert_eq!(sigma_prime_power(&big(7), Exponent::Finite(0)).unwrap(), big(1));
        assert_eq!(
            sigma_prime_power(&big(5), Exponent::Infinite),
            Err(ArithError::InfiniteExponent)
        );
        assert_eq!(
            sigma_prime_power(&big(9), Exponent::Finite(2)),
            Err(ArithError::NotPrime(big(9)))
        );
    }

    #[test]
    fn abundancy_examples() {
        let ten = vec![PrimePower::finite(2, 1).unwrap(), PrimePower::finite(5, 1).unwrap()];
        assert_eq!(abundancy(&ten).unwrap(), ratio(9, 5));
        let sq = vec![PrimePower::finite(3, 2).unwrap(), PrimePower::finite(5, 2).unwrap()];
        assert_eq!(abundancy(&sq).unwrap(), ratio(403, 225));
        assert_eq!(abundancy(&[]).unwrap(), Rational::one());
        let dup = vec![PrimePower::finite(5, 1).unwrap(), PrimePower::finite(5, 2).unwrap()];
        assert_eq!(abundancy(&dup), Err(ArithError::DuplicatePrime(big(5))));
        let inf = vec![PrimePower::new(big(5), Exponent::Infinite).unwrap()];
        assert_eq!(abundancy(&inf), Err(ArithError::InfiniteExponent));
        assert_eq!(abundancy_of(&big(10)).unwrap(), ratio(9, 5));
    }

    #[test]
    fn limit_examples() {
        assert_eq!(abundancy_limit(&big(5)).unwrap(), ratio(5, 4));
        assert_eq!(abundancy_limit(&big(2)).unwrap(), ratio(2, 1));
        assert_eq!(abundancy_limit(&big(31)).unwrap(), ratio(31, 30));
        assert!(abundancy_limit(&big(1)).is_err());
        let inf = PrimePower::new(big(7), Exponent::Infinite).unwrap();
        assert_eq!(inf.abundancy(), ratio(7, 6));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&ratio(9, 5), &big(5)).unwrap(), -1);
        assert_eq!(valuation(&ratio(1, 1), &big(7)).unwrap(), 0);
        assert_eq!(valuation(&ratio(2400, 1), &big(5)).unwrap(), 2);
        assert_eq!(valuation_uint(&big(2400), &big(2)).unwrap(), 5);
        assert_eq!(valuation(&Rational::zero(), &big(5)), Err(ArithError::ZeroValuation));
        let huge = num_traits::pow::pow(big(31), 40) * big(7);
        assert_eq!(valuation_uint(&huge, &big(31)).unwrap(), 40);
    }

    #[test]
    fn order_examples() {
        assert_eq!(multiplicative_order(&big(5), &big(31)).unwrap(), big(3));
        assert_eq!(multiplicative_order(&big(1), &big(31)).unwrap(), big(1));
        assert_eq!(multiplicative_order(&big(5), &big(7)).unwrap(), big(6));
        assert_eq!(multiplicative_order(&big(3), &big(8)).unwrap(), big(2));
        assert_eq!(multiplicative_order(&big(2), &big(1001)).unwrap(), big(60));
        assert_eq!(
            multiplicative_order(&big(6), &big(9)),
            Err(ArithError::NotCoprime(big(6), big(9)))
        );
    }

    #[test]
    fn order_matches_enumeration() {
        for n in 2u64..200 {
            for m in 1..n {
                if num_integer::gcd(m, n) != 1 {
                    continue;
                }
                let mut c = 1u64;
                let mut acc = m % n;
                while acc != 1 % n {
                    acc = acc * m % n;
                    c += 1;
                }
                assert_eq!(multiplicative_order(&big(m), &big(n)).unwrap(), big(c), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn ceil_log_examples() {
        let p14 = num_traits::pow::pow(big(31), 14);
        assert_eq!(ceil_log_uint(&big(31), &p14).unwrap(), 14);
        assert_eq!(ceil_log_uint(&big(31), &(&p14 - 1u32)).unwrap(), 14);
        assert_eq!(ceil_log_uint(&big(31), &(&p14 + 1u32)).unwrap(), 15);
        let e17 = num_traits::pow::pow(big(10), 17);
        assert_eq!(ceil_log_uint(&big(19531), &e17).unwrap(), 4);
        assert_eq!(ceil_log(&big(2), &ratio(1, 3)).unwrap(), 0);
        assert_eq!(ceil_log(&big(2), &ratio(29, 4)).unwrap(), 3);
        assert!(ceil_log(&big(2), &Rational::zero()).is_err());
    }

    #[test]
    fn rational_text() {
        assert_eq!(parse_rational("18/10").unwrap(), ratio(9, 5));
        assert_eq!(parse_rational(" 2 ").unwrap(), ratio(2, 1));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
        assert_eq!(format_rational(&ratio(4, 2)), "2/1");
    }
}
