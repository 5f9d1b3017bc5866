//! Bounds on the smallest unknown prime factor.
//!
//! Suppose `n = ∏_{j=1}^{k} p_j^{a_j}` with `t_min ≤ σ₋₁(n) ≤ t_max`, the
//! first `k₁` primes known, the first `ℓ₁` of those with exact exponents
//! `a_j` and the rest with lower bounds `b_j ≤ a_j`, and the unknown primes
//! `p_{k₁+1} < … < p_k` increasing. Writing
//!
//! ```text
//! M = t_max / (∏_{exact} σ₋₁(p^a) · ∏_{floor} σ₋₁(p^b))
//! m = t_min / (∏_{exact} σ₋₁(p^a) · ∏_{floor} p/(p − 1))
//! ```
//!
//! the next unknown prime satisfies `1/(M − 1) ≤ p_{k₁+1}`, and if its
//! exponent is at least 2, `B_low < p_{k₁+1}` where
//! `B_low = 1/(M − 1) · 8/((2 − M)² + 7)`. When `m > 1`,
//! `p_{k₁+1} < B_high = 1 + (k − k₁)/(m − 1)`, and the prime after it is
//! below `g(A) = 1 + (k − k₁ − 1)/(m(A − 1)/A − 1)` for any `1 < A ≤ p_{k₁+1}`
//! with `m(A − 1)/A > 1`.
//!
//! Everything is exact; `M ≤ 1` and `m ≤ 1` are terminal conditions that the
//! caller handles before asking for a window.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{abundancy_limit_unchecked, abundancy_prime_power, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("need 0 ≤ ℓ₁ ≤ k₁ < k (k₁ = {known}, k = {k})")]
    TooManyKnown { known: usize, k: u32 },
    #[error("need 1 < t_min ≤ t_max")]
    BadTargets,
    #[error("prime {0} listed twice")]
    DuplicatePrime(BigUint),
    #[error("ratio must exceed 1 (got {0})")]
    RatioNotAboveOne(Rational),
    #[error("m(A − 1)/A must exceed 1")]
    SecondPrimeUndefined,
    #[error("need k₁ + 2 ≤ k for a second-prime bound")]
    NoSecondPrime,
}

/// Known part of a candidate factorisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundContext {
    pub t_min: Rational,
    pub t_max: Rational,
    pub k: u32,
    /// Primes with exact exponents.
    pub exact_part: Vec<(BigUint, u32)>,
    /// Primes with lower-bound exponents.
    pub floor_part: Vec<(BigUint, u32)>,
}

/// `M` and `m` for a context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ratios {
    /// `M`, built from `t_max` and the floor exponents.
    pub max: Rational,
    /// `m`, built from `t_min` and the limits `p/(p − 1)`.
    pub min: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeWindow {
    pub ratios: Ratios,
    /// Strict lower bound for a next prime whose exponent is at least 2.
    pub low: Rational,
    /// Strict upper bound; absent when `m ≤ 1`.
    pub high: Option<Rational>,
}

impl PrimeWindow {
    /// Whether the open interval `(low, high)` can contain anything.
    pub fn is_searchable(&self) -> bool {
        self.high.as_ref().is_some_and(|h| self.low < *h)
    }
}

impl BoundContext {
    pub fn known(&self) -> usize {
        self.exact_part.len() + self.floor_part.len()
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.known() >= self.k as usize {
            return Err(BoundsError::TooManyKnown { known: self.known(), k: self.k });
        }
        if self.t_min <= Rational::one() || self.t_min > self.t_max {
            return Err(BoundsError::BadTargets);
        }
        let mut seen: Vec<&BigUint> = Vec::new();
        for (p, _) in self.exact_part.iter().chain(&self.floor_part) {
            if seen.contains(&p) {
                return Err(BoundsError::DuplicatePrime(p.clone()));
            }
            seen.push(p);
        }
        Ok(())
    }

    pub fn ratios(&self) -> Ratios {
        ratios(&self.t_min, &self.t_max, &self.exact_part, &self.floor_part)
    }

    /// The full window for the next unknown prime. Requires `M > 1`.
    pub fn window(&self) -> Result<PrimeWindow, BoundsError> {
        self.validate()?;
        let ratios = self.ratios();
        let non_strict = lower_bound(&ratios.max, false)?;
        let strict = lower_bound(&ratios.max, true)?;
        let low = non_strict.max(strict);
        let high = if ratios.min > Rational::one() {
            Some(upper_bound(&ratios.min, self.k, self.known() as u32)?)
        } else {
            None
        };
        Ok(PrimeWindow { ratios, low, high })
    }
}

/// `(M, m)` without any check on `k`.
pub fn ratios(
    t_min: &Rational,
    t_max: &Rational,
    exact: &[(BigUint, u32)],
    floor: &[(BigUint, u32)],
) -> Ratios {
    let mut exact_product = Rational::one();
    for (p, a) in exact {
        exact_product *= abundancy_prime_power(p, *a);
    }
    let mut floor_product = exact_product.clone();
    let mut limit_product = exact_product;
    for (p, b) in floor {
        floor_product *= abundancy_prime_power(p, *b);
        limit_product *= abundancy_limit_unchecked(p);
    }
    Ratios { max: t_max / floor_product, min: t_min / limit_product }
}

/// `1/(M − 1)` (non-strict) or `B_low` (strict, for squared primes).
pub fn lower_bound(max_ratio: &Rational, squared: bool) -> Result<Rational, BoundsError> {
    let one = Rational::one();
    if *max_ratio <= one {
        return Err(BoundsError::RatioNotAboveOne(max_ratio.clone()));
    }
    let base = (max_ratio - &one).recip();
    if !squared {
        return Ok(base);
    }
    let two = Rational::from_integer(BigInt::from(2));
    let gap = &two - max_ratio;
    let improvement = Rational::from_integer(BigInt::from(8)) / (&gap * &gap + Rational::from_integer(BigInt::from(7)));
    Ok(base * improvement)
}

/// `B_high = 1 + (k − k₁)/(m − 1)`.
pub fn upper_bound(min_ratio: &Rational, k: u32, known: u32) -> Result<Rational, BoundsError> {
    let one = Rational::one();
    if *min_ratio <= one {
        return Err(BoundsError::RatioNotAboveOne(min_ratio.clone()));
    }
    if known >= k {
        return Err(BoundsError::TooManyKnown { known: known as usize, k });
    }
    let unknown = Rational::from_integer(BigInt::from(k - known));
    Ok(&one + unknown / (min_ratio - &one))
}

/// `g(A) = 1 + (k − k₁ − 1)/(m(A − 1)/A − 1)`, strictly decreasing in `A`.
pub fn second_prime_bound(min_ratio: &Rational, k: u32, known: u32, a: &Rational) -> Result<Rational, BoundsError> {
    if known + 2 > k {
        return Err(BoundsError::NoSecondPrime);
    }
    let one = Rational::one();
    if *a <= one {
        return Err(BoundsError::SecondPrimeUndefined);
    }
    let shrunk = min_ratio * (a - &one) / a;
    if shrunk <= one || shrunk.is_zero() {
        return Err(BoundsError::SecondPrimeUndefined);
    }
    let rest = Rational::from_integer(BigInt::from(k - known - 1));
    Ok(&one + rest / (shrunk - &one))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use alloc::vec;

    fn ctx(exact: Vec<(u64, u32)>, floor: Vec<(u64, u32)>, k: u32) -> BoundContext {
        let conv = |v: Vec<(u64, u32)>| v.into_iter().map(|(p, e)| (BigUint::from(p), e)).collect();
        BoundContext {
            t_min: ratio(9, 5),
            t_max: ratio(9, 5),
            k,
            exact_part: conv(exact),
            floor_part: conv(floor),
        }
    }

    #[test]
    fn ratio_examples() {
        let r = ctx(vec![], vec![], 5).ratios();
        assert_eq!((r.max, r.min), (ratio(9, 5), ratio(9, 5)));
        assert_eq!(ctx(vec![(5, 2)], vec![], 5).ratios().max, ratio(45, 31));
        assert_eq!(ctx(vec![], vec![(5, 2)], 5).ratios().min, ratio(36, 25));
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound(&ratio(9, 5), true).unwrap(), ratio(125, 88));
        assert_eq!(lower_bound(&ratio(9, 5), false).unwrap(), ratio(5, 4));
        assert!(lower_bound(&ratio(1, 1), false).is_err());
        assert!(lower_bound(&ratio(4, 5), true).is_err());
        // the improvement factor exceeds 1 exactly on 1 < M < 3
        for (n, d) in [(11u64, 10u64), (2, 1), (29, 10), (3, 1), (7, 2)] {
            let m = ratio(n, d);
            let strict = lower_bound(&m, true).unwrap();
            let plain = lower_bound(&m, false).unwrap();
            if m < ratio(3, 1) {
                assert!(strict > plain);
            } else {
                assert!(strict <= plain);
            }
        }
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(upper_bound(&ratio(9, 5), 5, 0).unwrap(), ratio(29, 4));
        assert_eq!(upper_bound(&ratio(36, 25), 5, 1).unwrap(), ratio(111, 11));
        assert_eq!(upper_bound(&ratio(2, 1), 4, 3).unwrap(), ratio(2, 1));
        assert!(upper_bound(&ratio(1, 1), 5, 0).is_err());
        assert!(upper_bound(&ratio(2, 1), 5, 5).is_err());
    }

    #[test]
    fn second_prime_examples() {
        let g5 = second_prime_bound(&ratio(9, 5), 5, 0, &ratio(5, 1)).unwrap();
        let g9 = second_prime_bound(&ratio(9, 5), 5, 0, &ratio(9, 1)).unwrap();
        assert_eq!(g5, ratio(111, 11));
        assert_eq!(g9, ratio(23, 3));
        assert!(g9 < g5);
        assert_eq!(
            second_prime_bound(&ratio(9, 5), 5, 0, &ratio(2, 1)),
            Err(BoundsError::SecondPrimeUndefined)
        );
        assert_eq!(second_prime_bound(&ratio(9, 5), 5, 4, &ratio(9, 1)), Err(BoundsError::NoSecondPrime));
    }

    #[test]
    fn window_at_friend_of_ten_root() {
        let w = ctx(vec![], vec![], 5).window().unwrap();
        assert_eq!(w.low, ratio(125, 88));
        assert_eq!(w.high, Some(ratio(29, 4)));
        assert!(w.is_searchable());
        assert!(ctx(vec![(5, 2)], vec![(7, 2), (11, 2), (13, 2), (17, 2)], 5).validate().is_err());
        assert_eq!(
            ctx(vec![(5, 2)], vec![(5, 2)], 5).validate(),
            Err(BoundsError::DuplicatePrime(BigUint::from(5u32)))
        );
    }
}
