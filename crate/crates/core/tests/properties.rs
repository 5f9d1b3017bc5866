use abundancy_core::arith::{
    abundancy_of, abundancy_prime_power, ceil_log, ceil_log_uint, geometric_sum, valuation, valuation_uint, Rational,
};
use abundancy_core::bounds::{lower_bound, ratios, second_prime_bound, upper_bound};
use abundancy_core::factor::{ecm_big, factor, sigma_cyclotomic_parts, TierPolicy};
use abundancy_core::primes::{is_prime, small_primes};
use abundancy_core::valuation::{sigma_valuation, teichmuller_lift};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use proptest::prelude::*;

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn odd_primes_below(limit: u32) -> Vec<u64> {
    small_primes(limit).into_iter().skip(1).map(u64::from).collect()
}

proptest! {
    #[test]
    fn abundancy_is_multiplicative(m in 1u64..20_000, n in 1u64..20_000) {
        prop_assume!(m.gcd(&n) == 1);
        let lhs = abundancy_of(&big(m * n)).unwrap();
        let rhs = abundancy_of(&big(m)).unwrap() * abundancy_of(&big(n)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn valuation_is_additive(x in 1u64..1_000_000, y in 1u64..1_000_000, pi in 0usize..10) {
        let p = big([2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29][pi]);
        let vx = valuation_uint(&big(x), &p).unwrap();
        let vy = valuation_uint(&big(y), &p).unwrap();
        prop_assert_eq!(valuation_uint(&(big(x) * big(y)), &p).unwrap(), vx + vy);
        let q = Rational::new(BigInt::from(x), BigInt::from(y));
        prop_assert_eq!(valuation(&q, &p).unwrap(), vx as i64 - vy as i64);
    }

    #[test]
    fn ceil_log_brackets(base in 2u64..50, x in 1u64..10_000_000) {
        let e = ceil_log_uint(&big(base), &big(x)).unwrap();
        prop_assert!(big(base).pow(e as u32) >= big(x));
        if e > 0 {
            prop_assert!(big(base).pow(e as u32 - 1) < big(x));
        }
    }

    #[test]
    fn ceil_log_of_fraction(base in 2u64..20, num in 1u64..1_000_000, den in 1u64..1_000) {
        let x = Rational::new(BigInt::from(num), BigInt::from(den));
        let e = ceil_log(&big(base), &x).unwrap();
        prop_assert!(Rational::from_integer(BigInt::from(base).pow(e as u32)) >= x);
        if e > 0 {
            prop_assert!(Rational::from_integer(BigInt::from(base).pow(e as u32 - 1)) < x);
        }
    }

    #[test]
    fn factorisation_reconstructs(n in 1u64..u64::MAX) {
        let fz = factor(&big(n), &TierPolicy::default());
        prop_assert!(fz.is_complete());
        prop_assert!(fz.check().is_ok());
        prop_assert_eq!(fz.product(), big(n));
    }

    #[test]
    fn big_factorisation_reconstructs(a in 2u64..1 << 40, b in 2u64..1 << 40, c in 2u64..1 << 30) {
        let n = big(a) * big(b) * big(c);
        let fz = factor(&n, &TierPolicy::default());
        prop_assert!(fz.check().is_ok());
        prop_assert!(fz.is_complete());
    }

    #[test]
    fn ecm_returns_proper_divisors(a in 3u64..1 << 24, b in 3u64..1 << 24, c in 3u64..1 << 24) {
        let n = big(a | 1) * big(b | 1) * big(c | 1);
        if let Some(d) = ecm_big(&n, 500, 20_000, 4) {
            prop_assert!(d > BigUint::one() && d < n && (&n % &d).is_zero());
        }
    }

    #[test]
    fn cyclotomic_parts_multiply_to_sigma(pi in 0usize..20, a in 0u32..60) {
        let p = big(odd_primes_below(80)[pi]);
        let product = sigma_cyclotomic_parts(&p, a).into_iter().fold(BigUint::one(), |acc, (_, v)| acc * v);
        prop_assert_eq!(product, geometric_sum(&p, a));
    }

    #[test]
    fn sigma_valuation_matches_direct(x in 2u64..300, a in 1u32..30, pi in 0usize..24) {
        let p = big(odd_primes_below(100)[pi]);
        prop_assume!(!(big(x) % &p == BigUint::default()));
        let direct = valuation_uint(&geometric_sum(&big(x), a), &p).unwrap();
        prop_assert_eq!(sigma_valuation(&big(x), a, &p).unwrap(), direct);
    }

    #[test]
    fn teichmuller_lift_is_a_root_of_unity(pi in 0usize..10, y in 1u64..1000, a in 1u32..6) {
        let p = big(odd_primes_below(40)[pi]);
        let y = big(y) % &p;
        prop_assume!(y != BigUint::default());
        let z = teichmuller_lift(&y, &p, a);
        let modulus = p.clone().pow(a);
        prop_assert_eq!(&z % &p, y);
        prop_assert!(z.modpow(&(&p - 1u32), &modulus).is_one());
    }

    /// Plant `n` as a product of prime squares, reveal a prefix of its
    /// primes, and check that the next prime lands inside the window.
    #[test]
    fn next_prime_lies_in_window(
        picks in proptest::collection::btree_set(0usize..60, 2..6),
        exps in proptest::collection::vec(1u32..4, 6),
        known in 0usize..5,
        slack in 0u32..2,
    ) {
        let table = odd_primes_below(300);
        let primes: Vec<u64> = picks.into_iter().map(|i| table[i]).collect();
        let k = primes.len();
        prop_assume!(known < k);
        let pairs: Vec<(BigUint, u32)> = primes.iter().zip(&exps).map(|(&p, &e)| (big(p), 2 * e)).collect();
        let t = pairs.iter().fold(Rational::one(), |acc, (p, a)| acc * abundancy_prime_power(p, *a));
        // the first `known` primes: alternate exact and floor knowledge
        let mut exact = Vec::new();
        let mut floor = Vec::new();
        for (i, (p, a)) in pairs[..known].iter().enumerate() {
            if i % 2 == 0 { exact.push((p.clone(), *a)) } else { floor.push((p.clone(), (*a - slack).max(1))) }
        }
        let r = ratios(&t, &t, &exact, &floor);
        let next = Rational::from_integer(BigInt::from(primes[known]));
        if r.max > Rational::one() {
            prop_assert!(lower_bound(&r.max, false).unwrap() <= next);
            prop_assert!(lower_bound(&r.max, true).unwrap() < next);
        } else {
            // a prime is still missing, so M cannot be ≤ 1
            prop_assert!(false, "M ≤ 1 with unknown primes left");
        }
        if r.min > Rational::one() {
            let high = upper_bound(&r.min, k as u32, known as u32).unwrap();
            prop_assert!(next < high);
            if known + 2 <= k {
                let after = Rational::from_integer(BigInt::from(primes[known + 1]));
                if let Ok(g) = second_prime_bound(&r.min, k as u32, known as u32, &next) {
                    prop_assert!(after < g);
                }
            }
        }
    }
}

#[test]
fn small_primes_are_prime() {
    for p in small_primes(10_000) {
        assert!(is_prime(&big(p as u64)));
    }
}
