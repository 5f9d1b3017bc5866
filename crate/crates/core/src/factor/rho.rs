//! Pollard rho (Brent's variant) and Pollard `p − 1`.
//!
//! All parameters are fixed by the caller so that runs are reproducible.

use alloc::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::primes::{mul_mod, PrimeRange};

const BATCH: u64 = 128;

#[inline]
fn step_u64(x: u64, c: u64, n: u64) -> u64 {
    ((mul_mod(x, x, n) as u128 + c as u128) % n as u128) as u64
}

/// A nontrivial divisor of the odd composite `n` via `x ↦ x² + c`, or `None`
/// if the cycle closes on `n` or `max_iter` is exceeded.
pub fn rho_u64(n: u64, seed: u64, c: u64, max_iter: u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let mut y = seed % n;
    let mut r: u64 = 1;
    let mut q: u64 = 1;
    let mut g: u64 = 1;
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = step_u64(y, c, n);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BATCH.min(r - k) {
                y = step_u64(y, c, n);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += BATCH;
        }
        if r > max_iter {
            return None;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = step_u64(ys, c, n);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn abs_diff(a: &BigUint, b: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

/// Big-integer version of [`rho_u64`].
pub fn rho_big(n: &BigUint, seed: u64, c: u64, max_iter: u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let c = BigUint::from(c);
    let step = |v: &BigUint| (v * v + &c) % n;
    let mut y = BigUint::from(seed) % n;
    let mut r: u64 = 1;
    let mut q = BigUint::one();
    let mut g = BigUint::one();
    let mut x = y.clone();
    let mut ys = y.clone();
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = step(&y);
        }
        let mut k = 0;
        while k < r && g.is_one() {
            ys = y.clone();
            for _ in 0..BATCH.min(r - k) {
                y = step(&y);
                q = q * abs_diff(&x, &y) % n;
            }
            g = q.gcd(n);
            k += BATCH;
        }
        if r > max_iter {
            return None;
        }
        r *= 2;
    }
    if g == *n {
        loop {
            ys = step(&ys);
            g = abs_diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (g != *n).then_some(g)
}

/// Pollard `p − 1` with base 2: stage one over prime powers up to `bound1`,
/// then a prime-by-prime stage two up to `bound2`.
pub fn pm1_big(n: &BigUint, bound1: u64, bound2: u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let mut a = BigUint::from(2u32);
    for p in PrimeRange::new(2, bound1.saturating_add(1)) {
        let mut pk = p;
        while pk.saturating_mul(p) <= bound1 {
            pk *= p;
        }
        a = a.modpow(&BigUint::from(pk), n);
    }
    let g = (&a + n - 1u32).gcd(n) % n;
    let g = if g.is_zero() { n.clone() } else { g };
    if !g.is_one() {
        return (g != *n).then_some(g);
    }
    if bound2 <= bound1 {
        return None;
    }

    let mut steps: BTreeMap<u64, BigUint> = BTreeMap::new();
    let mut primes = PrimeRange::new(bound1 + 1, bound2.saturating_add(1));
    let first = primes.next()?;
    let mut current = a.modpow(&BigUint::from(first), n);
    let mut prev = first;
    let mut acc = (&current + n - 1u32) % n;
    let mut count = 0u32;
    for q in primes {
        let gap = q - prev;
        prev = q;
        let mult = steps.entry(gap).or_insert_with(|| a.modpow(&BigUint::from(gap), n));
        current = &current * &*mult % n;
        acc = acc * ((&current + n - 1u32) % n) % n;
        count += 1;
        if count % 2048 == 0 {
            let g = acc.gcd(n);
            if !g.is_one() {
                return (g != *n).then_some(g);
            }
        }
    }
    let g = acc.gcd(n);
    (!g.is_one() && g != *n).then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_u64_finds_factor() {
        let n = 1_000_000_007u64 * 998_244_353;
        let d = (1..).find_map(|c| rho_u64(n, 2, c, u64::MAX)).unwrap();
        assert!(d == 1_000_000_007 || d == 998_244_353);
    }

    #[test]
    fn rho_big_finds_factor() {
        let p: BigUint = "13971969971".parse().unwrap();
        let q: BigUint = "8737481256739".parse().unwrap();
        let n = &p * &q;
        let d = rho_big(&n, 2, 1, 1 << 22).unwrap();
        assert!(d == p || d == q);
    }

    #[test]
    fn pm1_finds_smooth_factor() {
        // p - 1 = 2 · 3 · 13 · 37 · 107 · 28294769: needs stage two
        let p: BigUint = "8737481256739".parse().unwrap();
        let q: BigUint = "625552508473588471".parse().unwrap();
        let n = &p * &q;
        assert_eq!(pm1_big(&n, 1000, 30_000_000), Some(p.clone()));
        assert_eq!(pm1_big(&n, 1000, 2000), None);
    }
}
