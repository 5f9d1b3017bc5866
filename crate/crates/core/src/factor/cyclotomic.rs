use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::One;

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn mobius(mut n: u32) -> i8 {
    let mut sign = 1i8;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// `Φ_d(x) = ∏_{e | d} (x^e − 1)^{μ(d/e)}` for `x ≥ 2`.
pub fn cyclotomic_value(d: u32, x: &BigUint) -> BigUint {
    assert!(d >= 1);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for e in divisors(d) {
        let term = num_traits::pow::pow(x.clone(), e as usize) - 1u32;
        match mobius(d / e) {
            1 => num *= term,
            -1 => den *= term,
            _ => {}
        }
    }
    num / den
}

/// `σ(p^a) = ∏_{d | a+1, d > 1} Φ_d(p)`, as `(d, Φ_d(p))` pairs in
/// increasing `d`.
pub fn sigma_cyclotomic_parts(p: &BigUint, a: u32) -> Vec<(u32, BigUint)> {
    divisors(a + 1)
        .into_iter()
        .filter(|&d| d > 1)
        .map(|d| (d, cyclotomic_value(d, p)))
        .collect()
}
