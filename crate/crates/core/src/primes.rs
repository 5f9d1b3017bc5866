//! Primality testing and prime enumeration.
//!
//! [`primality`] runs strong-pseudoprime tests. With the first thirteen prime
//! bases the answer is proven correct for `n < 3 317 044 064 679 887 385 961 981`;
//! above that extra fixed-seed bases are used and the result is reported as
//! [`Primality::ProbablePrime`].

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

const BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Bound below which the thirteen bases in `BASES` decide primality.
const DETERMINISTIC_LIMIT: &str = "3317044064679887385961981";

const EXTRA_ROUNDS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    Composite,
    Prime,
    ProbablePrime,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        !matches!(self, Primality::Composite)
    }
}

pub fn is_prime(n: &BigUint) -> bool {
    primality(n).is_prime()
}

pub fn primality(n: &BigUint) -> Primality {
    if let Some(small) = n.to_u64() {
        return if is_prime_u64(small) { Primality::Prime } else { Primality::Composite };
    }
    for &p in &BASES {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().expect("n > 1");
    let d = &n_minus_1 >> s;
    for &a in &BASES {
        if !strong_probable_prime(n, &n_minus_1, &d, s, &BigUint::from(a)) {
            return Primality::Composite;
        }
    }
    let limit: BigUint = DETERMINISTIC_LIMIT.parse().expect("constant parses");
    if *n < limit {
        return Primality::Prime;
    }
    let mut rng = SplitMix64::new(0x5eed_cafe_f00d_d00d);
    let bound = n - 3u32;
    for _ in 0..EXTRA_ROUNDS {
        let a = rng.below_big(&bound) + 2u32;
        if !strong_probable_prime(n, &n_minus_1, &d, s, &a) {
            return Primality::Composite;
        }
    }
    Primality::ProbablePrime
}

fn strong_probable_prime(n: &BigUint, n_minus_1: &BigUint, d: &BigUint, s: u64, a: &BigUint) -> bool {
    let mut x = a.modpow(d, n);
    if x.is_one() || x == *n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == *n_minus_1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Deterministic for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &BASES[..12] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &BASES[..12] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `≥ n`.
pub fn next_prime(n: &BigUint) -> BigUint {
    if *n <= BigUint::from(2u32) {
        return BigUint::from(2u32);
    }
    let mut c = if (n % 2u32).is_zero() { n + 1u32 } else { n.clone() };
    loop {
        if let Some(small) = c.to_u64() {
            if let Some(p) = next_prime_u64(small) {
                return BigUint::from(p);
            }
        } else if is_prime(&c) {
            return c;
        }
        c += 2u32;
    }
}

/// Smallest prime `≥ n`, if it fits in a `u64`.
pub fn next_prime_u64(n: u64) -> Option<u64> {
    if n <= 2 {
        return Some(2);
    }
    let mut c = n | 1;
    loop {
        if is_prime_u64(c) {
            return Some(c);
        }
        c = c.checked_add(2)?;
    }
}

/// All primes `≤ limit` by a plain sieve of Eratosthenes.
pub fn small_primes(limit: u32) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u32);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

const SEGMENT: u64 = 1 << 16;

/// Primes in `[lo, hi)` in increasing order, produced by a segmented sieve.
///
/// Narrow ranges, and ranges with `√hi ≥ 2^22`, are walked with
/// strong-pseudoprime tests instead.
pub struct PrimeRange {
    next_lo: u64,
    hi: u64,
    base: Vec<u32>,
    buffer: Vec<u64>,
    pos: usize,
    sieve: bool,
}

impl PrimeRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        let root = isqrt_u64(hi.saturating_sub(1));
        let sieve = root < (1 << 22) && hi.saturating_sub(lo) >= root;
        let base = if sieve { small_primes(root as u32) } else { Vec::new() };
        PrimeRange { next_lo: lo.max(2), hi, base, buffer: Vec::new(), pos: 0, sieve }
    }

    fn refill(&mut self) -> bool {
        self.buffer.clear();
        self.pos = 0;
        while self.buffer.is_empty() && self.next_lo < self.hi {
            let lo = self.next_lo;
            let hi = lo.saturating_add(SEGMENT).min(self.hi);
            if self.sieve {
                let mut composite = vec![false; (hi - lo) as usize];
                for &p in &self.base {
                    let p = p as u64;
                    if p * p >= hi {
                        break;
                    }
                    let mut start = lo.div_ceil(p) * p;
                    if start < p * p {
                        start = p * p;
                    }
                    let mut j = start;
                    while j < hi {
                        composite[(j - lo) as usize] = true;
                        j += p;
                    }
                }
                for (i, c) in composite.iter().enumerate() {
                    if !c {
                        self.buffer.push(lo + i as u64);
                    }
                }
            } else {
                for c in lo..hi {
                    if is_prime_u64(c) {
                        self.buffer.push(c);
                    }
                }
            }
            self.next_lo = hi;
        }
        !self.buffer.is_empty()
    }
}

impl Iterator for PrimeRange {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.pos >= self.buffer.len() && !self.refill() {
            return None;
        }
        let p = self.buffer[self.pos];
        self.pos += 1;
        Some(p)
    }
}

pub fn isqrt_u64(n: u64) -> u64 {
    n.isqrt()
}

/// Small deterministic generator for pseudoprime bases and rho seeds.
#[derive(Debug, Clone)]
pub(crate) struct SplitMix64(u64);

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Roughly uniform value in `[0, bound)`; `bound` must be nonzero.
    pub(crate) fn below_big(&mut self, bound: &BigUint) -> BigUint {
        let words = bound.bits().div_ceil(64) as usize + 1;
        let digits: Vec<u64> = (0..words).map(|_| self.next_u64()).collect();
        BigUint::from_slice(
            &digits.iter().flat_map(|d| [*d as u32, (*d >> 32) as u32]).collect::<Vec<u32>>(),
        ) % bound
    }
}
