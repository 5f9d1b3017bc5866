//! Lenstra's elliptic-curve method on Montgomery curves.
//!
//! Curves come from Suyama's parametrisation with `σ = 6, 7, 8, …`, so a given
//! budget always tries the same curves. Points are kept as `(X : Z)` and the
//! curve constant `(A + 2)/4` as a fraction, so no inversions are needed.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::primes::PrimeRange;

/// Giant-step size of stage two.
const WHEEL: u64 = 210;

type Point = (BigUint, BigUint);

struct Curve<'a> {
    n: &'a BigUint,
    /// `(A + 2)/4 = num/den`.
    num: BigUint,
    den: BigUint,
}

impl Curve<'_> {
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + self.n - b) % self.n
    }

    fn double(&self, (x, z): &Point) -> Point {
        let n = self.n;
        let s = (x + z) % n;
        let d = self.sub(x, z);
        let s2 = &s * &s % n;
        let d2 = &d * &d % n;
        let t = self.sub(&s2, &d2);
        let x2 = &self.den * &s2 % n * &d2 % n;
        let z2 = t * ((&self.den * &d2 + &self.num * &(&s2 + n - &d2)) % n) % n;
        (x2, z2)
    }

    /// `p + q` given `p − q`.
    fn add(&self, (xp, zp): &Point, (xq, zq): &Point, (xd, zd): &Point) -> Point {
        let n = self.n;
        let u = self.sub(xp, zp) * ((xq + zq) % n) % n;
        let v = ((xp + zp) % n) * self.sub(xq, zq) % n;
        let plus = (&u + &v) % n;
        let minus = self.sub(&u, &v);
        (zd * (&plus * &plus % n) % n, xd * (&minus * &minus % n) % n)
    }

    fn multiply(&self, p: &Point, k: u64) -> Point {
        if k == 1 {
            return p.clone();
        }
        let mut r0 = p.clone();
        let mut r1 = self.double(p);
        for bit in (0..63 - k.leading_zeros()).rev() {
            if k >> bit & 1 == 1 {
                r0 = self.add(&r1, &r0, p);
                r1 = self.double(&r1);
            } else {
                r1 = self.add(&r1, &r0, p);
                r0 = self.double(&r0);
            }
        }
        r0
    }
}

/// A proper divisor of `g` against `n`, if `g` has one.
fn proper(g: BigUint, n: &BigUint) -> Result<Option<BigUint>, ()> {
    if g.is_one() {
        Ok(None)
    } else if g == *n || g.is_zero() {
        Err(())
    } else {
        Ok(Some(g))
    }
}

/// A nontrivial divisor of the odd composite `n` from up to `curves` curves
/// with stage-one bound `bound1` and stage-two bound `bound2`, or `None`.
pub fn ecm_big(n: &BigUint, bound1: u64, bound2: u64, curves: u32) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let powers: Vec<u64> = PrimeRange::new(2, bound1.saturating_add(1))
        .map(|p| {
            let mut pk = p;
            while pk.saturating_mul(p) <= bound1 {
                pk *= p;
            }
            pk
        })
        .collect();
    for sigma in 6..6 + curves as u64 {
        match ecm_curve(n, sigma, &powers, bound1, bound2) {
            Ok(Some(d)) => return Some(d),
            Ok(None) | Err(()) => {}
        }
    }
    None
}

fn ecm_curve(n: &BigUint, sigma: u64, powers: &[u64], bound1: u64, bound2: u64) -> Result<Option<BigUint>, ()> {
    let s = BigUint::from(sigma);
    let u = (&s * &s + n - 5u32) % n;
    let v = (s * 4u32) % n;
    let u3 = &u * &u % n * &u % n;
    let v3 = &v * &v % n * &v % n;
    let diff = (&v + n - &u) % n;
    let num = &diff * &diff % n * &diff % n * ((u * 3u32 + &v) % n) % n;
    let den = &u3 * &v % n * 16u32 % n;
    if let Some(d) = proper(den.gcd(n), n)? {
        return Ok(Some(d));
    }
    let curve = Curve { n, num, den };
    let mut q = (u3, v3);
    for &pk in powers {
        q = curve.multiply(&q, pk);
    }
    if let Some(d) = proper(q.1.gcd(n), n)? {
        return Ok(Some(d));
    }
    if bound2 <= bound1 {
        return Ok(None);
    }

    // baby steps j·Q for odd j < WHEEL/2, giant steps m·WHEEL·Q
    let q2 = curve.double(&q);
    let mut baby: Vec<Point> = alloc::vec![q.clone(), curve.add(&q, &q2, &q)];
    while (2 * baby.len() as u64 + 1) < WHEEL / 2 {
        let next = curve.add(&baby[baby.len() - 1], &q2, &baby[baby.len() - 2]);
        baby.push(next);
    }
    let baby: Vec<Point> = baby
        .into_iter()
        .enumerate()
        .filter(|(i, _)| (2 * *i as u64 + 1).gcd(&WHEEL) == 1)
        .map(|(_, p)| p)
        .collect();
    let giant = curve.multiply(&q, WHEEL);
    let first = (bound1 / WHEEL).max(1);
    let mut prev = curve.multiply(&q, first * WHEEL);
    let mut cur = curve.multiply(&q, (first + 1) * WHEEL);
    let mut acc = BigUint::one();
    let mut m = first;
    let mut since_gcd = 0u32;
    while m * WHEEL <= bound2 + WHEEL {
        for (xs, zs) in &baby {
            let t = curve.sub(&(&prev.0 * zs % n), &(xs * &prev.1 % n));
            acc = acc * t % n;
        }
        since_gcd += 1;
        if since_gcd == 256 {
            since_gcd = 0;
            if let Some(d) = proper(acc.gcd(n), n)? {
                return Ok(Some(d));
            }
        }
        let next = curve.add(&cur, &giant, &prev);
        prev = core::mem::replace(&mut cur, next);
        m += 1;
    }
    proper(acc.gcd(n), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matches_repeated_addition() {
        let n: BigUint = "1000000000000000000000007".parse().unwrap();
        let curve = Curve { n: &n, num: BigUint::from(7u32), den: BigUint::from(3u32) };
        let p = (BigUint::from(5u32), BigUint::one());
        let normal = |(x, z): &Point| x * z.modpow(&(&n - 2u32), &n) % &n;
        let mut multiples = alloc::vec![p.clone(), curve.double(&p)];
        for k in 2..40usize {
            let next = curve.add(&multiples[k - 1], &p, &multiples[k - 2]);
            multiples.push(next);
        }
        for k in 1..=40u64 {
            assert_eq!(normal(&curve.multiply(&p, k)), normal(&multiples[k as usize - 1]), "k = {k}");
        }
    }

    #[test]
    fn ecm_splits_semiprime_with_sixteen_digit_factor() {
        let p: BigUint = "1034150930241911".parse().unwrap();
        let q: BigUint = "20986207825565581".parse().unwrap();
        let n = &p * &q;
        let d = ecm_big(&n, 11_000, 1_100_000, 200).expect("split");
        assert!(d == p || d == q);
    }
}
