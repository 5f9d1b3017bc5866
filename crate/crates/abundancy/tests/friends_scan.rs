//! Direct scan: no n ≤ 10^8 other than 10 has σ(n)/n = 9/5.

const LIMIT: u64 = 100_000_000;
const SEGMENT: u64 = 1 << 20;

fn primes_up_to(n: u64) -> Vec<u64> {
    let mut composite = vec![false; n as usize + 1];
    let mut out = Vec::new();
    for i in 2..=n as usize {
        if !composite[i] {
            out.push(i as u64);
            for j in (i * i..=n as usize).step_by(i) {
                composite[j] = true;
            }
        }
    }
    out
}

/// Every `n ≤ limit` with `5σ(n) = 9n`, by a segmented multiplicative sieve.
fn friends_of_ten(limit: u64) -> Vec<u64> {
    let primes = primes_up_to((limit as f64).sqrt() as u64 + 1);
    let mut found = Vec::new();
    let mut lo = 1;
    while lo <= limit {
        let hi = (lo + SEGMENT).min(limit + 1);
        let len = (hi - lo) as usize;
        let mut rest: Vec<u64> = (lo..hi).collect();
        let mut sigma = vec![1u64; len];
        for &p in &primes {
            if p * p >= hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            for n in (first..hi).step_by(p as usize) {
                let i = (n - lo) as usize;
                let (mut pk, mut sum) = (1u64, 1u64);
                while rest[i] % p == 0 {
                    rest[i] /= p;
                    pk *= p;
                    sum += pk;
                }
                sigma[i] *= sum;
            }
        }
        for i in 0..len {
            if rest[i] > 1 {
                sigma[i] *= rest[i] + 1;
            }
            let n = lo + i as u64;
            if 5 * sigma[i] == 9 * n {
                found.push(n);
            }
        }
        lo = hi;
    }
    found
}

#[test]
fn sieve_matches_divisor_sums() {
    let sigma = |n: u64| (1..=n).filter(|d| n % d == 0).sum::<u64>();
    assert_eq!(sigma(10), 18);
    assert_eq!(friends_of_ten(2000), [10]);
    for n in [1u64, 12, 28, 945, 1001] {
        assert_eq!(5 * sigma(n) == 9 * n, n == 10);
    }
}

#[test]
fn no_other_friend_of_ten_below_10_to_the_8() {
    assert_eq!(friends_of_ten(LIMIT), [10]);
}
