//! Verification suites: brute-force checks of the lemmas the search relies
//! on, plus a completeness check of the engine on planted targets.
//!
//! Every suite is deterministic for a given seed.

use std::time::Instant;

use abundancy_core::arith::{
    abundancy_limit, abundancy_of, abundancy_prime_power, geometric_sum, multiplicative_order, ratio, valuation,
    valuation_uint,
};
use abundancy_core::bounds::{lower_bound, ratios, second_prime_bound, upper_bound};
use abundancy_core::primes::small_primes;
use abundancy_core::valuation::{primitive_order_witness, sigma_valuation, special_contribution, teichmuller_lift};
use abundancy_core::{Engine, EventKind, ExponentKind, Rational, SearchConfig, TerminalEvent, TierFactorizer, TierPolicy};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lemma1,
    Prop4,
    Prop5,
    Prop6,
    Cor7,
    Lemma9,
    EngineOracle,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] =
        [Suite::Lemma1, Suite::Prop4, Suite::Prop5, Suite::Prop6, Suite::Cor7, Suite::Lemma9, Suite::EngineOracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Prop4 => "prop4",
            Suite::Prop5 => "prop5",
            Suite::Prop6 => "prop6",
            Suite::Cor7 => "cor7",
            Suite::Lemma9 => "lemma9",
            Suite::EngineOracle => "engine-oracle",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: u64,
    pub failed: u64,
    /// The first few failures.
    pub failures: Vec<String>,
    pub elapsed: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checks > 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} checks, {} failed ({:.2} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checks,
            self.failed,
            self.elapsed
        )
    }
}

const MAX_LISTED: usize = 20;

struct Tally {
    checks: u64,
    failed: u64,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checks: 0, failed: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED {
                self.failures.push(what());
            }
        }
    }
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// Runs one suite, or all of them in order for [`Suite::All`].
pub fn run(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    if suite == Suite::All {
        return Suite::EACH.iter().flat_map(|s| run(*s, seed)).collect();
    }
    let start = Instant::now();
    let mut t = Tally::new();
    match suite {
        Suite::Lemma1 => lemma1(&mut t, seed),
        Suite::Prop4 => prop4(&mut t, seed),
        Suite::Prop5 => prop5(&mut t),
        Suite::Prop6 => prop6(&mut t),
        Suite::Cor7 => cor7(&mut t),
        Suite::Lemma9 => lemma9(&mut t),
        Suite::EngineOracle => engine_oracle(&mut t, seed),
        Suite::All => unreachable!(),
    }
    vec![SuiteReport {
        suite: suite.name(),
        checks: t.checks,
        failed: t.failed,
        failures: t.failures,
        elapsed: start.elapsed().as_secs_f64(),
    }]
}

fn odd_primes(limit: u32) -> Vec<u64> {
    small_primes(limit + 1).into_iter().filter(|&p| p > 2).map(u64::from).collect()
}

/// `σ(n)` for `n ≤ limit` by a divisor-sum sieve, independent of factoring.
fn sigma_table(limit: usize) -> Vec<u64> {
    let mut s = vec![0u64; limit + 1];
    for d in 1..=limit {
        for m in (d..=limit).step_by(d) {
            s[m] += d as u64;
        }
    }
    s
}

fn lemma1(t: &mut Tally, seed: u64) {
    // (a) and (b)
    let primes: Vec<u64> = small_primes(101).into_iter().map(u64::from).collect();
    for &p in &primes {
        let pb = big(p);
        let floor = ratio(p + 1, p);
        let limit = abundancy_limit(&pb).expect("prime");
        for a in 1..=12u32 {
            let sa = abundancy_prime_power(&pb, a);
            t.check(floor <= sa, || format!("(a) σ₋₁({p}^{a}) below (p+1)/p"));
            t.check(sa < limit, || format!("(a) σ₋₁({p}^{a}) not below p/(p−1)"));
            for b in a + 1..=12 {
                t.check(sa < abundancy_prime_power(&pb, b), || format!("(a) σ₋₁({p}^{a}) ≥ σ₋₁({p}^{b})"));
            }
        }
        for &q in primes.iter().filter(|&&q| q < p) {
            for a in 1..=12u32 {
                let sa = abundancy_prime_power(&pb, a);
                for b in 1..=12u32 {
                    t.check(sa < abundancy_prime_power(&big(q), b), || format!("(b) σ₋₁({p}^{a}) ≥ σ₋₁({q}^{b})"));
                }
            }
        }
    }

    // (c): σ₋₁ of coprime pairs from a sieve, against the library on the
    // product. All pairs up to 200, then random pairs up to 10^4.
    const LIMIT: usize = 10_000;
    let sigma = sigma_table(LIMIT);
    let by_sieve = |n: usize| Rational::new(sigma[n].into(), (n as u64).into());
    let check_pair = |t: &mut Tally, m: usize, n: usize| {
        let lib = abundancy_of(&big((m * n) as u64)).expect("positive");
        t.check(lib == by_sieve(m) * by_sieve(n), || format!("(c) σ₋₁({m}·{n}) not multiplicative"));
    };
    for m in 1..=200 {
        for n in m..=200 {
            if m.gcd(&n) == 1 {
                check_pair(t, m, n);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = 0;
    while sampled < 100_000 {
        let (m, n) = (rng.gen_range(1..=LIMIT), rng.gen_range(1..=LIMIT));
        if m.gcd(&n) == 1 {
            check_pair(t, m, n);
            sampled += 1;
        }
    }

    // (d), (e): divisors never have larger abundancy, and equality forces m = n.
    let lib: Vec<Rational> =
        (0..=LIMIT).map(|n| if n == 0 { Rational::zero() } else { abundancy_of(&big(n as u64)).expect("positive") }).collect();
    for n in 1..=LIMIT {
        t.check(lib[n] == by_sieve(n), || format!("σ₋₁({n}) disagrees with the sieve"));
        for m in (1..=n).filter(|m| n % m == 0) {
            if m == n {
                continue;
            }
            t.check(lib[m] < lib[n], || format!("(d,e) σ₋₁({m}) ≥ σ₋₁({n}) for a proper divisor"));
        }
    }
}

fn prop4(t: &mut Tally, seed: u64) {
    let primes = odd_primes(200);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5052_4f50_34);
    let one = Rational::one();
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=6usize);
        let chosen: Vec<u64> = primes.choose_multiple(&mut rng, k).copied().collect();
        let exps: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
        let n_fz: Vec<(BigUint, u32)> = chosen.iter().zip(&exps).map(|(&p, &a)| (big(p), a)).collect();
        let mut target = one.clone();
        for (p, a) in &n_fz {
            target *= abundancy_prime_power(p, *a);
        }
        let k1 = rng.gen_range(0..k);
        let l1 = rng.gen_range(0..=k1);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        let (known, unknown) = order.split_at(k1);
        let mut unknown = unknown.to_vec();
        unknown.sort_by_key(|&i| chosen[i]);
        let exact: Vec<(BigUint, u32)> = known[..l1].iter().map(|&i| n_fz[i].clone()).collect();
        let floor: Vec<(BigUint, u32)> =
            known[l1..].iter().map(|&i| (n_fz[i].0.clone(), rng.gen_range(1..=exps[i]))).collect();
        let r = ratios(&target, &target, &exact, &floor);
        let (next_p, next_a) = (Rational::from_integer(chosen[unknown[0]].into()), exps[unknown[0]]);
        let desc = || format!("n = {n_fz:?}, exact {exact:?}, floor {floor:?}");
        t.check(r.max > one, || format!("(a) M ≤ 1 for {}", desc()));
        if r.max <= one {
            continue;
        }
        t.check(lower_bound(&r.max, false).is_ok_and(|b| b <= next_p), || format!("(a) 1/(M−1) for {}", desc()));
        if next_a >= 2 {
            t.check(lower_bound(&r.max, true).is_ok_and(|b| b < next_p), || format!("(b) B_low for {}", desc()));
        }
        if r.min > one {
            let ub = upper_bound(&r.min, k as u32, k1 as u32);
            t.check(ub.is_ok_and(|b| next_p < b), || format!("(c) B_high for {}", desc()));
            if k1 + 2 <= k && next_a >= 2 && &r.min * (&next_p - &one) / &next_p > one {
                let second = Rational::from_integer(chosen[unknown[1]].into());
                let g = second_prime_bound(&r.min, k as u32, k1 as u32, &next_p);
                t.check(g.is_ok_and(|g| second < g), || format!("(d) g(A) for {}", desc()));
            }
        }
    }
}

fn prop5(t: &mut Tally) {
    for p in odd_primes(97) {
        let pb = big(p);
        for x in (2..=200u64).filter(|x| x % p != 0) {
            let xb = big(x);
            for a in 1..=30u32 {
                let direct = valuation_uint(&geometric_sum(&xb, a), &pb).expect("nonzero");
                let formula = sigma_valuation(&xb, a, &pb);
                t.check(formula.as_ref().is_ok_and(|v| *v == direct), || {
                    format!("v_{p}(σ-quotient({x}, {a})) = {direct}, formula gave {formula:?}")
                });
            }
        }
    }
    // f_r(q) against the formula's case (b) term
    for q in odd_primes(200) {
        for r in odd_primes(60) {
            let (qb, rb) = (big(q), big(r));
            let f = special_contribution(&qb, &rb);
            let expected = if r == q || (q - 1) % r == 0 {
                0
            } else {
                let o = multiplicative_order(&qb, &rb).expect("coprime").to_u32().expect("small");
                // v_r(σ(q^{o−1})) = v_r(q^o − 1) since r ∤ q − 1 and r ∤ o
                valuation_uint(&geometric_sum(&qb, o - 1), &rb).unwrap_or(0)
            };
            t.check(f == expected, || format!("f_{r}({q}) = {f}, expected {expected}"));
        }
    }
}

fn prop6(t: &mut Tally) {
    let fz = TierFactorizer::new(TierPolicy::default());
    for p in odd_primes(31) {
        for a in (2..=16u32).step_by(2) {
            for d in (2..=a + 1).filter(|d| (a + 1) % d == 0) {
                let w = primitive_order_witness(&big(p), a, d, &fz);
                let ok = w.as_ref().is_ok_and(|q| {
                    geometric_sum(&big(p), a).is_multiple_of(q)
                        && multiplicative_order(&big(p), q).is_ok_and(|o| o == big(d as u64))
                });
                t.check(ok, || format!("σ({p}^{a}) has no prime of order {d}: {w:?}"));
            }
        }
    }
}

/// Exponent vectors `e_i ≥ 1` of length `len` with `Σ e_i ≤ total`.
fn exponent_vectors(len: usize, total: u32) -> Vec<Vec<u32>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for e in 1..=total.saturating_sub(len as u32 - 1) {
        for mut rest in exponent_vectors(len - 1, total - e) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

fn cor7(t: &mut Tally) {
    let primes = odd_primes(50);
    let mut subsets: Vec<Vec<u64>> = Vec::new();
    for (i, &a) in primes.iter().enumerate() {
        for (j, &b) in primes.iter().enumerate().skip(i + 1) {
            subsets.push(vec![a, b]);
            for &c in &primes[j + 1..] {
                subsets.push(vec![a, b, c]);
            }
        }
    }
    for qs in subsets {
        let k = qs.len() as i64;
        for es in exponent_vectors(qs.len(), 4) {
            let fz: Vec<(BigUint, u32)> = qs.iter().zip(&es).map(|(&q, &e)| (big(q), 2 * e)).collect();
            let n: BigUint = fz.iter().map(|(q, a)| num_traits::pow(q.clone(), *a as usize)).product();
            let sigma: BigUint = fz.iter().map(|(q, a)| geometric_sum(q, *a)).product();
            let index = Rational::new(sigma.clone().into(), n.clone().into());
            for (r, a_r) in &fz {
                if !sigma.is_multiple_of(r) {
                    continue;
                }
                let hypothesis = fz.iter().filter(|(q, _)| q > r).all(|(q, _)| valuation(&index, q) == Ok(0));
                if !hypothesis {
                    continue;
                }
                let c: u64 = fz
                    .iter()
                    .filter(|(q, a)| {
                        let coprime = r.gcd(&(q * (q - 1u32))).is_one();
                        coprime
                            && multiplicative_order(q, r)
                                .is_ok_and(|o| (BigUint::from(*a + 1) % o).is_zero())
                    })
                    .map(|(q, _)| special_contribution(q, r))
                    .sum();
                let v_index = valuation(&index, r).expect("nonzero");
                let bound = (k - 1) * (k - 1) + c as i64 - v_index;
                t.check(i64::from(*a_r) <= bound, || {
                    format!("n = {fz:?}, r = {r}: v_r(n) = {a_r} > {bound}")
                });
            }
        }
    }
}

fn lemma9(t: &mut Tally) {
    for p in odd_primes(31) {
        for a in 1..=5u32 {
            let modulus = p.pow(a);
            if modulus > 1_000_000 {
                break;
            }
            for y in 1..p {
                let lift = teichmuller_lift(&big(y), &big(p), a).to_u64().expect("small");
                let roots: Vec<u64> = (0..modulus / p)
                    .map(|i| y + i * p)
                    .filter(|&z| big(z).modpow(&big(p - 1), &big(modulus)).is_one())
                    .collect();
                t.check(roots == [lift], || format!("p = {p}, a = {a}, y = {y}: roots {roots:?}, lift {lift}"));
            }
        }
    }
}

/// A planted odd square for the completeness check.
#[derive(Debug, Clone)]
pub struct PlantedTarget {
    pub n: Vec<(BigUint, u32)>,
    pub config: SearchConfig,
}

/// `count` random odd squares with at most four primes below 1000.
pub fn planted_targets(count: usize, seed: u64) -> Vec<PlantedTarget> {
    let primes = odd_primes(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4f52_4143_4c45);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=4usize);
            let mut chosen: Vec<u64> = primes.choose_multiple(&mut rng, k).copied().collect();
            chosen.sort();
            let n: Vec<(BigUint, u32)> = chosen.iter().map(|&p| (big(p), 2 * rng.gen_range(1..=2u32))).collect();
            let mut target = Rational::one();
            for (p, a) in &n {
                target *= abundancy_prime_power(p, *a);
            }
            let ignored: Vec<BigUint> = num_bigint_primes(target.numer().magnitude());
            let cutoff = n.iter().map(|(p, a)| num_traits::pow(p.clone(), *a as usize)).max().expect("k ≥ 1");
            let config = SearchConfig::new(target, k as u32, ignored, cutoff, big(chosen[0] - 1));
            PlantedTarget { n, config }
        })
        .collect()
}

fn num_bigint_primes(x: &BigUint) -> Vec<BigUint> {
    let fz = abundancy_core::factor::factor(x, &TierPolicy::default());
    assert!(fz.is_complete(), "numerator of a small abundancy must factor");
    fz.primes().cloned().collect()
}

/// Whether an event's data is consistent with the planted factorisation.
pub fn consistent_with(e: &TerminalEvent, n: &[(BigUint, u32)]) -> bool {
    if !matches!(e.kind, EventKind::ExactSolution | EventKind::Candidate) {
        return false;
    }
    let exponent = |p: &BigUint| n.iter().find(|(q, _)| q == p).map(|(_, a)| *a);
    let on_ok = e.state.s_on.iter().all(|o| match (exponent(&o.p), o.kind) {
        (Some(a), ExponentKind::Exact) => a == o.e,
        (Some(a), ExponentKind::Min) => a >= o.e,
        (None, _) => false,
    });
    let off_ok = e.state.s_off.iter().all(|o| exponent(&o.p).is_some_and(|a| a >= o.b));
    on_ok && off_ok
}

/// Branches an oracle walk may visit before the target counts as missed.
pub const ORACLE_BRANCH_BUDGET: u64 = 2_000_000;

/// Result of searching for one planted target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleWalk {
    pub found: bool,
    pub branches: u64,
}

/// Depth-first walk that stops at the first event consistent with `n`, or
/// after `budget` branches.
pub fn find_planted<F: abundancy_core::Factorizer + ?Sized>(
    engine: &Engine<'_, F>,
    n: &[(BigUint, u32)],
    budget: u64,
) -> OracleWalk {
    let mut stack = vec![engine.root()];
    let mut branches = 0;
    while let Some(state) = stack.pop() {
        if branches == budget {
            break;
        }
        branches += 1;
        let expansion = engine.expand(&state);
        if expansion.events.iter().any(|e| consistent_with(e, n)) {
            return OracleWalk { found: true, branches };
        }
        stack.extend(expansion.children.into_iter().rev());
    }
    OracleWalk { found: false, branches }
}

fn engine_oracle(t: &mut Tally, seed: u64) {
    let fz = abundancy_core::factor::MemoFactorizer::new(TierFactorizer::new(TierPolicy::default()));
    for target in planted_targets(50, seed) {
        let engine = match Engine::new(&target.config, &fz) {
            Ok(e) => e,
            Err(e) => {
                t.check(false, || format!("{:?}: config rejected: {e}", target.n));
                continue;
            }
        };
        let walk = find_planted(&engine, &target.n, ORACLE_BRANCH_BUDGET);
        log::debug!("planted {:?}: found {} after {} branches", target.n, walk.found, walk.branches);
        t.check(walk.found, || format!("no event consistent with {:?} in {} branches", target.n, walk.branches));
    }
}
