//! Exact-arithmetic building blocks and the depth-first factor-chain search
//! for positive integers `n` whose abundancy index `σ(n)/n` lies in a given
//! rational interval.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure: file
//! formats, the persistent factor cache, the FactorDB client and the CLI live
//! in the companion `abundancy` crate.
//!
//! Layout:
//!
//! * [`arith`]: rationals, `σ`, abundancy, valuations, multiplicative orders,
//!   exact ceiling logarithms.
//! * [`primes`] and [`factor`]: strong-pseudoprime testing, prime iteration,
//!   trial division, Pollard rho (Brent) and `p − 1`, cyclotomic splitting of
//!   `σ(p^a)`.
//! * [`bounds`]: the window that must contain the smallest unknown prime.
//! * [`valuation`]: valuation formulas for `σ(p^a)`, primitive-divisor
//!   witnesses, the special-prime exponent test and ceil-log certification.
//! * [`search`]: the branch expansion and the sequential driver.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arith;
pub mod bounds;
pub mod factor;
pub mod primes;
pub mod search;
pub mod valuation;

pub use arith::{Exponent, PrimePower, Rational};
pub use factor::{FactorSource, FactorStatus, Factorization, Factorizer, TierFactorizer, TierPolicy};
pub use search::{
    BranchState, Engine, EngineOptions, EventKind, ExponentKind, OffEntry, OnEntry, SearchConfig,
    SearchStats, TerminalEvent,
};
pub use valuation::SpecialPrimeSpec;
