//! Exact probabilities for what balanced forwarding does to repeated
//! measurements. Everything returns rationals — no floating point, so
//! results can be compared exactly against enumeration.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Pow, Zero};

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Number of functions from an n-set onto a k-set, by
/// inclusion–exclusion over the missed elements.
pub fn surjection_count(n: u32, k: u32) -> BigInt {
    let mut total = BigInt::zero();
    for i in 0..=k {
        let term = binomial(k as u64, i as u64) * BigInt::from(k - i).pow(n);
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Probability that n independent uniform draws over k equally likely
/// next-hops leave at least one next-hop unseen — i.e. that probing a
/// k-way balanced hop n times misses part of the topology.
pub fn missing_router_probability(n: u32, k: u32) -> BigRational {
    assert!(k >= 1, "a hop has at least one next-hop");
    let covered = BigRational::new(surjection_count(n, k), BigInt::from(k).pow(n));
    BigRational::one() - covered
}

/// Probability that `measurements` independent per-packet draws through
/// a `branches`-way balancer all follow one identical path:
/// branches^(1 - measurements).
pub fn identical_path_probability(branches: u32, measurements: u32) -> BigRational {
    assert!(branches >= 1);
    assert!(measurements >= 1);
    BigRational::new(BigInt::one(), BigInt::from(branches).pow(measurements - 1))
}
