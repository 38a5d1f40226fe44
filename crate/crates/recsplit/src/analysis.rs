//! Combinatorics behind rotation fitting, plus a small measurement lab for
//! comparing bijection-search strategies.
//!
//! The central quantity is the expected factor by which trying all `m`
//! rotations of one candidate multiplies the odds of finding a leaf
//! bijection. It reduces to counting rotation equivalence classes of bit
//! strings (necklaces), which the totient-binomial formula gives exactly;
//! everything here is cross-checked against brute-force class enumeration
//! in the tests.

use crate::hash::{node_hash, remap, MasterHashCode};
use crate::search::{
    find_bijection_bruteforce, find_bijection_rotation, SeedResult, SEED_LIMIT,
};
use crate::bits::{mask, rot};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Euler's totient: how many of `1..=d` are coprime to `d`.
pub fn euler_totient(d: u64) -> u64 {
    assert!(d >= 1);
    let mut n = d;
    let mut phi = d;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            phi -= phi / p;
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        phi -= phi / n;
    }
    phi
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        // exact at every step: i consecutive integers contain a multiple of i
        r = r * (n - k + i) as u128 / i as u128;
    }
    r
}

/// Number of length-`m` bit strings with `ones` one bits, counted up to
/// rotation: `(1/m) * sum over d | gcd(m-ones, ones) of phi(d)*C(m/d, ones/d)`.
pub fn necklace_count(m: u32, ones: u32) -> u128 {
    assert!(m >= 1 && ones <= m);
    let g = gcd((m - ones) as u64, ones as u64);
    let mut sum: u128 = 0;
    for d in 1..=g {
        if g % d == 0 {
            sum += euler_totient(d) as u128 * binomial((m as u64) / d, (ones as u64) / d);
        }
    }
    debug_assert_eq!(sum % m as u128, 0);
    sum / m as u128
}

/// Per-split-size view of how much rotation fitting helps.
#[derive(Clone, Copy, Debug)]
pub struct RotationStats {
    pub m: u32,
    /// Keys hashed into set A and set B.
    pub set_a: u32,
    pub set_b: u32,
    pub necklaces: u128,
    /// Chance that one plain seed is a bijection, `m!/m^m`.
    pub p_bijection: f64,
    /// Modeled chance that one rotation-fitting base succeeds.
    pub p_rotation: f64,
    /// `p_rotation / p_bijection`; equals `m` exactly when the set sizes
    /// are coprime.
    pub ratio: f64,
}

fn plain_bijection_probability(m: u32) -> f64 {
    let mut p = 1.0;
    for k in 1..=m {
        p *= k as f64 / m as f64;
    }
    p
}

pub fn rotation_stats(m: u32, set_b: u32) -> RotationStats {
    assert!(m >= 1 && set_b <= m);
    let necklaces = necklace_count(m, set_b);
    let p_bijection = plain_bijection_probability(m);
    let ratio = binomial(m as u64, set_b as u64) as f64 / necklaces as f64;
    RotationStats {
        m,
        set_a: m - set_b,
        set_b,
        necklaces,
        p_bijection,
        p_rotation: p_bijection * ratio,
        ratio,
    }
}

/// Expected multiplier on the per-candidate bijection probability when all
/// `m` rotations of one base seed are tried, averaged over the binomial
/// split of keys into the two sets:
/// `2^-m * sum over b of C(m,b)^2 / necklace_count(m,b)`.
pub fn expected_rotation_factor(m: u32) -> f64 {
    assert!((1..=26).contains(&m));
    let mut sum = 0.0;
    for b in 0..=m {
        let c = binomial(m as u64, b as u64);
        sum += (c * c) as f64 / necklace_count(m, b) as f64;
    }
    sum / (1u128 << m) as f64
}

/// Monte-Carlo estimate of the bijection and any-rotation success
/// probabilities for leaves with a forced `(set_a, set_b)` partition.
///
/// Each trial draws fresh keys with the partition bit pinned and tests one
/// seed. Returns `(p_bijection_hat, p_rotation_hat)`. A bijection implies
/// rotation success at r = 0, so the rotation estimate dominates the
/// bijection estimate trial by trial.
pub fn estimate_rotation_gain(
    set_a: u32,
    set_b: u32,
    trials: u64,
    rng_seed: u64,
) -> (f64, f64) {
    let m = (set_a + set_b) as usize;
    assert!((1..=26).contains(&m));
    let full = mask(m as u32);
    let chunk = 1u64 << 12;
    let tasks = trials.div_ceil(chunk);
    let (bij, rot_hits) = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(task);
            let n = chunk.min(trials - task * chunk);
            let mut bij = 0u64;
            let mut rot_hits = 0u64;
            for _ in 0..n {
                let mut a = 0u64;
                let mut b = 0u64;
                let mut distinct = true;
                let mut occupied = 0u64;
                for i in 0..m {
                    let key = MasterHashCode {
                        high: (rng.gen::<u64>() & !1) | (i >= set_a as usize) as u64,
                        low: rng.gen(),
                    };
                    let bit = 1u64 << remap(node_hash(key, 0), m);
                    if occupied & bit != 0 {
                        distinct = false;
                    }
                    occupied |= bit;
                    if i >= set_a as usize {
                        b |= bit;
                    } else {
                        a |= bit;
                    }
                }
                bij += distinct as u64;
                rot_hits += (0..m as u32).any(|r| a | rot(m as u32, r, b) == full) as u64;
            }
            (bij, rot_hits)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    (bij as f64 / trials as f64, rot_hits as f64 / trials as f64)
}

/// Bijection-search strategies whose cost the lab can measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafStrategy {
    BruteForce,
    RotationFitting,
    ShockHash,
}

impl LeafStrategy {
    pub fn name(self) -> &'static str {
        match self {
            LeafStrategy::BruteForce => "bruteforce",
            LeafStrategy::RotationFitting => "rotation",
            LeafStrategy::ShockHash => "shockhash",
        }
    }
}

/// Mean hash evaluations to find one leaf bijection, over `num_leaves`
/// random key sets. Parallel over leaves; each leaf draws from its own
/// counter-derived stream, so the result is independent of scheduling.
pub fn simulate_leaf_strategies(
    m: usize,
    strategy: LeafStrategy,
    num_leaves: usize,
    rng_seed: u64,
) -> f64 {
    assert!(m >= 1 && num_leaves >= 1);
    let total: u64 = (0..num_leaves as u64)
        .into_par_iter()
        .map(|leaf| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(leaf);
            let keys: Vec<MasterHashCode> = (0..m)
                .map(|_| MasterHashCode {
                    high: rng.gen(),
                    low: rng.gen(),
                })
                .collect();
            let result = match strategy {
                LeafStrategy::BruteForce => find_bijection_bruteforce(&keys, 1),
                LeafStrategy::RotationFitting => find_bijection_rotation(&keys, 1),
                LeafStrategy::ShockHash => shockhash_search(&keys, SEED_LIMIT),
            };
            result.expect("random keys stay under the seed cap").hash_evals
        })
        .sum();
    total as f64 / num_leaves as f64
}

/// Where each key of a successful cuckoo placement landed: `false` for its
/// first candidate cell, `true` for the second.
#[derive(Clone, Debug)]
pub struct ShockHashPlacement {
    pub choices: Vec<bool>,
}

struct CuckooOutcome {
    placement: Option<Vec<Option<usize>>>,
    hash_evals: u64,
}

/// One cuckoo attempt: key `k` may occupy `remap(node_hash(k, 2*seed), m)`
/// or `remap(node_hash(k, 2*seed+1), m)`. Eviction chains longer than `m^2`
/// fail the whole seed. Keys are hashed lazily, two evaluations the first
/// time a key is inserted, nothing on evictions, and keys after an abort
/// are never touched.
fn cuckoo_attempt(keys: &[MasterHashCode], seed: u64) -> CuckooOutcome {
    let m = keys.len();
    let mut cells = vec![(0usize, 0usize); m];
    let mut table: Vec<Option<usize>> = vec![None; m];
    let mut hash_evals = 0u64;
    let cap = m * m;
    for first in 0..m {
        hash_evals += 2;
        cells[first] = (
            remap(node_hash(keys[first], 2 * seed), m),
            remap(node_hash(keys[first], 2 * seed + 1), m),
        );
        let mut key = first;
        let mut pos = cells[first].0;
        let mut placed = false;
        for _ in 0..=cap {
            match table[pos].replace(key) {
                None => {
                    placed = true;
                    break;
                }
                Some(evicted) => {
                    let (c0, c1) = cells[evicted];
                    key = evicted;
                    pos = c0 ^ c1 ^ pos;
                }
            }
        }
        if !placed {
            return CuckooOutcome {
                placement: None,
                hash_evals,
            };
        }
    }
    CuckooOutcome {
        placement: Some(table),
        hash_evals,
    }
}

/// Whether `seed` places all keys, and if so where they ended up.
pub fn shockhash_try_seed(keys: &[MasterHashCode], seed: u64) -> Option<ShockHashPlacement> {
    let m = keys.len();
    let outcome = cuckoo_attempt(keys, seed);
    outcome.placement.map(|table| {
        let mut choices = vec![false; m];
        for (cell, slot) in table.iter().enumerate() {
            let key = slot.expect("full table");
            choices[key] = cell == remap(node_hash(keys[key], 2 * seed + 1), m);
        }
        ShockHashPlacement { choices }
    })
}

/// Smallest seed whose two hash functions place every key, with the same
/// evaluation accounting as the other search kernels.
pub fn shockhash_search(keys: &[MasterHashCode], limit: u64) -> Result<SeedResult> {
    let m = keys.len();
    let mut hash_evals = 0u64;
    for seed in 0..limit {
        let outcome = cuckoo_attempt(keys, seed);
        hash_evals += outcome.hash_evals;
        if outcome.placement.is_some() {
            return Ok(SeedResult {
                stored_value: seed,
                hash_evals,
            });
        }
    }
    Err(Error::SeedLimit {
        node_size: m,
        limit,
    })
}

/// Fraction of seeds that place `m` fresh random keys, over `seed_trials`
/// independent draws.
pub fn shockhash_success_rate(m: usize, seed_trials: u64, rng_seed: u64) -> f64 {
    let chunk = 1u64 << 10;
    let tasks = seed_trials.div_ceil(chunk);
    let hits: u64 = (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(task);
            let n = chunk.min(seed_trials - task * chunk);
            let mut hits = 0u64;
            for _ in 0..n {
                let keys: Vec<MasterHashCode> = (0..m)
                    .map(|_| MasterHashCode {
                        high: rng.gen(),
                        low: rng.gen(),
                    })
                    .collect();
                hits += cuckoo_attempt(&keys, 0).placement.is_some() as u64;
            }
            hits
        })
        .sum();
    hits as f64 / seed_trials as f64
}
