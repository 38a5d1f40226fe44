//! Seed search kernels: leaf bijections and node splittings.
//!
//! Each kernel scans candidate seeds in ascending order and returns the
//! smallest one that works, together with the number of hash evaluations
//! spent. The batched variants try `batch_width` consecutive candidates per
//! pass over the keys but are contractually equivalent to the scalar ones:
//! same stored value, same evaluation count, on every input.
//!
//! Evaluation counting is the cost model used by the analysis module and
//! the benchmark CLI: one count per `node_hash` call made by the search
//! itself. Brute force stops hashing a candidate's remaining keys at the
//! first in-mask collision; rotation fitting always hashes all keys of a
//! candidate because the two masks must be complete before any rotation
//! can be judged; splittings hash all keys since the verdict needs every
//! counter. Post-success work (reordering keys into part order) is not a
//! search cost and is excluded.

use crate::bits::{mask, rot};
use crate::error::{Error, Result};
use crate::hash::{ab_partition_bit, node_hash, remap, MasterHashCode};
use crate::tree::NodeSplit;

/// Hard cap on any per-node seed scan. Expected trial counts for leaf sizes
/// up to 24 are many orders of magnitude below this; hitting the cap means
/// the input is degenerate (duplicate hash codes).
pub const SEED_LIMIT: u64 = 1 << 32;

/// Outcome of one node's seed search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedResult {
    /// Minimal valid value under the strategy's ordering; this is what gets
    /// Golomb-Rice coded. Plain seed for brute force and splittings,
    /// `base_seed + rotation` for rotation fitting.
    pub stored_value: u64,
    /// Hash evaluations spent by the search.
    pub hash_evals: u64,
}

fn seed_limit_error(node_size: usize) -> Error {
    Error::SeedLimit {
        node_size,
        limit: SEED_LIMIT,
    }
}

/// Smallest seed whose `node_hash` maps the keys bijectively onto `[0, m)`.
pub fn find_bijection_bruteforce(keys: &[MasterHashCode], batch_width: u32) -> Result<SeedResult> {
    bruteforce_limited(keys, batch_width, SEED_LIMIT)
}

fn bruteforce_limited(keys: &[MasterHashCode], batch_width: u32, limit: u64) -> Result<SeedResult> {
    debug_assert!(batch_width >= 1);
    let m = keys.len();
    debug_assert!((1..=64).contains(&m));
    if batch_width == 1 {
        return bruteforce_scalar(keys, limit);
    }
    let full = mask(m as u32);
    let lanes = batch_width as usize;
    let mut masks = vec![0u64; lanes];
    let mut alive = vec![false; lanes];
    let mut lane_evals = vec![0u64; lanes];
    let mut hash_evals = 0u64;
    let mut base = 0u64;
    while base < limit {
        let active = lanes.min((limit - base) as usize);
        masks[..active].fill(0);
        alive[..active].fill(true);
        lane_evals[..active].fill(0);
        let mut live = active;
        for &key in keys {
            for lane in 0..active {
                if !alive[lane] {
                    continue;
                }
                lane_evals[lane] += 1;
                let bit = 1u64 << remap(node_hash(key, base + lane as u64), m);
                if masks[lane] & bit != 0 {
                    alive[lane] = false;
                    live -= 1;
                } else {
                    masks[lane] |= bit;
                }
            }
            if live == 0 {
                break;
            }
        }
        // A lane alive after all m keys has m distinct bits, i.e. the full
        // mask; the lowest such lane is the overall smallest seed. Lanes
        // past the winner are not charged, keeping the count equal to the
        // scalar scan that never visits them.
        for lane in 0..active {
            hash_evals += lane_evals[lane];
            if alive[lane] {
                debug_assert_eq!(masks[lane], full);
                return Ok(SeedResult {
                    stored_value: base + lane as u64,
                    hash_evals,
                });
            }
        }
        base += active as u64;
    }
    Err(seed_limit_error(m))
}

fn bruteforce_scalar(keys: &[MasterHashCode], limit: u64) -> Result<SeedResult> {
    let m = keys.len();
    let full = mask(m as u32);
    let mut hash_evals = 0u64;
    for seed in 0..limit {
        let mut bits = 0u64;
        let mut collided = false;
        for &key in keys {
            hash_evals += 1;
            let bit = 1u64 << remap(node_hash(key, seed), m);
            if bits & bit != 0 {
                collided = true;
                break;
            }
            bits |= bit;
        }
        if !collided {
            debug_assert_eq!(bits, full);
            return Ok(SeedResult {
                stored_value: seed,
                hash_evals,
            });
        }
    }
    Err(seed_limit_error(m))
}

/// Builds the A and B masks for one candidate base seed; m evaluations.
#[inline]
fn ab_masks(keys: &[MasterHashCode], m: usize, seed: u64) -> (u64, u64) {
    let mut a = 0u64;
    let mut b = 0u64;
    for &key in keys {
        let bit = 1u64 << remap(node_hash(key, seed), m);
        if ab_partition_bit(key) {
            b |= bit;
        } else {
            a |= bit;
        }
    }
    (a, b)
}

/// Smallest rotation `r` with `a | rot(m, r, b)` all ones, scanning upward.
fn first_valid_rotation(a: u64, b: u64, m: usize) -> Option<u32> {
    let full = mask(m as u32);
    (0..m as u32).find(|&r| a | rot(m as u32, r, b) == full)
}

/// Smallest `base + r` such that the A-mask and the `r`-rotated B-mask of
/// base seed `base` cover `[0, m)`; bases are multiples of `m`.
///
/// The stored value is minimal in lexicographic `(base, r)` order, which
/// coincides with numeric order because `r < m`.
pub fn find_bijection_rotation(keys: &[MasterHashCode], batch_width: u32) -> Result<SeedResult> {
    rotation_search(keys, batch_width, None)
}

/// Rotation table for the lookup-based variant: `table[v]` is the smallest
/// left-rotation count that minimizes the numeric value of `v`'s rotation
/// class in `m` bits.
#[derive(Clone, Debug)]
pub struct RotationTable {
    m: usize,
    t: Vec<u8>,
}

pub fn normalize_rotation_lookup(m: usize) -> RotationTable {
    assert!((1..=16).contains(&m), "table is 2^m entries, m = {m}");
    let t = (0..1u64 << m)
        .map(|v| {
            let mut best_r = 0u32;
            let mut best = v;
            for r in 1..m as u32 {
                let rotated = rot(m as u32, r, v);
                if rotated < best {
                    best = rotated;
                    best_r = r;
                }
            }
            best_r as u8
        })
        .collect();
    RotationTable { m, t }
}

impl RotationTable {
    #[inline]
    fn rotation_to_minimal(&self, v: u64) -> u32 {
        self.t[v as usize] as u32
    }
}

/// Smallest period of `v` under rotation in `m` bits; divides `m`.
fn rotation_period(m: usize, v: u64) -> u32 {
    (1..m as u32)
        .find(|&d| m as u32 % d == 0 && rot(m as u32, d, v) == v)
        .unwrap_or(m as u32)
}

/// Rotation fitting with the candidate rotation derived from two table
/// lookups instead of scanning all `m` rotations.
///
/// A rotation aligns the B-mask onto the holes of the A-mask exactly when
/// the complement of `b` and `a` share a rotation class; the lookup gives
/// the aligning rotation directly and the full mask test vets it, which
/// also rejects bases where either mask lost bits to collisions. Reducing
/// the candidate modulo the mask's rotation period yields the same minimal
/// `r` the scanning variant finds.
pub fn find_bijection_rotation_lut(
    keys: &[MasterHashCode],
    table: &RotationTable,
    batch_width: u32,
) -> Result<SeedResult> {
    assert_eq!(table.m, keys.len());
    rotation_search(keys, batch_width, Some(table))
}

fn lut_candidate_rotation(a: u64, b: u64, m: usize, table: &RotationTable) -> u32 {
    let full = mask(m as u32);
    let b_hat = !b & full;
    let r = (table.rotation_to_minimal(b_hat) + m as u32 - table.rotation_to_minimal(a))
        % m as u32;
    r % rotation_period(m, b_hat)
}

fn rotation_search(
    keys: &[MasterHashCode],
    batch_width: u32,
    table: Option<&RotationTable>,
) -> Result<SeedResult> {
    debug_assert!(batch_width >= 1);
    let m = keys.len();
    debug_assert!((1..=64).contains(&m));
    let full = mask(m as u32);
    let step = m as u64;
    let find_r = |a: u64, b: u64| -> Option<u32> {
        match table {
            Some(t) => {
                let r = lut_candidate_rotation(a, b, m, t);
                (a | rot(m as u32, r, b) == full).then_some(r)
            }
            None => first_valid_rotation(a, b, m),
        }
    };

    if batch_width == 1 {
        let mut hash_evals = 0u64;
        let mut base = 0u64;
        while base < SEED_LIMIT {
            let (a, b) = ab_masks(keys, m, base);
            hash_evals += m as u64;
            if let Some(r) = find_r(a, b) {
                return Ok(SeedResult {
                    stored_value: base + r as u64,
                    hash_evals,
                });
            }
            base += step;
        }
        return Err(seed_limit_error(m));
    }

    let lanes = batch_width as usize;
    let mut a_masks = vec![0u64; lanes];
    let mut b_masks = vec![0u64; lanes];
    let mut hash_evals = 0u64;
    let mut batch_start = 0u64;
    while batch_start < SEED_LIMIT {
        a_masks.fill(0);
        b_masks.fill(0);
        for &key in keys {
            let is_b = ab_partition_bit(key);
            for lane in 0..lanes {
                let seed = batch_start + lane as u64 * step;
                let bit = 1u64 << remap(node_hash(key, seed), m);
                if is_b {
                    b_masks[lane] |= bit;
                } else {
                    a_masks[lane] |= bit;
                }
            }
        }
        // Bases ascend across lanes and r < m, so the first lane with any
        // valid rotation holds the minimal base + r of the whole batch.
        for lane in 0..lanes {
            hash_evals += m as u64;
            if let Some(r) = find_r(a_masks[lane], b_masks[lane]) {
                return Ok(SeedResult {
                    stored_value: batch_start + lane as u64 * step + r as u64,
                    hash_evals,
                });
            }
        }
        batch_start += lanes as u64 * step;
    }
    Err(seed_limit_error(m))
}

/// Smallest seed distributing the keys into exactly the split's part sizes;
/// on success the keys are reordered in place into part order (stable).
pub fn find_splitting(
    keys: &mut [MasterHashCode],
    split: &NodeSplit,
    batch_width: u32,
) -> Result<SeedResult> {
    debug_assert!(batch_width >= 1);
    let s = keys.len();
    assert_eq!(s, split.size);
    debug_assert!(s >= 2);
    let result = if split.fanout == 2 {
        split_pair(keys, split, batch_width)
    } else {
        split_packed(keys, split, batch_width)
    }?;
    reorder_by_part(keys, split, result.stored_value);
    Ok(result)
}

fn split_pair(keys: &[MasterHashCode], split: &NodeSplit, batch_width: u32) -> Result<SeedResult> {
    let s = split.size;
    let left_target = split.part_size(0);
    let lanes = batch_width as usize;
    let mut counts = vec![0usize; lanes];
    let mut hash_evals = 0u64;
    let mut batch_start = 0u64;
    while batch_start < SEED_LIMIT {
        let active = lanes.min((SEED_LIMIT - batch_start) as usize);
        counts[..active].fill(0);
        for &key in keys {
            for (lane, count) in counts[..active].iter_mut().enumerate() {
                let cell = remap(node_hash(key, batch_start + lane as u64), s);
                *count += (cell < split.unit) as usize;
            }
        }
        for (lane, &count) in counts[..active].iter().enumerate() {
            hash_evals += s as u64;
            if count == left_target {
                return Ok(SeedResult {
                    stored_value: batch_start + lane as u64,
                    hash_evals,
                });
            }
        }
        batch_start += active as u64;
    }
    Err(seed_limit_error(s))
}

fn split_packed(
    keys: &[MasterHashCode],
    split: &NodeSplit,
    batch_width: u32,
) -> Result<SeedResult> {
    let s = split.size;
    let fanout = split.fanout;
    // One byte-wide counter per part except the last, all in a single word.
    // Aggregation-level targets are at most 9 parts of at most 216 keys, so
    // both the slot count and the target values fit.
    debug_assert!(fanout <= 9 && split.unit < 256);
    let target: u64 = (0..fanout - 1).fold(0u64, |acc, i| acc | (split.unit as u64) << (8 * i));
    let lanes = batch_width as usize;
    let mut accs = vec![0u64; lanes];
    let mut hash_evals = 0u64;
    let mut batch_start = 0u64;
    while batch_start < SEED_LIMIT {
        let active = lanes.min((SEED_LIMIT - batch_start) as usize);
        accs[..active].fill(0);
        for &key in keys {
            for (lane, acc) in accs[..active].iter_mut().enumerate() {
                let part = split.part_of(remap(node_hash(key, batch_start + lane as u64), s));
                if part < fanout - 1 {
                    *acc += 1u64 << (8 * part);
                }
            }
        }
        for (lane, &acc) in accs[..active].iter().enumerate() {
            hash_evals += s as u64;
            if acc == target {
                return Ok(SeedResult {
                    stored_value: batch_start + lane as u64,
                    hash_evals,
                });
            }
        }
        batch_start += active as u64;
    }
    Err(seed_limit_error(s))
}

/// Stable counting sort of the keys into part order under the found seed.
fn reorder_by_part(keys: &mut [MasterHashCode], split: &NodeSplit, seed: u64) {
    let s = keys.len();
    let mut cursors = [0usize; 10];
    for &key in keys.iter() {
        cursors[split.part_of(remap(node_hash(key, seed), s)) + 1] += 1;
    }
    for i in 0..split.fanout {
        debug_assert_eq!(cursors[i + 1], split.part_size(i), "part {i} count");
        cursors[i + 1] += cursors[i];
    }
    let snapshot = keys.to_vec();
    for key in snapshot {
        let part = split.part_of(remap(node_hash(key, seed), s));
        keys[cursors[part]] = key;
        cursors[part] += 1;
    }
}
