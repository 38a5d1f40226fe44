//! Splitting-tree shapes, success probabilities, and the Rice schedule.
//!
//! The shape of a bucket's splitting tree is a pure function of the leaf
//! size and the bucket size: given those two numbers, every node's fanout
//! and part sizes are fixed. That determinism is what lets the encoder drop
//! all structural metadata and lets the query side skip whole subtrees by
//! precomputed bit counts.

use crate::analysis::expected_rotation_factor;
use crate::codes::{optimal_rice_parameter, MAX_RICE_PARAMETER};
use crate::error::{Error, Result};

/// Fanouts and aggregation units derived from the leaf size.
///
/// Nodes up to `unit_lower1` split into parts of `leaf_size`, nodes up to
/// `unit_lower2` into parts of `unit_lower1`, and everything larger splits
/// binary with the left child rounded to a multiple of `unit_lower2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeShape {
    pub leaf_size: usize,
    pub fanout_lower1: usize,
    pub fanout_lower2: usize,
    pub unit_lower1: usize,
    pub unit_lower2: usize,
}

pub const MIN_LEAF_SIZE: usize = 2;
pub const MAX_LEAF_SIZE: usize = 24;

/// Derives the tree shape for a leaf size in `2..=24`.
///
/// The two bottom fanouts are `max(2, ceil(0.35 l + 0.55))` and
/// `max(2, ceil(0.21 l + 0.9))`, evaluated in exact integer arithmetic.
pub fn shape_for(leaf_size: usize) -> Result<TreeShape> {
    if !(MIN_LEAF_SIZE..=MAX_LEAF_SIZE).contains(&leaf_size) {
        return Err(Error::InvalidConfig(format!(
            "leaf size {leaf_size} outside {MIN_LEAF_SIZE}..={MAX_LEAF_SIZE}"
        )));
    }
    let f1 = ((35 * leaf_size + 55) + 99) / 100;
    let f2 = ((21 * leaf_size + 90) + 99) / 100;
    let fanout_lower1 = f1.max(2);
    let fanout_lower2 = f2.max(2);
    let unit_lower1 = fanout_lower1 * leaf_size;
    let unit_lower2 = fanout_lower2 * unit_lower1;
    Ok(TreeShape {
        leaf_size,
        fanout_lower1,
        fanout_lower2,
        unit_lower1,
        unit_lower2,
    })
}

/// One splitting node: `fanout` parts where every part except the last has
/// exactly `unit` keys and the last takes the remainder.
///
/// Invariant: `unit * (fanout - 1) < size <= unit * fanout`, so the last
/// part holds between 1 and `unit` keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeSplit {
    pub size: usize,
    pub fanout: usize,
    pub unit: usize,
}

impl NodeSplit {
    #[inline]
    pub fn part_size(&self, i: usize) -> usize {
        debug_assert!(i < self.fanout);
        if i + 1 < self.fanout {
            self.unit
        } else {
            self.size - self.unit * (self.fanout - 1)
        }
    }

    pub fn part_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.fanout).map(move |i| self.part_size(i))
    }

    /// Keys before part `i` in the reordered bucket.
    #[inline]
    pub fn prefix(&self, i: usize) -> usize {
        if i == self.fanout {
            self.size
        } else {
            self.unit * i
        }
    }

    /// Part index of a hash cell in `0..size`.
    #[inline]
    pub fn part_of(&self, cell: usize) -> usize {
        debug_assert!(cell < self.size);
        (cell / self.unit).min(self.fanout - 1)
    }
}

/// A node is either small enough to hash directly or gets split further.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf { size: usize },
    Split(NodeSplit),
}

/// The split (or leaf) for a node of `size` keys.
pub fn split_node(size: usize, shape: &TreeShape) -> Node {
    debug_assert!(size >= 1);
    if size <= shape.leaf_size {
        return Node::Leaf { size };
    }
    let (fanout, unit) = if size <= shape.unit_lower1 {
        (size.div_ceil(shape.leaf_size), shape.leaf_size)
    } else if size <= shape.unit_lower2 {
        (size.div_ceil(shape.unit_lower1), shape.unit_lower1)
    } else {
        // Left child rounds half the node up to a full lower2 multiple so
        // deep subtrees share sizes; cap keeps the right child nonempty.
        let unit = (size.div_ceil(2 * shape.unit_lower2) * shape.unit_lower2).min(size - 1);
        (2, unit)
    };
    Node::Split(NodeSplit { size, fanout, unit })
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Probability that a uniformly random seed splits the node exactly into
/// its target part sizes: the multinomial `s! / prod(c_i!) * prod((c_i/s)^c_i)`.
///
/// Evaluated through log-factorials; exact enough for Rice scheduling even
/// at sizes in the thousands.
pub fn split_success_probability(split: &NodeSplit) -> f64 {
    let s = split.size;
    let mut ln_p = ln_factorial(s);
    for c in split.part_sizes() {
        ln_p -= ln_factorial(c);
        ln_p += c as f64 * ((c as f64 / s as f64).ln());
    }
    ln_p.exp()
}

/// Probability that one seed trial yields a bijection on an `m`-key leaf.
///
/// Brute force: `m!/m^m`. With rotation fitting one trial covers a whole
/// rotation class, which multiplies the odds by the expected class yield.
pub fn bijection_success_probability(m: usize, rotation_fitting: bool) -> f64 {
    debug_assert!((1..=MAX_LEAF_SIZE).contains(&m));
    let mut p = 1.0;
    for k in 1..=m {
        p *= k as f64 / m as f64;
    }
    if rotation_fitting {
        p *= expected_rotation_factor(m as u32);
    }
    p
}

fn mobius(mut x: u64) -> i64 {
    let mut mu = 1i64;
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            x /= d;
            if x % d == 0 {
                return 0;
            }
            mu = -mu;
        }
        d += 1;
    }
    if x > 1 {
        mu = -mu;
    }
    mu
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c = 1u64;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// How the `C(m, ones)` masks of width `m` distribute over rotation periods:
/// `(period, number of masks whose class has that period)` pairs, by Mobius
/// inversion over the divisors of `m`. Periods absent from the result hold
/// no masks.
fn rotation_class_masses(m: u64, ones: u64) -> Vec<(u64, u64)> {
    // Masks fixed by a rotation of e steps, i.e. with period dividing e.
    let fixed = |e: u64| {
        if ones * e % m == 0 {
            binomial(e, ones * e / m)
        } else {
            0
        }
    };
    let mut out = Vec::new();
    for e in 1..=m {
        if m % e != 0 || ones * e % m != 0 {
            continue;
        }
        let mut exact = 0i64;
        for d in 1..=e {
            if e % d == 0 {
                exact += mobius(e / d) * fixed(d) as i64;
            }
        }
        debug_assert!(exact >= 0 && exact as u64 % e == 0);
        if exact > 0 {
            out.push((e, exact as u64));
        }
    }
    out
}

/// Expected Rice quotient `E[(step*G + r) >> tau]` for `G` geometric with
/// failure probability `q`. Tail-summing gives `sum_j q^ceil((j*2^tau - r)
/// / step)`; the exponent pattern repeats every `step/gcd(2^tau, step)`
/// terms with a constant gain, so the series closes in that many powf calls.
fn rice_quotient_mean(step: u64, r: u64, tau: u32, q: f64) -> f64 {
    let t = 1u128 << tau;
    let g = 1u128 << (tau.min(step.trailing_zeros())) as u64;
    let terms = step as u128 / g;
    let gain = t / g;
    let mut head = 0.0;
    for j in 1..=terms {
        let num = (j * t).saturating_sub(r as u128);
        let e = (num + step as u128 - 1) / step as u128;
        head += q.powf(e as f64);
    }
    head / (1.0 - q.powf(gain as f64))
}

/// Rice parameter minimizing the expected code length of a leaf's stored
/// value.
///
/// Brute force stores a plain geometric seed, so the classic optimum
/// applies. Rotation fitting stores `m*g + r`, and neither part is
/// geometric on its own: the partition bit is a fixed property of each key,
/// so a leaf keeps its B-count through the whole scan and `g` is geometric
/// with a per-B-count rate (a leaf that drew a lopsided partition searches
/// far longer than the average rate suggests), while `r` is uniform over
/// the period of the matched rotation class. The scan below prices every
/// candidate parameter against that exact mixture.
fn leaf_rice_parameter(m: usize, rotation_fitting: bool) -> u32 {
    if !rotation_fitting || m == 1 {
        return optimal_rice_parameter(bijection_success_probability(m, false));
    }
    let p_bij = bijection_success_probability(m, false);
    let m64 = m as u64;
    let mut components = Vec::with_capacity(m + 1);
    for ones in 0..=m64 {
        let weight = binomial(m64, ones) as f64 / (1u64 << m) as f64;
        let masses = rotation_class_masses(m64, ones);
        // Success pairs a uniform random mask with a uniform random class
        // mate, so a class of size s carries s^2 of the success mass.
        let sum_sq: u64 = masses.iter().map(|&(e, g)| e * g).sum();
        let count: u64 = masses.iter().map(|&(_, g)| g).sum();
        debug_assert_eq!(count, binomial(m64, ones));
        let p_fit = p_bij * sum_sq as f64 / count as f64;
        components.push((weight, p_fit, masses, sum_sq as f64));
    }
    let mut best = (f64::INFINITY, 0u32);
    for tau in 0..=MAX_RICE_PARAMETER {
        if (tau + 1) as f64 > best.0 {
            break;
        }
        let mut cost = (tau + 1) as f64;
        for (weight, p_fit, masses, sum_sq) in &components {
            let q = 1.0 - p_fit;
            for &(e, masks) in masses {
                let class_w = (e * masks) as f64 / sum_sq;
                let mut s = 0.0;
                for r in 0..e {
                    s += rice_quotient_mean(m64, r, tau, q);
                }
                cost += weight * class_w * s / e as f64;
            }
        }
        if cost < best.0 {
            best = (cost, tau);
        }
    }
    best.1
}

/// Precomputed per-node-size tables: Rice parameter, subtree node count,
/// and subtree fixed-bit total, for every size up to the largest bucket.
///
/// `nodes` and `fixed_bits` are what the query path needs to skip a sibling
/// subtree inside the merged per-bucket encoding without decoding it.
#[derive(Clone, Debug)]
pub struct RiceParams {
    shape: TreeShape,
    tau: Vec<u32>,
    nodes: Vec<u32>,
    fixed_bits: Vec<u64>,
}

/// Builds the Rice schedule for node sizes `0..=max_bucket_size`.
///
/// Split nodes take the geometric optimum for their per-seed success
/// probability; leaves get the strategy-aware optimum of
/// [`leaf_rice_parameter`].
pub fn rice_schedule(
    leaf_size: usize,
    max_bucket_size: usize,
    rotation_fitting: bool,
) -> Result<RiceParams> {
    let shape = shape_for(leaf_size)?;
    let n = max_bucket_size + 1;
    let mut tau = vec![0u32; n];
    let mut nodes = vec![0u32; n];
    let mut fixed_bits = vec![0u64; n];
    for s in 1..n {
        match split_node(s, &shape) {
            Node::Leaf { size } => {
                tau[s] = leaf_rice_parameter(size, rotation_fitting);
                nodes[s] = 1;
                fixed_bits[s] = tau[s] as u64;
            }
            Node::Split(split) => {
                tau[s] = optimal_rice_parameter(split_success_probability(&split));
                let mut nc = 1u32;
                let mut fb = tau[s] as u64;
                for c in split.part_sizes() {
                    nc += nodes[c];
                    fb += fixed_bits[c];
                }
                nodes[s] = nc;
                fixed_bits[s] = fb;
            }
        }
    }
    Ok(RiceParams {
        shape,
        tau,
        nodes,
        fixed_bits,
    })
}

impl RiceParams {
    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn max_size(&self) -> usize {
        self.tau.len() - 1
    }

    #[inline]
    pub fn tau(&self, size: usize) -> u32 {
        self.tau[size]
    }

    /// Seeds stored in the subtree rooted at a node of `size` keys.
    #[inline]
    pub fn subtree_nodes(&self, size: usize) -> usize {
        self.nodes[size] as usize
    }

    /// Fixed-part bits of that whole subtree.
    #[inline]
    pub fn subtree_fixed_bits(&self, size: usize) -> u64 {
        self.fixed_bits[size]
    }
}
