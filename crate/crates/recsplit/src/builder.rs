//! Construction: hash the keys, bucket them, brute-force each bucket's
//! splitting tree, and pack the seeds into the final bit stream.
//!
//! Buckets are independent, so threads take contiguous bucket ranges and
//! encode into private bit vectors that are concatenated in bucket order
//! afterwards. The output is byte-identical for every thread count and
//! batch width; seeds depend only on the key set and configuration.

use crate::bits::{mask, BitVector};
use crate::codes::ef_build;
use crate::error::{Error, Result};
use crate::hash::{bucket_of, master_hash, MasterHashCode, MphfConfig};
use crate::mphf::{predict_offset, RecSplitMphf, SLOPE_FRACTION_BITS};
use crate::search::{
    find_bijection_bruteforce, find_bijection_rotation, find_bijection_rotation_lut,
    find_splitting, normalize_rotation_lookup, RotationTable, SeedResult,
};
use crate::tree::{rice_schedule, split_node, Node, RiceParams};
use rayon::prelude::*;

/// Slope candidates for the offsets index, as twentieths of the mean.
const SLOPE_GRID: u32 = 20;

/// Size in bits of an Elias-Fano index over `count` values in `universe`,
/// without the select samples, which are the same for every slope.
fn ef_cost(universe: u64, count: usize) -> u128 {
    let ratio = if count == 0 { 0 } else { universe / count as u64 };
    let low = if ratio <= 1 { 0 } else { 63 - ratio.leading_zeros() };
    count as u128 * (low as u128 + 1) + (universe >> low) as u128
}

/// Work counters from one construction run.
#[derive(Clone, Copy, Debug)]
pub struct BuildStats {
    /// Hash evaluations spent searching seeds, summed over all nodes. The
    /// count covers only the search itself, not key hashing or the reorder
    /// pass after a successful split.
    pub hash_evals: u64,
    pub max_bucket_size: usize,
}

/// Builds a minimal perfect hash function over `keys`.
///
/// Keys must be distinct. `thread_count` is the number of worker threads
/// used for hashing, sorting, and bucket encoding; 1 runs everything on
/// the calling thread.
pub fn build<K: AsRef<[u8]> + Sync>(
    keys: &[K],
    config: &MphfConfig,
    thread_count: usize,
) -> Result<RecSplitMphf> {
    build_with_stats(keys, config, thread_count).map(|(f, _)| f)
}

pub fn build_with_stats<K: AsRef<[u8]> + Sync>(
    keys: &[K],
    config: &MphfConfig,
    thread_count: usize,
) -> Result<(RecSplitMphf, BuildStats)> {
    config.validate()?;
    if thread_count < 1 {
        return Err(Error::InvalidConfig(
            "thread count must be at least 1".into(),
        ));
    }
    if keys.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = keys.len();

    let pool = if thread_count > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(thread_count)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut codes: Vec<MasterHashCode> = match &pool {
        Some(p) => p.install(|| {
            keys.par_iter()
                .map(|k| master_hash(k.as_ref(), config.global_seed))
                .collect()
        }),
        None => keys
            .iter()
            .map(|k| master_hash(k.as_ref(), config.global_seed))
            .collect(),
    };
    // Bucket indexes are monotone in the sort order, so one sort both
    // groups the buckets and exposes duplicates as neighbors.
    match &pool {
        Some(p) => p.install(|| codes.par_sort_unstable()),
        None => codes.sort_unstable(),
    }
    if codes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateKeys);
    }

    let num_buckets = n.div_ceil(config.bucket_size);
    let starts = bucket_starts(&codes, num_buckets);
    let max_bucket_size = starts.windows(2).map(|w| w[1] - w[0]).max().unwrap();
    let rice = rice_schedule(
        config.leaf_size as usize,
        max_bucket_size.max(1),
        config.rotation_fitting,
    )?;
    let luts: Option<Vec<RotationTable>> = config.use_rotation_lut.then(|| {
        (1..=config.leaf_size as usize)
            .map(normalize_rotation_lookup)
            .collect()
    });
    let encoder = BucketEncoder {
        rice: &rice,
        luts: luts.as_deref(),
        rotation: config.rotation_fitting,
        batch_width: config.batch_width,
    };

    // Contiguous bucket ranges per task; the key array splits at bucket
    // boundaries so each task owns its slice.
    let chunk_count = thread_count.min(num_buckets);
    let buckets_per_chunk = num_buckets.div_ceil(chunk_count);
    let mut tasks: Vec<(&mut [MasterHashCode], usize, usize)> = Vec::with_capacity(chunk_count);
    let mut rest: &mut [MasterHashCode] = &mut codes;
    let mut consumed = 0usize;
    for c in 0..chunk_count {
        let lo = c * buckets_per_chunk;
        let hi = ((c + 1) * buckets_per_chunk).min(num_buckets);
        if lo >= hi {
            break;
        }
        let (chunk, tail) = rest.split_at_mut(starts[hi] - consumed);
        consumed = starts[hi];
        rest = tail;
        tasks.push((chunk, lo, hi));
    }

    let outs: Vec<ChunkOut> = match &pool {
        Some(p) => p.install(|| {
            tasks
                .into_par_iter()
                .map(|(chunk, lo, hi)| encode_chunk(&encoder, chunk, &starts, lo, hi))
                .collect::<Result<Vec<_>>>()
        })?,
        None => tasks
            .into_iter()
            .map(|(chunk, lo, hi)| encode_chunk(&encoder, chunk, &starts, lo, hi))
            .collect::<Result<Vec<_>>>()?,
    };

    let total_bits: usize = outs.iter().map(|o| o.bits.len()).sum();
    let mut encoding = BitVector::with_capacity(total_bits);
    let mut offsets: Vec<u64> = Vec::with_capacity(num_buckets + 1);
    offsets.push(0);
    let mut hash_evals = 0u64;
    for out in &outs {
        for &len in &out.bucket_bits {
            offsets.push(offsets.last().unwrap() + len);
        }
        encoding.extend_from(&out.bits);
        hash_evals += out.hash_evals;
    }
    debug_assert_eq!(*offsets.last().unwrap() as usize, encoding.len());

    let size_values: Vec<u64> = starts.iter().map(|&s| s as u64).collect();
    let sizes = ef_build(&size_values, n as u64)?;

    // Bucket offsets grow almost linearly in the key prefix counts, so only
    // the residual against a fixed-point linear predictor is stored. A
    // constant per-bucket correction makes the residuals monotone again;
    // both constants travel with the function.
    //
    // The mean bits-per-key slope minimizes drift but its index universe
    // pays num_buckets * corr for the single worst residual drop. A smaller
    // slope trades a little uniform drift for a much smaller correction, so
    // the builder tries a grid of slopes and keeps the cheapest index.
    let mean_fp = (((total_bits as u128) << SLOPE_FRACTION_BITS) / n as u128) as u64;
    let (slope_fp, corr) = (0..=SLOPE_GRID)
        .map(|g| {
            let slope_fp = ((mean_fp as u128 * g as u128) / SLOPE_GRID as u128) as u64;
            let mut corr = 0i128;
            let mut prev = 0i128;
            let mut last = 0i128;
            for (&o, &p) in offsets.iter().zip(size_values.iter()) {
                let d = o as i128 - predict_offset(slope_fp, p) as i128;
                corr = corr.max(prev - d);
                prev = d;
                last = d;
            }
            // Slopes at or below the mean keep the final residual nonnegative.
            let universe = last as u64 + num_buckets as u64 * corr as u64;
            (ef_cost(universe, num_buckets + 1), slope_fp, corr as u64)
        })
        .min()
        .map(|(_, slope_fp, corr)| (slope_fp, corr))
        .unwrap();
    let shifted: Vec<u64> = offsets
        .iter()
        .zip(size_values.iter())
        .enumerate()
        .map(|(i, (&o, &p))| {
            let d = o as i128 - predict_offset(slope_fp, p) as i128;
            let x = d + i as i128 * corr as i128;
            debug_assert!(x >= 0);
            x as u64
        })
        .collect();
    let offsets_ef = ef_build(&shifted, *shifted.last().unwrap())?;

    let mphf = RecSplitMphf::from_parts(
        config.leaf_size,
        config.bucket_size,
        config.rotation_fitting,
        config.global_seed,
        n,
        sizes,
        slope_fp,
        corr,
        offsets_ef,
        encoding,
        rice,
    );
    Ok((
        mphf,
        BuildStats {
            hash_evals,
            max_bucket_size,
        },
    ))
}

/// Prefix key counts per bucket over the sorted codes: `starts[b]` is the
/// index of bucket `b`'s first key and `starts[num_buckets] == n`.
fn bucket_starts(codes: &[MasterHashCode], num_buckets: usize) -> Vec<usize> {
    let mut starts = vec![0usize; num_buckets + 1];
    let mut b = 0;
    for (i, &code) in codes.iter().enumerate() {
        let cb = bucket_of(code, num_buckets);
        while b < cb {
            b += 1;
            starts[b] = i;
        }
    }
    while b < num_buckets {
        b += 1;
        starts[b] = codes.len();
    }
    starts
}

struct BucketEncoder<'a> {
    rice: &'a RiceParams,
    luts: Option<&'a [RotationTable]>,
    rotation: bool,
    batch_width: u32,
}

struct ChunkOut {
    bits: BitVector,
    bucket_bits: Vec<u64>,
    hash_evals: u64,
}

impl BucketEncoder<'_> {
    fn leaf_seed(&self, keys: &[MasterHashCode]) -> Result<SeedResult> {
        if !self.rotation {
            find_bijection_bruteforce(keys, self.batch_width)
        } else if let Some(tables) = self.luts {
            find_bijection_rotation_lut(keys, &tables[keys.len() - 1], self.batch_width)
        } else {
            find_bijection_rotation(keys, self.batch_width)
        }
    }

    /// Searches the node's seed, appends `(value, tau)` in preorder, and
    /// recurses into the parts left to right. Splitting reorders `keys` so
    /// each part is contiguous for its subtree.
    fn encode_node(
        &self,
        keys: &mut [MasterHashCode],
        pairs: &mut Vec<(u64, u32)>,
        hash_evals: &mut u64,
    ) -> Result<()> {
        let size = keys.len();
        match split_node(size, self.rice.shape()) {
            Node::Leaf { .. } => {
                let found = self.leaf_seed(keys)?;
                pairs.push((found.stored_value, self.rice.tau(size)));
                *hash_evals += found.hash_evals;
            }
            Node::Split(split) => {
                let found = find_splitting(keys, &split, self.batch_width)?;
                pairs.push((found.stored_value, self.rice.tau(size)));
                *hash_evals += found.hash_evals;
                let mut rest = keys;
                for part in 0..split.fanout {
                    let (head, tail) = rest.split_at_mut(split.part_size(part));
                    self.encode_node(head, pairs, hash_evals)?;
                    rest = tail;
                }
            }
        }
        Ok(())
    }
}

/// Encodes buckets `lo..hi` (whose keys are exactly `chunk`) into a private
/// bit vector: per bucket all fixed parts in preorder, then all unary parts
/// in the same order.
fn encode_chunk(
    encoder: &BucketEncoder,
    chunk: &mut [MasterHashCode],
    starts: &[usize],
    lo: usize,
    hi: usize,
) -> Result<ChunkOut> {
    let mut bits = BitVector::new();
    let mut bucket_bits = Vec::with_capacity(hi - lo);
    let mut hash_evals = 0u64;
    let mut pairs: Vec<(u64, u32)> = Vec::new();
    let mut rest = chunk;
    for b in lo..hi {
        let (bucket, tail) = rest.split_at_mut(starts[b + 1] - starts[b]);
        rest = tail;
        let before = bits.len();
        if !bucket.is_empty() {
            pairs.clear();
            encoder.encode_node(bucket, &mut pairs, &mut hash_evals)?;
            for &(value, tau) in pairs.iter() {
                bits.push_bits(value & mask(tau), tau);
            }
            for &(value, tau) in pairs.iter() {
                bits.push_zeros((value >> tau) as usize);
                bits.push_bit(true);
            }
        }
        bucket_bits.push((bits.len() - before) as u64);
    }
    debug_assert!(rest.is_empty());
    Ok(ChunkOut {
        bits,
        bucket_bits,
        hash_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_keys(n: usize, tag: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(tag);
        (0..n)
            .map(|i| format!("key {i:08} {:016x}", rng.gen::<u64>()))
            .collect()
    }

    #[test]
    fn rejects_bad_input() {
        let config = MphfConfig::default();
        let none: [&str; 0] = [];
        assert!(matches!(build(&none, &config, 1), Err(Error::EmptyInput)));
        assert!(matches!(
            build(&["a", "b", "a"], &config, 1),
            Err(Error::DuplicateKeys)
        ));
        assert!(matches!(
            build(&["a", "b"], &config, 0),
            Err(Error::InvalidConfig(_))
        ));
        let bad = MphfConfig {
            leaf_size: 1,
            ..MphfConfig::default()
        };
        assert!(matches!(
            build(&["a", "b"], &bad, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn output_identical_across_thread_counts_and_batch_widths() {
        let keys = test_keys(20_000, 5);
        let scalar = MphfConfig {
            leaf_size: 8,
            bucket_size: 100,
            ..MphfConfig::default()
        };
        let (f1, s1) = build_with_stats(&keys, &scalar, 1).unwrap();
        let batched = MphfConfig {
            batch_width: 8,
            ..scalar
        };
        let (f2, s2) = build_with_stats(&keys, &batched, 4).unwrap();
        assert_eq!(f1.to_bytes(), f2.to_bytes());
        assert_eq!(s1.hash_evals, s2.hash_evals);
        assert_eq!(s1.max_bucket_size, s2.max_bucket_size);
    }

    #[test]
    fn lookup_table_variant_builds_the_same_function() {
        let keys = test_keys(6_000, 6);
        let plain = MphfConfig {
            leaf_size: 10,
            bucket_size: 64,
            ..MphfConfig::default()
        };
        let lut = MphfConfig {
            use_rotation_lut: true,
            ..plain
        };
        assert_eq!(
            build(&keys, &plain, 2).unwrap().to_bytes(),
            build(&keys, &lut, 2).unwrap().to_bytes()
        );
    }

    #[test]
    fn more_threads_than_buckets() {
        let keys = test_keys(120, 7);
        let config = MphfConfig {
            bucket_size: 100,
            ..MphfConfig::default()
        };
        let f = build(&keys, &config, 8).unwrap();
        assert_eq!(f.n(), 120);
    }

    #[test]
    fn bucket_starts_cover_empty_buckets() {
        let keys = test_keys(300, 8);
        let config = MphfConfig {
            bucket_size: 3,
            leaf_size: 5,
            ..MphfConfig::default()
        };
        // 100 buckets of expected size 3: empties are near-certain
        let f = build(&keys, &config, 1).unwrap();
        let mut seen = vec![false; 300];
        for k in &keys {
            let slot = f.query(k.as_bytes());
            assert!(!seen[slot]);
            seen[slot] = true;
        }
    }
}
