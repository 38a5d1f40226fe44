//! The queryable function: per-bucket seed streams plus two Elias-Fano
//! indexes, one over bucket key counts and one over bucket bit offsets.
//!
//! A query hashes the key once, finds its bucket, and walks that bucket's
//! splitting tree. The encoding keeps each bucket's fixed parts and unary
//! parts in two separate preorder runs, so the walk maintains two cursors
//! and skips a sibling subtree in constant time per node: its fixed width
//! and node count come from tables derived from the tree shape alone.

use crate::bits::BitVector;
use crate::codes::EliasFanoSequence;
use crate::error::{Error, Result};
use crate::hash::{ab_partition_bit, bucket_of, master_hash, node_hash, remap, MasterHashCode};
use crate::tree::{rice_schedule, split_node, Node, RiceParams};
use crate::wire::{put_u64, take_bytes, take_u64, take_u8};

pub(crate) const SLOPE_FRACTION_BITS: u32 = 20;

/// Predicted bit offset of a bucket whose keys start at prefix count `p`,
/// shared by construction and lookup.
#[inline]
pub(crate) fn predict_offset(slope_fp: u64, p: u64) -> u64 {
    ((p as u128 * slope_fp as u128) >> SLOPE_FRACTION_BITS) as u64
}

const MAGIC: &[u8; 4] = b"RSRF";
const FORMAT_VERSION: u8 = 1;
const FLAG_ROTATION: u8 = 1;

/// A minimal perfect hash function: maps each key it was built from to a
/// distinct slot in `[0, n)`.
#[derive(Clone, Debug)]
pub struct RecSplitMphf {
    leaf_size: u32,
    bucket_size: usize,
    rotation_fitting: bool,
    global_seed: u64,
    n: usize,
    num_buckets: usize,
    /// Prefix key counts per bucket, `num_buckets + 1` entries ending at `n`.
    sizes: EliasFanoSequence,
    slope_fp: u64,
    corr: u64,
    /// Shifted residuals of bucket bit offsets against the linear predictor.
    offsets: EliasFanoSequence,
    encoding: BitVector,
    rice: RiceParams,
}

impl RecSplitMphf {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        leaf_size: u32,
        bucket_size: usize,
        rotation_fitting: bool,
        global_seed: u64,
        n: usize,
        sizes: EliasFanoSequence,
        slope_fp: u64,
        corr: u64,
        offsets: EliasFanoSequence,
        encoding: BitVector,
        rice: RiceParams,
    ) -> Self {
        RecSplitMphf {
            leaf_size,
            bucket_size,
            rotation_fitting,
            global_seed,
            n,
            num_buckets: n.div_ceil(bucket_size),
            sizes,
            slope_fp,
            corr,
            offsets,
            encoding,
            rice,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_buckets(&self) -> usize {
        self.num_buckets
    }

    pub fn leaf_size(&self) -> u32 {
        self.leaf_size
    }

    pub fn bucket_size(&self) -> usize {
        self.bucket_size
    }

    pub fn rotation_fitting(&self) -> bool {
        self.rotation_fitting
    }

    pub fn global_seed(&self) -> u64 {
        self.global_seed
    }

    /// Slot of `key` in `[0, n)`. Distinct original keys get distinct slots;
    /// for any other input the result is an arbitrary valid slot.
    pub fn query(&self, key: &[u8]) -> usize {
        self.query_code(master_hash(key, self.global_seed))
    }

    fn bucket_offset(&self, bucket: usize, prefix: u64) -> usize {
        let x = self.offsets.access(bucket) as i128;
        let o = x - bucket as i128 * self.corr as i128
            + predict_offset(self.slope_fp, prefix) as i128;
        o as usize
    }

    /// Slot for an already computed 128-bit key code.
    pub fn query_code(&self, code: MasterHashCode) -> usize {
        let bucket = bucket_of(code, self.num_buckets);
        let prefix = self.sizes.access(bucket);
        let mut size = (self.sizes.access(bucket + 1) - prefix) as usize;
        if size == 0 {
            // unused slot of an empty bucket; any in-range value works
            return (prefix as usize).min(self.n - 1);
        }
        let start = self.bucket_offset(bucket, prefix);
        let mut fixed_pos = start;
        let mut unary_pos = start + self.rice.subtree_fixed_bits(size) as usize;
        let mut base = prefix as usize;
        loop {
            let tau = self.rice.tau(size);
            let one = self
                .encoding
                .next_one(unary_pos)
                .expect("every encoded value has a unary terminator");
            let quotient = (one - unary_pos) as u64;
            let value = (quotient << tau) | self.encoding.get_bits(fixed_pos, tau);
            fixed_pos += tau as usize;
            unary_pos = one + 1;
            match split_node(size, self.rice.shape()) {
                Node::Leaf { .. } => return base + self.leaf_slot(code, size, value),
                Node::Split(split) => {
                    let cell = remap(node_hash(code, value), size);
                    let part = split.part_of(cell);
                    for sibling in 0..part {
                        let sub = split.part_size(sibling);
                        fixed_pos += self.rice.subtree_fixed_bits(sub) as usize;
                        unary_pos = self
                            .encoding
                            .skip_ones(unary_pos, self.rice.subtree_nodes(sub))
                            .expect("skipped subtrees are fully encoded");
                        base += sub;
                    }
                    size = split.part_size(part);
                }
            }
        }
    }

    fn leaf_slot(&self, code: MasterHashCode, size: usize, value: u64) -> usize {
        if self.rotation_fitting {
            let r = (value % size as u64) as usize;
            let slot = remap(node_hash(code, value - r as u64), size);
            if ab_partition_bit(code) {
                (slot + r) % size
            } else {
                slot
            }
        } else {
            remap(node_hash(code, value), size)
        }
    }

    /// Bits the function occupies: seed stream plus both indexes and their
    /// predictor constants. The fixed serialization header is not counted.
    pub fn size_in_bits(&self) -> usize {
        self.encoding.len() + self.sizes.size_in_bits() + self.offsets.size_in_bits() + 128
    }

    pub fn bits_per_key(&self) -> f64 {
        self.size_in_bits() as f64 / self.n as f64
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(if self.rotation_fitting { FLAG_ROTATION } else { 0 });
        out.push(self.leaf_size as u8);
        out.push(0);
        put_u64(out, self.bucket_size as u64);
        put_u64(out, self.global_seed);
        put_u64(out, self.n as u64);
        self.sizes.write_to(out);
        put_u64(out, self.slope_fp);
        put_u64(out, self.corr);
        self.offsets.write_to(out);
        self.encoding.write_to(out);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }

    /// Parses a serialized function, validating structure before use: magic,
    /// version, flag and range checks, index lengths and endpoints, offset
    /// monotonicity, and that nothing trails the payload.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut input = bytes;
        if take_bytes(&mut input, 4)? != MAGIC {
            return Err(Error::Corrupt("bad magic"));
        }
        if take_u8(&mut input)? != FORMAT_VERSION {
            return Err(Error::Corrupt("unsupported version"));
        }
        let flags = take_u8(&mut input)?;
        if flags & !FLAG_ROTATION != 0 {
            return Err(Error::Corrupt("unknown flag bits"));
        }
        let leaf_size = take_u8(&mut input)? as u32;
        if take_u8(&mut input)? != 0 {
            return Err(Error::Corrupt("reserved byte set"));
        }
        let bucket_size = take_u64(&mut input)? as usize;
        if bucket_size == 0 || bucket_size >= 1 << 31 {
            return Err(Error::Corrupt("bucket size out of range"));
        }
        let global_seed = take_u64(&mut input)?;
        let n = take_u64(&mut input)? as usize;
        if n == 0 {
            return Err(Error::Corrupt("empty function"));
        }
        let num_buckets = n.div_ceil(bucket_size);

        let sizes = EliasFanoSequence::read_from(&mut input)?;
        if sizes.len() != num_buckets + 1 || sizes.universe() != n as u64 {
            return Err(Error::Corrupt("bucket size index shape"));
        }
        let slope_fp = take_u64(&mut input)?;
        let corr = take_u64(&mut input)?;
        let offsets = EliasFanoSequence::read_from(&mut input)?;
        if offsets.len() != num_buckets + 1 {
            return Err(Error::Corrupt("bucket offset index shape"));
        }
        let encoding = BitVector::read_from(&mut input)?;
        if !input.is_empty() {
            return Err(Error::Corrupt("trailing data"));
        }

        if sizes.access(0) != 0 || sizes.access(num_buckets) != n as u64 {
            return Err(Error::Corrupt("bucket size index endpoints"));
        }
        let mut max_bucket_size = 0usize;
        let mut prev_prefix = 0u64;
        let mut prev_offset = 0i128;
        for b in 0..=num_buckets {
            let prefix = sizes.access(b);
            if prefix < prev_prefix {
                return Err(Error::Corrupt("bucket sizes not monotone"));
            }
            max_bucket_size = max_bucket_size.max((prefix - prev_prefix) as usize);
            prev_prefix = prefix;
            let offset = offsets.access(b) as i128 - b as i128 * corr as i128
                + predict_offset(slope_fp, prefix) as i128;
            if b == 0 && offset != 0 {
                return Err(Error::Corrupt("first bucket offset not zero"));
            }
            if offset < prev_offset {
                return Err(Error::Corrupt("bucket offsets not monotone"));
            }
            prev_offset = offset;
        }
        if prev_offset != encoding.len() as i128 {
            return Err(Error::Corrupt("encoding length mismatch"));
        }

        let rotation_fitting = flags & FLAG_ROTATION != 0;
        let rice = rice_schedule(
            leaf_size as usize,
            max_bucket_size.max(1),
            rotation_fitting,
        )
        .map_err(|_| Error::Corrupt("leaf size out of range"))?;
        Ok(RecSplitMphf {
            leaf_size,
            bucket_size,
            rotation_fitting,
            global_seed,
            n,
            num_buckets,
            sizes,
            slope_fp,
            corr,
            offsets,
            encoding,
            rice,
        })
    }
}
