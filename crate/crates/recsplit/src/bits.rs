//! Plain bit vectors with rank/select support.
//!
//! Bits are numbered LSB-first: bit `p` lives in word `p / 64` at position
//! `p % 64`. Everything downstream (Golomb-Rice codes, Elias-Fano sequences,
//! the serialized MPHF) builds on this one layout, so it is pinned here and
//! by the serialization format: a 64-bit little-endian bit length followed by
//! the words, also little-endian. Padding bits past the length are zero.

use crate::error::{Error, Result};
use crate::wire;

/// Number of ones between consecutive select samples.
const SELECT_SAMPLE: usize = 2048;

/// `k`-bit all-ones mask, `k <= 64`.
#[inline]
pub(crate) fn mask(k: u32) -> u64 {
    debug_assert!(k <= 64);
    if k == 64 {
        !0
    } else {
        (1u64 << k) - 1
    }
}

/// Population count.
#[inline]
pub fn popcount(x: u64) -> u32 {
    x.count_ones()
}

/// Cyclic left rotation of the low `k` bits of `x` by `i` positions.
///
/// Bits of `x` at or above position `k` must be zero. `i` must be in `[0, k)`.
#[inline]
pub fn rot(k: u32, i: u32, x: u64) -> u64 {
    debug_assert!(k >= 1 && k <= 64);
    debug_assert!(i < k);
    debug_assert!(k == 64 || x >> k == 0);
    if i == 0 {
        return x;
    }
    ((x << i) | (x >> (k - i))) & mask(k)
}

/// Growable bit vector.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitVector {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// Number of bits.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        debug_assert!(pos < self.len);
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    /// Reads `width <= 64` bits starting at `pos`, LSB-first.
    #[inline]
    pub fn get_bits(&self, pos: usize, width: u32) -> u64 {
        if width == 0 {
            return 0;
        }
        debug_assert!(width <= 64);
        debug_assert!(pos + width as usize <= self.len);
        let word = pos / 64;
        let off = (pos % 64) as u32;
        let lo = self.words[word] >> off;
        let got = 64 - off;
        let v = if width > got {
            lo | (self.words[word + 1] << got)
        } else {
            lo
        };
        v & mask(width)
    }

    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    /// Appends the low `width` bits of `value`. Higher bits of `value` must
    /// be zero.
    #[inline]
    pub fn push_bits(&mut self, value: u64, width: u32) {
        if width == 0 {
            return;
        }
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0);
        let off = (self.len % 64) as u32;
        if off == 0 {
            self.words.push(value);
        } else {
            *self.words.last_mut().unwrap() |= value << off;
            if off + width > 64 {
                self.words.push(value >> (64 - off));
            }
        }
        self.len += width as usize;
    }

    /// Appends `n` zero bits.
    pub fn push_zeros(&mut self, n: usize) {
        self.len += n;
        self.words.resize(self.len.div_ceil(64), 0);
    }

    /// Appends all bits of `other`.
    pub fn extend_from(&mut self, other: &BitVector) {
        let mut remaining = other.len;
        for &w in &other.words {
            let take = remaining.min(64) as u32;
            self.push_bits(if take == 64 { w } else { w & mask(take) }, take);
            remaining -= take as usize;
        }
    }

    /// Number of ones strictly before position `x`; `x` may equal `len`.
    pub fn rank1(&self, x: usize) -> Result<usize> {
        if x > self.len {
            return Err(Error::OutOfRange {
                what: "rank position",
                got: x,
                limit: self.len,
            });
        }
        let full = x / 64;
        let mut ones: usize = self.words[..full].iter().map(|w| w.count_ones() as usize).sum();
        let rem = (x % 64) as u32;
        if rem != 0 {
            ones += (self.words[full] & mask(rem)).count_ones() as usize;
        }
        Ok(ones)
    }

    /// Position of the first one at or after `from`, if any.
    pub fn next_one(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut word = from / 64;
        let mut w = self.words[word];
        let off = (from % 64) as u32;
        if off != 0 {
            w &= !mask(off);
        }
        loop {
            if w != 0 {
                let pos = word * 64 + w.trailing_zeros() as usize;
                return (pos < self.len).then_some(pos);
            }
            word += 1;
            if word >= self.words.len() {
                return None;
            }
            w = self.words[word];
        }
    }

    /// Position one past the `k`-th one at or after `from` (`k >= 1`).
    ///
    /// Used by sequential decoders to jump over the unary parts of skipped
    /// values. Returns `None` if fewer than `k` ones remain.
    pub fn skip_ones(&self, from: usize, k: usize) -> Option<usize> {
        debug_assert!(k >= 1);
        if from >= self.len {
            return None;
        }
        let mut word = from / 64;
        let off = (from % 64) as u32;
        let mut w = self.words[word];
        if off != 0 {
            w &= !mask(off);
        }
        let mut remaining = k;
        loop {
            let ones = w.count_ones() as usize;
            if ones >= remaining {
                let mut v = w;
                for _ in 1..remaining {
                    v &= v - 1;
                }
                let pos = word * 64 + v.trailing_zeros() as usize;
                return (pos < self.len).then(|| pos + 1);
            }
            remaining -= ones;
            word += 1;
            if word >= self.words.len() {
                return None;
            }
            w = self.words[word];
        }
    }

    pub fn serialized_len(&self) -> usize {
        8 + self.words.len() * 8
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        wire::put_u64(out, self.len as u64);
        for &w in &self.words {
            wire::put_u64(out, w);
        }
    }

    pub fn read_from(input: &mut &[u8]) -> Result<Self> {
        let len = wire::take_u64(input)? as usize;
        let n_words = len.div_ceil(64);
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(wire::take_u64(input)?);
        }
        if len % 64 != 0 {
            if let Some(&last) = words.last() {
                if last & !mask((len % 64) as u32) != 0 {
                    return Err(Error::Corrupt("bit vector has nonzero padding"));
                }
            }
        }
        Ok(BitVector { words, len })
    }
}

/// Sampled select-one support over a [`BitVector`].
///
/// Every `SELECT_SAMPLE`-th one is sampled; a query scans forward from the
/// nearest sample with word-level popcounts. Worst case touches
/// `SELECT_SAMPLE` ones, which is the accepted trade-off here: the index
/// costs 64 bits per 2048 ones, a rounding error next to the payload.
#[derive(Clone, Debug)]
pub struct SelectIndex {
    samples: Vec<u64>,
    ones: usize,
}

impl SelectIndex {
    pub fn build(v: &BitVector) -> Self {
        let mut samples = Vec::new();
        let mut seen = 0usize;
        for (i, &w) in v.words().iter().enumerate() {
            let mut w = w;
            while w != 0 {
                if seen % SELECT_SAMPLE == 0 {
                    samples.push((i * 64 + w.trailing_zeros() as usize) as u64);
                }
                seen += 1;
                w &= w - 1;
            }
        }
        SelectIndex { samples, ones: seen }
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    /// Size of the sample table in bits.
    pub fn size_in_bits(&self) -> usize {
        self.samples.len() * 64
    }

    /// Position of the `i`-th one, `1 <= i <= ones()`.
    pub fn select1(&self, v: &BitVector, i: usize) -> Result<usize> {
        if i == 0 || i > self.ones {
            return Err(Error::OutOfRange {
                what: "select rank",
                got: i,
                limit: self.ones,
            });
        }
        let sample = (i - 1) / SELECT_SAMPLE;
        let start = self.samples[sample] as usize;
        let mut remaining = i - sample * SELECT_SAMPLE;
        let mut word = start / 64;
        let mut w = v.words()[word];
        if start % 64 != 0 {
            w &= !mask(start as u32 % 64);
        }
        loop {
            let ones = w.count_ones() as usize;
            if ones >= remaining {
                let mut x = w;
                for _ in 1..remaining {
                    x &= x - 1;
                }
                return Ok(word * 64 + x.trailing_zeros() as usize);
            }
            remaining -= ones;
            word += 1;
            w = v.words()[word];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_rank(bits: &[bool], x: usize) -> usize {
        bits[..x].iter().filter(|&&b| b).count()
    }

    fn naive_select(bits: &[bool], i: usize) -> Option<usize> {
        let mut seen = 0;
        for (pos, &b) in bits.iter().enumerate() {
            if b {
                seen += 1;
                if seen == i {
                    return Some(pos);
                }
            }
        }
        None
    }

    fn from_bools(bits: &[bool]) -> BitVector {
        let mut v = BitVector::new();
        for &b in bits {
            v.push_bit(b);
        }
        v
    }

    #[test]
    fn rot_matches_per_bit_simulation() {
        // Oracle: move each bit individually.
        let naive = |k: u32, i: u32, x: u64| -> u64 {
            let mut out = 0u64;
            for j in 0..k {
                if x >> j & 1 == 1 {
                    out |= 1 << ((j + i) % k);
                }
            }
            out
        };
        let mut state = 0x243f6a8885a308d3u64;
        for _ in 0..2000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let k = (state >> 58) as u32 % 64 + 1;
            let i = (state >> 32) as u32 % k;
            let x = state & mask(k);
            assert_eq!(rot(k, i, x), naive(k, i, x), "k={k} i={i} x={x:#x}");
        }
        assert_eq!(rot(4, 3, 0b0110), 0b0011);
        assert_eq!(rot(64, 1, 1 << 63), 1);
        assert_eq!(rot(1, 0, 1), 1);
    }

    #[test]
    fn rot_group_laws() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..500 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let k = (state >> 58) as u32 % 64 + 1;
            let i = (state >> 32) as u32 % k;
            let j = (state >> 16) as u32 % k;
            let x = state & mask(k);
            // rot(i) . rot(j) = rot((i + j) mod k)
            assert_eq!(rot(k, j, rot(k, i, x)), rot(k, (i + j) % k, x));
            // rotation preserves popcount
            assert_eq!(popcount(rot(k, i, x)), popcount(x));
            // inverse
            assert_eq!(rot(k, (k - i) % k, rot(k, i, x)), x);
        }
    }

    #[test]
    fn push_and_get_bits_roundtrip() {
        let mut v = BitVector::new();
        v.push_bits(0b1011, 4);
        v.push_bits(0x3ff, 10);
        v.push_bits(0, 3);
        v.push_bits(u64::MAX, 64);
        assert_eq!(v.len(), 81);
        assert_eq!(v.get_bits(0, 4), 0b1011);
        assert_eq!(v.get_bits(4, 10), 0x3ff);
        assert_eq!(v.get_bits(14, 3), 0);
        assert_eq!(v.get_bits(17, 64), u64::MAX);
        assert!(v.get(0));
        assert!(!v.get(2));
    }

    #[test]
    fn rank_select_small_vectors_match_naive() {
        // Deterministic mix of densities, including all-zeros and all-ones.
        let mut state = 0xdeadbeefcafef00du64;
        for case in 0..300 {
            let len = case % 700;
            let density = [0.0, 0.03, 0.5, 0.97, 1.0][case % 5];
            let mut bits = Vec::with_capacity(len);
            for _ in 0..len {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                bits.push(((state >> 40) as f64 / (1u64 << 24) as f64) < density);
            }
            let v = from_bools(&bits);
            let idx = SelectIndex::build(&v);
            assert_eq!(idx.ones(), v.count_ones());
            for x in 0..=len {
                assert_eq!(v.rank1(x).unwrap(), naive_rank(&bits, x));
            }
            for i in 1..=idx.ones() {
                assert_eq!(idx.select1(&v, i).unwrap(), naive_select(&bits, i).unwrap());
            }
            assert!(idx.select1(&v, idx.ones() + 1).is_err());
            assert!(v.rank1(len + 1).is_err());
        }
    }

    #[test]
    fn select_crosses_sample_boundaries() {
        // > 2048 ones so the second sample is exercised.
        let mut v = BitVector::new();
        for i in 0..9000 {
            v.push_bit(i % 3 == 0);
        }
        let idx = SelectIndex::build(&v);
        let mut seen = 0;
        for i in 0..9000 {
            if i % 3 == 0 {
                seen += 1;
                assert_eq!(idx.select1(&v, seen).unwrap(), i);
            }
        }
    }

    #[test]
    fn rank_of_select_is_identity() {
        let mut v = BitVector::new();
        for i in 0..2000u64 {
            v.push_bit(i.wrapping_mul(2654435761) % 7 < 3);
        }
        let idx = SelectIndex::build(&v);
        for i in 1..=idx.ones() {
            let pos = idx.select1(&v, i).unwrap();
            assert_eq!(v.rank1(pos).unwrap(), i - 1);
        }
    }

    #[test]
    fn next_one_and_skip_ones() {
        let mut v = BitVector::new();
        v.push_zeros(100);
        v.push_bit(true); // 100
        v.push_zeros(63);
        v.push_bit(true); // 164
        v.push_bit(true); // 165
        assert_eq!(v.next_one(0), Some(100));
        assert_eq!(v.next_one(100), Some(100));
        assert_eq!(v.next_one(101), Some(164));
        assert_eq!(v.next_one(166), None);
        assert_eq!(v.skip_ones(0, 1), Some(101));
        assert_eq!(v.skip_ones(0, 2), Some(165));
        assert_eq!(v.skip_ones(0, 3), Some(166));
        assert_eq!(v.skip_ones(0, 4), None);
        assert_eq!(v.skip_ones(101, 2), Some(166));
    }

    #[test]
    fn extend_from_matches_bit_by_bit() {
        let mut state = 0x123456789abcdefu64;
        for (la, lb) in [(0, 5), (64, 64), (13, 130), (1, 0), (77, 3)] {
            let mut a_bits = Vec::new();
            let mut b_bits = Vec::new();
            for _ in 0..la {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
                a_bits.push(state >> 63 == 1);
            }
            for _ in 0..lb {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
                b_bits.push(state >> 63 == 1);
            }
            let mut a = from_bools(&a_bits);
            let b = from_bools(&b_bits);
            a.extend_from(&b);
            let mut all = a_bits.clone();
            all.extend_from_slice(&b_bits);
            assert_eq!(a, from_bools(&all));
        }
    }

    #[test]
    fn serialization_roundtrip_and_padding_checks() {
        let mut v = BitVector::new();
        v.push_bits(0b101, 3);
        v.push_bits(0xffff_ffff, 32);
        let mut buf = Vec::new();
        v.write_to(&mut buf);
        assert_eq!(buf.len(), v.serialized_len());
        // length is little-endian first
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), 35);
        let mut slice = &buf[..];
        let back = BitVector::read_from(&mut slice).unwrap();
        assert_eq!(back, v);
        assert!(slice.is_empty());

        // nonzero padding must be rejected
        let mut bad = buf.clone();
        *bad.last_mut().unwrap() |= 0x80;
        assert!(BitVector::read_from(&mut &bad[..]).is_err());

        // truncation must be rejected
        let mut short = &buf[..buf.len() - 1];
        assert!(BitVector::read_from(&mut short).is_err());
    }

    proptest! {
        #[test]
        fn prop_rank_select_adjoint(bits in prop::collection::vec(any::<bool>(), 0..2000)) {
            let v = from_bools(&bits);
            let idx = SelectIndex::build(&v);
            for i in 1..=idx.ones() {
                let pos = idx.select1(&v, i).unwrap();
                prop_assert!(v.get(pos));
                prop_assert_eq!(v.rank1(pos).unwrap(), i - 1);
            }
            prop_assert_eq!(v.rank1(v.len()).unwrap(), idx.ones());
        }

        #[test]
        fn prop_push_bits_roundtrip(chunks in prop::collection::vec((any::<u64>(), 1u32..=64), 0..50)) {
            let mut v = BitVector::new();
            let mut expect = Vec::new();
            for &(value, width) in &chunks {
                let value = if width == 64 { value } else { value & mask(width) };
                v.push_bits(value, width);
                expect.push((value, width));
            }
            let mut pos = 0;
            for (value, width) in expect {
                prop_assert_eq!(v.get_bits(pos, width), value);
                pos += width as usize;
            }
        }
    }
}
