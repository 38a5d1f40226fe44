//! Golomb-Rice and Elias-Fano sequences.
//!
//! Rice codes store the seed values: a value `x` at parameter `tau` becomes
//! `floor(x / 2^tau)` in unary (that many zeros and a one) plus the low
//! `tau` bits verbatim. The sequence keeps all fixed parts in one bit vector
//! and all unary parts in another with select support, so any value is
//! readable from its index and the running sum of preceding parameters.
//!
//! Elias-Fano compresses the monotone bucket index of the finished function:
//! each value splits into a `low_width`-bit verbatim part and a high part
//! encoded as position `i + (value_i >> low_width)` in a sparse bit vector,
//! about `2 + log2(universe / count)` bits per value in total.

use crate::bits::{mask, BitVector, SelectIndex};
use crate::error::{Error, Result};
use crate::wire;

/// Search window for the Rice parameter; also the cap on stored-value width.
pub const MAX_RICE_PARAMETER: u32 = 62;

/// Length in bits of the Rice code of `x` at parameter `tau`.
#[inline]
pub fn rice_code_len(x: u64, tau: u32) -> u64 {
    tau as u64 + 1 + (x >> tau)
}

/// Rice parameter minimizing the expected code length of a geometric value.
///
/// The number of failures before a success of probability `p` has
/// `P(x = k) = p (1-p)^k`; the expected Rice length at parameter `tau` works
/// out to `tau + 1 + q^(2^tau) / (1 - q^(2^tau))` with `q = 1 - p`. The
/// expression is unimodal in `tau`, but a plain scan over the legal window
/// is cheap and dodges edge cases; ties keep the smaller parameter.
pub fn optimal_rice_parameter(p: f64) -> u32 {
    debug_assert!(p > 0.0 && p <= 1.0);
    let q = 1.0 - p;
    let mut best = 0u32;
    let mut best_len = f64::INFINITY;
    for tau in 0..=MAX_RICE_PARAMETER {
        let qk = q.powf((1u64 << tau) as f64);
        let len = tau as f64 + 1.0 + qk / (1.0 - qk);
        if len < best_len {
            best_len = len;
            best = tau;
        }
    }
    best
}

/// Immutable sequence of Rice-coded values.
///
/// Random access needs the value's index (for select on the unary parts) and
/// the bit offset of its fixed part (the sum of preceding parameters), both
/// tracked by the caller; the sequence itself stores no per-value metadata.
#[derive(Clone, Debug)]
pub struct GolombRiceSequence {
    fixed_bits: BitVector,
    unary_bits: BitVector,
    unary_select: SelectIndex,
    count: usize,
}

/// Appends values to an under-construction [`GolombRiceSequence`].
#[derive(Clone, Debug, Default)]
pub struct GolombRiceBuilder {
    fixed_bits: BitVector,
    unary_bits: BitVector,
    count: usize,
}

impl GolombRiceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: u64, tau: u32) {
        debug_assert!(tau <= MAX_RICE_PARAMETER);
        debug_assert!(x < 1 << MAX_RICE_PARAMETER);
        if tau > 0 {
            self.fixed_bits.push_bits(x & mask(tau), tau);
        }
        self.unary_bits.push_zeros((x >> tau) as usize);
        self.unary_bits.push_bit(true);
        self.count += 1;
    }

    pub fn finish(self) -> GolombRiceSequence {
        let unary_select = SelectIndex::build(&self.unary_bits);
        GolombRiceSequence {
            fixed_bits: self.fixed_bits,
            unary_bits: self.unary_bits,
            unary_select,
            count: self.count,
        }
    }
}

/// Encodes `(value, parameter)` pairs in order.
pub fn rice_encode(values: &[(u64, u32)]) -> GolombRiceSequence {
    let mut b = GolombRiceBuilder::new();
    for &(x, tau) in values {
        b.push(x, tau);
    }
    b.finish()
}

impl GolombRiceSequence {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn fixed_bits(&self) -> &BitVector {
        &self.fixed_bits
    }

    pub fn unary_bits(&self) -> &BitVector {
        &self.unary_bits
    }

    /// Decodes the value at `index`, whose fixed part starts at bit
    /// `fixed_offset` and was encoded at parameter `tau`.
    ///
    /// The unary part is delimited by the `index`-th and `index+1`-th ones of
    /// the unary vector (position -1 standing in before the first).
    pub fn decode_at(&self, index: usize, fixed_offset: usize, tau: u32) -> Result<u64> {
        if index >= self.count {
            return Err(Error::OutOfRange {
                what: "value index",
                got: index,
                limit: self.count,
            });
        }
        let end = self.unary_select.select1(&self.unary_bits, index + 1)? as i64;
        let start = if index == 0 {
            -1
        } else {
            self.unary_select.select1(&self.unary_bits, index)? as i64
        };
        let q = (end - start - 1) as u64;
        let fixed = if tau > 0 {
            self.fixed_bits.get_bits(fixed_offset, tau)
        } else {
            0
        };
        Ok((q << tau) | fixed)
    }

    pub fn size_in_bits(&self) -> usize {
        self.fixed_bits.len() + self.unary_bits.len() + self.unary_select.size_in_bits()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        wire::put_u64(out, self.count as u64);
        self.fixed_bits.write_to(out);
        self.unary_bits.write_to(out);
    }

    pub fn read_from(input: &mut &[u8]) -> Result<Self> {
        let count = wire::take_u64(input)? as usize;
        let fixed_bits = BitVector::read_from(input)?;
        let unary_bits = BitVector::read_from(input)?;
        let unary_select = SelectIndex::build(&unary_bits);
        if unary_select.ones() != count {
            return Err(Error::Corrupt("unary terminator count mismatch"));
        }
        Ok(GolombRiceSequence {
            fixed_bits,
            unary_bits,
            unary_select,
            count,
        })
    }
}

/// Monotone sequence with Elias-Fano encoding and constant-ish random access.
#[derive(Clone, Debug)]
pub struct EliasFanoSequence {
    low_bits: BitVector,
    upper_bits: BitVector,
    upper_select: SelectIndex,
    low_width: u32,
    count: usize,
    universe: u64,
}

fn ef_low_width(universe: u64, count: usize) -> u32 {
    if count == 0 || universe == 0 {
        return 0;
    }
    let ratio = universe / count as u64;
    if ratio <= 1 {
        0
    } else {
        63 - ratio.leading_zeros()
    }
}

/// Builds the Elias-Fano encoding of `values`, which must be monotone
/// non-decreasing and bounded by `universe`.
pub fn ef_build(values: &[u64], universe: u64) -> Result<EliasFanoSequence> {
    let count = values.len();
    let low_width = ef_low_width(universe, count);
    let mut low_bits = BitVector::with_capacity(count * low_width as usize);
    let mut upper_bits =
        BitVector::with_capacity(count + (universe >> low_width) as usize + 1);
    let mut prev = 0u64;
    let mut upper_pos = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v < prev || v > universe {
            return Err(Error::NotMonotone { index: i });
        }
        prev = v;
        if low_width > 0 {
            low_bits.push_bits(v & mask(low_width), low_width);
        }
        let target = i + (v >> low_width) as usize;
        upper_bits.push_zeros(target - upper_pos);
        upper_bits.push_bit(true);
        upper_pos = target + 1;
    }
    let upper_select = SelectIndex::build(&upper_bits);
    let seq = EliasFanoSequence {
        low_bits,
        upper_bits,
        upper_select,
        low_width,
        count,
        universe,
    };
    // Space bound: count * (2 + ceil(log2((universe+1)/count))) plus the
    // select samples and one terminator. Structural, so assert always.
    if count > 0 {
        let log = ((universe + 1) as f64 / count as f64).log2().ceil().max(0.0) as usize;
        let bound = count * (2 + log) + seq.upper_select.size_in_bits() + 64;
        assert!(
            seq.size_in_bits() <= bound,
            "EF size {} exceeds bound {}",
            seq.size_in_bits(),
            bound
        );
    }
    Ok(seq)
}

impl EliasFanoSequence {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    /// The `i`-th value; `i < len()`.
    #[inline]
    pub fn access(&self, i: usize) -> u64 {
        assert!(i < self.count);
        let pos = self
            .upper_select
            .select1(&self.upper_bits, i + 1)
            .expect("select within ones count");
        let high = (pos - i) as u64;
        if self.low_width == 0 {
            high
        } else {
            (high << self.low_width) | self.low_bits.get_bits(i * self.low_width as usize, self.low_width)
        }
    }

    pub fn size_in_bits(&self) -> usize {
        self.low_bits.len() + self.upper_bits.len() + self.upper_select.size_in_bits()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        wire::put_u64(out, self.count as u64);
        wire::put_u64(out, self.universe);
        self.low_bits.write_to(out);
        self.upper_bits.write_to(out);
    }

    pub fn read_from(input: &mut &[u8]) -> Result<Self> {
        let count = wire::take_u64(input)? as usize;
        let universe = wire::take_u64(input)?;
        let low_bits = BitVector::read_from(input)?;
        let upper_bits = BitVector::read_from(input)?;
        let low_width = ef_low_width(universe, count);
        if low_bits.len() != count * low_width as usize {
            return Err(Error::Corrupt("EF low bits length mismatch"));
        }
        let upper_select = SelectIndex::build(&upper_bits);
        if upper_select.ones() != count {
            return Err(Error::Corrupt("EF upper ones count mismatch"));
        }
        Ok(EliasFanoSequence {
            low_bits,
            upper_bits,
            upper_select,
            low_width,
            count,
            universe,
        })
    }
}
