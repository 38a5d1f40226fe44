//! Minimal perfect hash functions in the RecSplit family.
//!
//! A [`RecSplitMphf`](mphf::RecSplitMphf) maps each key of a fixed input set
//! to a distinct slot in `[0, n)` using a few bits per key. Keys are hashed
//! once into 128-bit codes, distributed into buckets, and each bucket is
//! split by a small tree of brute-forced splitting seeds down to leaves,
//! where a seed describing a bijection onto the leaf slots is searched. Only
//! the seeds are stored, Golomb-Rice coded, plus an Elias-Fano index locating
//! each bucket.
//!
//! Two leaf search strategies are built in: plain brute force, and a
//! rotation-based search that partitions each leaf into two sets and reuses
//! every failed seed `m` ways by rotating the second set's bit mask, which
//! cuts leaf search work by roughly the leaf size. The space cost of that
//! trade is a few hundredths of a bit per key at small leaves and vanishes
//! at large ones, where the strategy is most useful. The [`analysis`] module
//! quantifies the trade both analytically and by simulation, alongside a
//! small cuckoo-style leaf placement lab.

pub mod analysis;
pub mod bits;
pub mod builder;
pub mod codes;
pub mod error;
pub mod hash;
pub mod mphf;
pub mod search;
pub mod tree;
mod wire;

pub use builder::{build, build_with_stats, BuildStats};
pub use error::{Error, Result};
pub use hash::{master_hash, MasterHashCode, MphfConfig};
pub use mphf::RecSplitMphf;
