//! Stable seed derivation.
//!
//! `std`'s hashers are not stable across releases, so seeds that end up in
//! manifests and determine output bytes are derived with FNV-1a followed by a
//! SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    U64(u64),
    Str(&'a str),
}

impl From<u64> for Part<'_> {
    fn from(v: u64) -> Self {
        Part::U64(v)
    }
}

impl From<u32> for Part<'_> {
    fn from(v: u32) -> Self {
        Part::U64(v as u64)
    }
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(v: &'a str) -> Self {
        Part::Str(v)
    }
}

/// Hashes an ordered tuple of parts into a seed.
pub fn derive(parts: &[Part<'_>]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    };
    for part in parts {
        match part {
            Part::U64(v) => {
                feed(0x01);
                v.to_le_bytes().into_iter().for_each(&mut feed);
            }
            Part::Str(s) => {
                feed(0x02);
                (s.len() as u64).to_le_bytes().into_iter().for_each(&mut feed);
                s.bytes().for_each(&mut feed);
            }
        }
    }
    splitmix64(h)
}

/// Fast seed mix for per-pixel, per-sample streams.
#[inline]
pub fn pixel_sample_seed(global: u64, x: u32, y: u32, sample: u32) -> u64 {
    let a = splitmix64(global ^ 0x5bd1_e995);
    let b = splitmix64(a ^ ((x as u64) << 32 | y as u64));
    splitmix64(b ^ sample as u64)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
