//! Seeded, random-access source of the i.i.d. ±1 coin matrix.
//!
//! Every entry `X_m(k)` is a pure function of `(seed, m, k)`. Row `m` is the
//! ChaCha8 stream number `m` under a key expanded from the seed, and coin `k`
//! is bit `(k - 1) % 64` of the 64-bit word at block `(k - 1) / 64`. Nothing
//! is stored, so rows can be consumed to any data-dependent depth.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::Error;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed for replication `replication` of an experiment seeded with `self`.
    ///
    /// Injective in `replication` for a fixed base seed: the map is a
    /// composition of bijections on `u64`.
    pub fn derive(self, replication: u64) -> Seed {
        Seed(mix64(self.0 ^ mix64(replication.wrapping_add(GOLDEN_GAMMA))))
    }
}

/// Free-function form of [`Seed::derive`].
pub fn derive_seed(seed: Seed, replication: u64) -> Seed {
    seed.derive(replication)
}

// splitmix64 finalizer; a bijection on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Seed {
    type Err = Error;

    /// Accepts decimal or `0x`-prefixed hexadecimal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
            None => s.replace('_', "").parse::<u64>(),
        };
        parsed
            .map(Seed)
            .map_err(|e| Error::InvalidConfig(format!("bad seed `{s}`: {e}")))
    }
}

/// The logical infinite matrix `X_m(k)`, `m ≥ 0`, `k ≥ 1`.
#[derive(Clone)]
pub struct CoinMatrix {
    seed: Seed,
    key: [u8; 32],
}

impl fmt::Debug for CoinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoinMatrix").field("seed", &self.seed).finish()
    }
}

impl CoinMatrix {
    pub fn new(seed: Seed) -> Self {
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed.0).fill_bytes(&mut key);
        CoinMatrix { seed, key }
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    fn row_rng(&self, m: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(u64::from(m));
        rng
    }

    /// Entry `X_m(k)`. Panics if `k == 0`.
    pub fn coin(&self, m: u32, k: u64) -> i8 {
        assert!(k >= 1, "coin index is 1-based");
        let block = (k - 1) / 64;
        let mut rng = self.row_rng(m);
        rng.set_word_pos(u128::from(block) * 2);
        bit_to_sign(rng.next_u64(), ((k - 1) % 64) as u32)
    }

    /// Sequential reader over row `m`, starting at `k = 1`.
    pub fn row(&self, m: u32) -> CoinRow {
        CoinRow {
            rng: self.row_rng(m),
            word: 0,
            bits_left: 0,
            consumed: 0,
        }
    }
}

#[inline]
fn bit_to_sign(word: u64, bit: u32) -> i8 {
    if (word >> bit) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Streaming view of one row of the coin matrix.
pub struct CoinRow {
    rng: ChaCha8Rng,
    word: u64,
    bits_left: u32,
    consumed: u64,
}

impl CoinRow {
    /// Number of coins read so far; the next coin is `X_m(consumed + 1)`.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    #[inline]
    pub fn next_sign(&mut self) -> i8 {
        if self.bits_left == 0 {
            self.word = self.rng.next_u64();
            self.bits_left = 64;
        }
        let bit = 64 - self.bits_left;
        self.bits_left -= 1;
        self.consumed += 1;
        bit_to_sign(self.word, bit)
    }
}

impl Iterator for CoinRow {
    type Item = i8;

    fn next(&mut self) -> Option<i8> {
        Some(self.next_sign())
    }
}
