//! Seedable measurement randomness.
//!
//! A generator for seed `s` is ChaCha8 keyed with the 32 bytes formed by the
//! first four SplitMix64 outputs of `s` (little-endian). A uniform draw takes
//! the top 53 bits of one `next_u64` output and scales by 2^-53. Shot `i` of a
//! run with seed `s` uses seed [`shot_seed`]`(s, i)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of SplitMix64: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-shot seed: `splitmix64` applied to `seed + (shot + 1) * GOLDEN_GAMMA`.
pub fn shot_seed(seed: u64, shot: u64) -> u64 {
    let mut state = seed.wrapping_add(shot.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    splitmix64(&mut state)
}

#[derive(Debug, Clone)]
pub struct MeasurementRng {
    inner: ChaCha8Rng,
    draws: u64,
}

impl MeasurementRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        MeasurementRng {
            inner: ChaCha8Rng::from_seed(key),
            draws: 0,
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Number of uniform draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}
