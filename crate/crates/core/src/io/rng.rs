//! Deterministic random streams.
//!
//! Every random quantity in a generated dataset is drawn from a xoshiro256++
//! generator whose state is filled by splitmix64. Streams are keyed by
//! `(dataset seed, example index, purpose)` so that the content of an example
//! never depends on the order in which workers produce it.
//!
//! Derivation:
//!
//! ```text
//! example_seed = splitmix64(dataset_seed ^ (index * 0x9E3779B97F4A7C15))
//! purpose_seed = splitmix64(example_seed ^ ((tag + 1) * 0xD1B54A32D192ED03))
//! state[0..4]  = four successive splitmix64 outputs starting from purpose_seed
//! ```
//!
//! where `splitmix64(x)` is the first output of a splitmix64 generator whose
//! state is `x`.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const PURPOSE_GAMMA: u64 = 0xD1B5_4A32_D192_ED03;

/// Splitmix64 generator. Used only to expand seeds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// One splitmix64 step from state `x`.
pub fn splitmix64(x: u64) -> u64 {
    SplitMix64::new(x).next_u64()
}

/// What a random stream is used for. The discriminant is part of the seed
/// derivation and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Fractal = 0,
    Synthesis = 1,
    Mask = 2,
    Phase = 3,
    Coils = 4,
    Noise = 5,
}

impl Purpose {
    pub const ALL: [Purpose; 6] = [
        Purpose::Fractal,
        Purpose::Synthesis,
        Purpose::Mask,
        Purpose::Phase,
        Purpose::Coils,
        Purpose::Noise,
    ];
}

/// xoshiro256++ generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    pub fn from_state(s: [u64; 4]) -> Self {
        assert!(s.iter().any(|&w| w != 0), "xoshiro state must be nonzero");
        Self { s }
    }

    /// Fill the state with four splitmix64 outputs.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        Self::from_state(s)
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        let mut chunks = out.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        let tail = chunks.into_remainder();
        if tail.len() > 4 {
            tail.copy_from_slice(&self.next_u64().to_le_bytes()[..tail.len()]);
        } else if !tail.is_empty() {
            // Short tails take the high half, as rand_core does.
            let hi = (self.next_u64() >> 32) as u32;
            tail.copy_from_slice(&hi.to_le_bytes()[..tail.len()]);
        }
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Pair of independent standard normals (Box-Muller).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }
}

pub fn example_seed(dataset_seed: u64, index: u64) -> u64 {
    splitmix64(dataset_seed ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn purpose_seed(example_seed: u64, purpose: Purpose) -> u64 {
    splitmix64(example_seed ^ (purpose as u64 + 1).wrapping_mul(PURPOSE_GAMMA))
}

/// Generator for one `(dataset, example, purpose)` triple.
pub fn derive_rng(dataset_seed: u64, index: u64, purpose: Purpose) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(purpose_seed(example_seed(dataset_seed, index), purpose))
}
