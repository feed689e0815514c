//! Counter-based random streams keyed by `(seed, path_index, channel)`.
//!
//! The ChaCha key is derived from `(seed, channel)` and the path index selects the
//! ChaCha stream, so every path and driver owns an independent, reproducible sequence
//! no matter which worker runs it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Channel layout: drivers within a factor, factors within a stage, stages within a run.
pub mod channel {
    /// First driver `W⁽¹⁾` (radial / tangent component along `e_r`).
    pub const RADIAL: u32 = 0;
    /// Second driver `W⁽²⁾` (angular / area driver).
    pub const ANGULAR: u32 = 1;
    /// Independent vertical Brownian motion of the time-changed representation.
    pub const VERTICAL: u32 = 2;
    /// Uniforms for the Brownian-bridge crossing test.
    pub const BRIDGE: u32 = 3;
    /// Uniform reflection axes when the hitting point gives none.
    pub const AXIS: u32 = 4;

    const FACTOR_STRIDE: u32 = 8;
    const STAGE_STRIDE: u32 = 1 << 12;

    pub const fn of(stage: u32, factor: u32, kind: u32) -> u32 {
        stage * STAGE_STRIDE + factor * FACTOR_STRIDE + kind
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent uniform/Gaussian stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

pub fn rng_stream(seed: u64, path_index: u64, channel: u32) -> RngStream {
    let mut state = splitmix64(seed) ^ splitmix64(0x5EED_0000_0000_0000 ^ channel as u64);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path_index);
    RngStream { rng }
}

impl RngStream {
    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}
