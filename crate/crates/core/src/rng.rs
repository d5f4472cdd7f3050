//! Reproducible random streams.
//!
//! Streams are ChaCha8 keyed by a 64-bit seed with a 64-bit stream id, so any
//! (seed, stream) pair yields the same sequence on every platform and
//! independent of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::maps::UnitSquareSample;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { inner }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn square(&mut self) -> UnitSquareSample {
        let e1 = self.uniform();
        let e2 = self.uniform();
        UnitSquareSample::new(e1, e2)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.gen::<u32>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen::<u64>()
    }

    /// Uniform on the unit sphere.
    pub fn sphere(&mut self) -> crate::vec3::Vec3 {
        let z = 1.0 - 2.0 * self.uniform();
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = 2.0 * std::f64::consts::PI * self.uniform();
        crate::vec3::Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }
}

/// Mixes a seed with a sub-stream label, for deriving independent seeds.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
