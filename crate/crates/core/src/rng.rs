//! Seeded random number generation.
//!
//! All stochastic code in this crate draws from [`SplitMix64`], a
//! counter-based 64-bit generator (Steele, Lea & Flood's SplitMix64 finalizer
//! over a Weyl sequence). The generator is fixed here by name so that
//! reimplementations in other languages can reproduce distributional moments;
//! bit streams are only guaranteed to match within this crate.

use rand::{RngCore, SeedableRng};

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64: a counter (Weyl sequence) pushed through an avalanche mix.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derive an independent stream for a named purpose. Mixing the tag
    /// through the output function keeps derived streams decorrelated from
    /// the parent and from each other.
    pub fn derive(seed: u64, tag: u64) -> Self {
        let mut base = SplitMix64::new(seed ^ mix(tag));
        // burn one output so seed/tag pairs differing in low bits diverge
        base.next_u64();
        base
    }

    /// Uniform draw in [0, 1) with 53 random mantissa bits.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for SplitMix64 {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL);
        mix(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        rand::rand_core::impls::fill_bytes_via_next(self, dest)
    }
}

impl SeedableRng for SplitMix64 {
    type Seed = [u8; 8];

    fn from_seed(seed: Self::Seed) -> Self {
        SplitMix64::new(u64::from_le_bytes(seed))
    }

    fn seed_from_u64(state: u64) -> Self {
        SplitMix64::new(state)
    }
}
