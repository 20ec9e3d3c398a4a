//! Deterministic seed derivation.
//!
//! A scenario is reproduced from one base seed. Every randomized component
//! (world generation, anchor selection, channel fading, sweep cells) draws
//! from its own ChaCha8 stream whose seed is derived as
//! `splitmix64(base ^ (component << 56) ^ index * GOLDEN)`, so components
//! and per-user indices are statistically independent and adding a consumer
//! never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Component {
    World = 1,
    Anchors = 2,
    Channel = 3,
    SweepCell = 4,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `(component, index)` of a scenario.
pub fn derive_seed(base: u64, component: Component, index: u64) -> u64 {
    splitmix64(base ^ ((component as u64) << 56) ^ index.wrapping_mul(GOLDEN))
}

/// ChaCha8 generator for stream `(component, index)`.
pub fn component_rng(base: u64, component: Component, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, component, index))
}

/// ChaCha8 generator from an already-derived seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
