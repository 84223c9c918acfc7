//! Seed derivation for reproducible, order-independent Monte Carlo.
//!
//! Every unit of work (a disorder realization, a cascade sample, a restart)
//! gets its own generator derived from the run seed and a stream label, so
//! results do not depend on the order in which work units are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels separating the random inputs of different sub-computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Disorder = 1,
    Perturbation = 2,
    Cascade = 3,
    Field = 4,
    Replicas = 5,
    Restart = 6,
    CavityField = 7,
    SiteFields = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream label and an index into a child seed.
pub fn derive(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream as u64)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, stream: Stream, index: u64) -> Rng {
    rng(derive(seed, stream, index))
}
