//! Seeded random streams.
//!
//! Every random quantity is drawn from a `Xoshiro256PlusPlus` generator
//! keyed by `(seed, domain, index)`: the domain names the purpose (GBA start,
//! simulation chunk, codebook, ...) and the index the unit of work within it.
//! Work units never share a generator, so results do not depend on how they
//! are scheduled across threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

pub mod domain {
    pub const GBA_START: u64 = 1;
    pub const SIM_CHUNK: u64 = 2;
    pub const CODEBOOK: u64 = 3;
    pub const MIXTURE: u64 = 4;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for work unit `index` of `domain` under the user seed.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index);
    Xoshiro256PlusPlus::seed_from_u64(key)
}
