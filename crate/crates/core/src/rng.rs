//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a generator keyed by
//! `(seed, participant, day, purpose)`, so results do not depend on the order
//! in which participants are processed or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Population = 1,
    Policy = 3,
    Message = 4,
    Feedback = 5,
    Steps = 6,
    Attrition = 7,
    Bootstrap = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the key into a 64-bit stream seed.
pub fn stream_key(seed: u64, entity: u64, day: i64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ entity);
    h = splitmix64(h ^ (day as u64));
    splitmix64(h ^ purpose as u64)
}

pub fn stream(seed: u64, entity: u64, day: i64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, entity, day, purpose))
}
