//! Counter-keyed random streams.
//!
//! Every random draw in a simulation is made from a stream addressed by
//! `(seed, domain, major, minor)`, e.g. `(seed, NOISE, grid point, frame)`.
//! Results therefore do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Distinct domains never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Frame = 1,
    Urp = 2,
    Candidate = 3,
    Analysis = 4,
    Coverage = 5,
}

const MINOR_BITS: u32 = 40;

/// Returns the generator for one addressed stream.
pub fn stream(seed: u64, domain: Domain, major: u64, minor: u64) -> ChaCha8Rng {
    debug_assert!(major < 1 << (64 - MINOR_BITS));
    debug_assert!(minor < 1 << MINOR_BITS);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain as u64)));
    rng.set_stream((major << MINOR_BITS) | minor);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
