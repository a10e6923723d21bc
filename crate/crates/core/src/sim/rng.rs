//! Reproducible random substreams.
//!
//! Every (scenario, replicate, purpose) triple gets its own generator, seeded
//! by an avalanche mix of the master seed and the three indices. Results thus
//! depend only on the master seed, not on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every substream.
pub type SimRng = ChaCha8Rng;

/// Recorded in run manifests so a run can be reproduced.
pub const GENERATOR_ID: &str =
    "ChaCha8Rng/rand_chacha-0.9; seed = splitmix64(master, scenario, replicate, stream)";

/// Purpose of a substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Sample sizes, within-study variances, true and observed effects.
    Dataset = 1,
    /// The extra true effect used for the tower-rule check.
    NewEffect = 2,
    /// Bootstrap draws.
    Bootstrap = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream_seed(master: u64, scenario: u64, replicate: u64, stream: Stream) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ scenario);
    h = splitmix64(h ^ replicate);
    splitmix64(h ^ stream as u64)
}

pub fn substream(master: u64, scenario: u64, replicate: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(substream_seed(master, scenario, replicate, stream))
}
