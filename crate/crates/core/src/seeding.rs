//! Independent RNG streams derived from one run seed.
//!
//! Every consumer draws from `ChaCha8Rng` seeded with the run seed and a
//! stream id built from a domain tag and an index, so results do not depend
//! on the order in which consumers run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    NetInit = 1,
    ReplaySampling = 2,
    TrainEpisode = 3,
    MilestoneEpisode = 4,
    GridPoint = 5,
    Baseline = 6,
    Rollout = 7,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) ^ index);
    rng
}
