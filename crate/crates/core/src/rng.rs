//! Seeded random streams.
//!
//! Every stochastic routine takes its RNG from the caller. Independent work
//! items (trees, samples) get their own ChaCha stream keyed by
//! `(seed, index)`, so results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StaRng = ChaCha8Rng;

/// Root generator for `seed`.
pub fn seeded(seed: u64) -> StaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
