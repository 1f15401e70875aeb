//! Seeded, index-addressable RNG streams.
//!
//! Every random consumer draws from `ChaCha8Rng` keyed by `(seed, domain)`
//! with the ChaCha stream set to an item index (community id, trial id).
//! Results therefore do not depend on which thread handles which item.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Key domain for per-community graph generation.
pub const GRAPH_DOMAIN: u64 = 0;
/// Key domain for per-trial routing.
pub const TRIAL_DOMAIN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index);
    rng
}
