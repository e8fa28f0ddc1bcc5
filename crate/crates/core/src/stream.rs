//! Seed and substream policy.
//!
//! Two top-level seeds drive every experiment: a family seed (frozen
//! quantities like the spike direction and the reservoir basis) and a run
//! seed (per-trajectory and per-sample randomness). Substreams are derived
//! through ChaCha's documented stream mechanism: worker `j` gets the stream
//! with index `j + 1`, leaving stream 0 to the seed's owner. Workers on
//! distinct streams never share state, so parallel execution is both safe
//! and reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root generator for a seed (stream 0).
pub fn root_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for worker `index` under `seed` (streams 1, 2, ...).
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
