//! Reproducible random streams.
//!
//! Every simulation draws from a ChaCha8 stream keyed by a master seed and
//! a stream index, so replicate `i` sees the same numbers no matter which
//! worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream `index` of the generator seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
