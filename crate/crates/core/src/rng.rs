//! Seeded, splittable random streams.
//!
//! Every Monte Carlo work item (a chain path, a bootstrap batch, a duality
//! trial) draws from its own ChaCha8 stream keyed by `(seed, stream)`, so
//! results do not depend on scheduling or on how many items run in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
