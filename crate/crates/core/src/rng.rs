//! Seeded, splittable randomness.
//!
//! A run seed fans out into independent ChaCha streams, one per consumer, so
//! the perturbation noise of an instance does not depend on how many samples
//! are later drawn from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Instance = 1,
    Perturb = 2,
    Sampling = 3,
    PowerMethod = 4,
    Noise = 5,
}

/// Generator for `(seed, domain, sub)`; distinct triples give independent streams.
pub fn stream(seed: u64, domain: Domain, sub: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | (sub & 0xFFFF_FFFF_FFFF));
    rng
}
