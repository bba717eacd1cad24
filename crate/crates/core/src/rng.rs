//! Seed derivation for independent stochastic components.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every stochastic part of a trial draws from its own stream of the trial seed,
/// so changing how much randomness one part consumes never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    NetworkCode = 1,
    Message = 2,
    Secret = 3,
    Adversary = 4,
    Encryption = 5,
    Keys = 6,
    Decoder = 7,
    SessionKey = 8,
}

pub fn component_rng(seed: u64, component: Component) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component as u64);
    rng
}

/// Seed of trial `index` under `base`.
#[inline]
pub fn trial_seed(base: u64, index: u64) -> u64 {
    base ^ index
}
