//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The PRNG used everywhere in the crate.
pub type Rng = ChaCha8Rng;

/// Independent stream `stream` derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_differ_and_repeat() {
        let a = stream(7, 0).next_u64();
        let b = stream(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, stream(7, 0).next_u64());
    }
}
