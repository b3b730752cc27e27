//! Deterministic random streams for parallel replication.
//!
//! Every unit of work (a replication, a trial) gets its own ChaCha8 stream
//! keyed by `(seed, domain)` and selected by its index through the cipher's
//! 64-bit stream id. A stream is a pure function of those three numbers, so
//! the results of a run never depend on how work is scheduled over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Stream domains, so different consumers of one seed never share streams.
pub mod domain {
    pub const REPLICATIONS: u64 = 0x5245_504c;
    pub const DELTA_MOMENTS: u64 = 0x4445_4c54;
    pub const FIRST_DIFFERENCE: u64 = 0x4c45_4d31;
    pub const LOCALITY: u64 = 0x4c45_4d32;
    pub const MC_CALIBRATION: u64 = 0x4d43_414c;
    pub const SELECTORS: u64 = 0x5345_4c53;
    pub const PAIRS: u64 = 0x5041_4952;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Factory of independent, index-addressable streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    key: [u8; 32],
}

impl StreamFactory {
    pub fn new(seed: u64, domain: u64) -> Self {
        let mut state = seed ^ domain.rotate_left(32);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    /// The stream for work item `index`.
    pub fn stream(&self, index: u64) -> Stream {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Shorthand for a single stream, mostly for tests and examples.
pub fn stream(seed: u64, domain: u64, index: u64) -> Stream {
    StreamFactory::new(seed, domain).stream(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let f = StreamFactory::new(7, domain::REPLICATIONS);
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .zip(f.stream(3).random_iter::<u64>())
            .map(|(_, x)| x)
            .collect();
        let b: Vec<u64> = (0..4)
            .map(|_| 0)
            .zip(f.stream(3).random_iter::<u64>())
            .map(|(_, x)| x)
            .collect();
        assert_eq!(a, b);
        let c: u64 = f.stream(4).random();
        assert_ne!(a[0], c);
        let other = StreamFactory::new(7, domain::DELTA_MOMENTS);
        let d: u64 = other.stream(3).random();
        assert_ne!(a[0], d);
    }
}
