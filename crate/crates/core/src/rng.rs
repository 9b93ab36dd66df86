//! Seed derivation and the counter-based stream used everywhere randomness is needed.
//!
//! Every stream is a ChaCha8 generator keyed by 256 bits expanded from `(master, path)`
//! with SplitMix64 finalizers, so sub-streams for parallel trials are independent of
//! scheduling and identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A master seed plus a derivation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub path: Vec<u64>,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master, path: Vec::new() }
    }

    /// Extends the path by one component.
    pub fn child(&self, component: u64) -> Self {
        let mut path = self.path.clone();
        path.push(component);
        Seed { master: self.master, path }
    }

    /// 64-bit digest of the seed and its path.
    pub fn digest(&self) -> u64 {
        let mut h = splitmix64(self.master);
        for (depth, &c) in self.path.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(c.wrapping_add((depth as u64 + 1) << 56)));
        }
        h
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut h = self.digest();
        for chunk in key.chunks_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_path_same_stream() {
        let a = Seed::new(7).child(1).child(2);
        let b = Seed::new(7).child(1).child(2);
        assert_eq!(a.rng().next_u64(), b.rng().next_u64());
    }

    #[test]
    fn path_order_matters() {
        let a = Seed::new(7).child(1).child(2);
        let b = Seed::new(7).child(2).child(1);
        assert_ne!(a.digest(), b.digest());
        assert_ne!(Seed::new(7).digest(), Seed::new(7).child(0).digest());
    }

    const PINNED: u64 = 8121328050469401660;

    #[test]
    fn known_first_word_is_stable() {
        // Pinned so a dependency bump that changes the stream is noticed.
        let first = Seed::new(0).child(3).rng().next_u64();
        assert_eq!(first, PINNED);
    }
}
