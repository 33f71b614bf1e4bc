//! Hierarchical random streams.
//!
//! Every stochastic decision in a search is drawn from a [`Stream`] derived
//! from the run seed by a path of integer keys (algorithm, level, generation,
//! offspring index, ...). Two decisions with the same path see the same
//! numbers no matter in which order, or on which thread, they are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream(u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(splitmix64(seed))
    }

    pub fn child(self, key: u64) -> Self {
        Stream(splitmix64(self.0 ^ splitmix64(key.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn path(self, keys: &[u64]) -> Self {
        keys.iter().fold(self, |s, &k| s.child(k))
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn children_are_distinct_and_stable() {
        let s = Stream::new(7);
        assert_eq!(s.child(1), Stream::new(7).child(1));
        assert_ne!(s.child(1), s.child(2));
        assert_ne!(s.child(1).child(2), s.child(2).child(1));
        let a: u64 = s.child(3).rng().gen();
        let b: u64 = s.child(3).rng().gen();
        assert_eq!(a, b);
    }
}
