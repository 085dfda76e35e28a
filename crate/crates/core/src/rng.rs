//! Bit-exact seeding and pseudo-random generation.
//!
//! `substream_seed(seed, index)` applies the SplitMix64 finalizer to
//! `seed ^ (index * 0x9E3779B97F4A7C15)`:
//!
//! ```text
//! x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
//! x ^= x >> 27; x *= 0x94D049BB133111EB;
//! x ^= x >> 31;
//! ```
//!
//! The finalizer is a bijection, so distinct indices under one seed never
//! collide. Spreading the index by the golden-ratio constant keeps the streams
//! of nearby seeds apart.
//!
//! [`XorShiftStar`] is xorshift64*: `x ^= x >> 12; x ^= x << 25; x ^= x >> 27`,
//! output `x * 0x2545F4914F6CDD1D`. A zero state is replaced by
//! `0x9E3779B97F4A7C15`. Bounded draws use rejection below `2^64 mod n`.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
pub const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;
pub const XORSHIFT_MUL: u64 = 0x2545_F491_4F6C_DD1D;

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(MIX_MUL_1);
    x ^= x >> 27;
    x = x.wrapping_mul(MIX_MUL_2);
    x ^ (x >> 31)
}

/// Independent seed for stream `index` under `seed`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ index.wrapping_mul(GOLDEN_GAMMA))
}

#[derive(Debug, Clone)]
pub struct XorShiftStar {
    state: u64,
}

impl XorShiftStar {
    pub fn new(seed: u64) -> Self {
        XorShiftStar {
            state: if seed == 0 { GOLDEN_GAMMA } else { seed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_MUL)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// Uniform permutation of `0..d`.
    pub fn permutation(&mut self, d: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..d).collect();
        self.shuffle(&mut p);
        p
    }

    /// Uniform fixed-point-free involution of `0..d` (`d` even): shuffle, then
    /// pair consecutive entries.
    pub fn perfect_matching(&mut self, d: usize) -> Vec<usize> {
        assert!(d.is_multiple_of(2), "perfect matching needs an even size");
        let p = self.permutation(d);
        let mut m = vec![0usize; d];
        for pair in p.chunks_exact(2) {
            m[pair[0]] = pair[1];
            m[pair[1]] = pair[0];
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_seed_is_replaced() {
        let mut a = XorShiftStar::new(0);
        let mut b = XorShiftStar::new(GOLDEN_GAMMA);
        assert_eq!(a.next_u64(), b.next_u64());
        assert_ne!(XorShiftStar::new(0).next_u64(), 0);
    }

    #[test]
    fn bounded_draws() {
        let mut rng = XorShiftStar::new(1);
        assert!((0..100).all(|_| rng.below(1) == 0));
        assert!((0..1000).all(|_| rng.below(7) < 7));
    }

    #[test]
    #[should_panic(expected = "empty range")]
    fn empty_range_panics() {
        XorShiftStar::new(1).below(0);
    }

    #[test]
    fn mixer_is_the_splitmix_finalizer() {
        assert_eq!(mix64(0), 0);
        assert_eq!(substream_seed(5, 0), mix64(5));
    }
}
