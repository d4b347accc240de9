//! Seeded randomness shared by every stochastic stage.
//!
//! All streams are ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Floats and bounded integers are derived from
//! raw `next_u64` draws with the fixed formulas below rather than through
//! `rand`'s distribution machinery, so a given seed yields the same values in
//! any implementation that reproduces ChaCha8 and these two formulas.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Offsets added to the global seed for each pipeline stage.
pub mod stage {
    pub const INIT: u64 = 1;
    pub const SPLIT: u64 = 2;
    /// LDA for topic count `c` uses `LDA + c`.
    pub const LDA: u64 = 1_000;
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive(seed: u64, offset: u64) -> u64 {
    seed.wrapping_add(offset)
}

/// Uniform in `[0, 1)`: top 53 bits of one draw scaled by 2^-53.
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[lo, hi)`.
pub fn uniform_range(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Integer in `[0, n)` by 64x64 -> 128 multiply-high. Bias is at most n / 2^64.
pub fn below(rng: &mut Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Fisher-Yates, walking from the back.
pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..100 {
            assert_eq!(uniform(&mut a).to_bits(), uniform(&mut b).to_bits());
        }
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut r = seeded(1);
        for n in 1..50 {
            for _ in 0..20 {
                assert!(below(&mut r, n) < n);
            }
        }
        for _ in 0..1000 {
            let u = uniform(&mut r);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = seeded(3);
        let mut v: Vec<usize> = (0..100).collect();
        shuffle(&mut r, &mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
