//! Deterministic random number generation with counter-based stream splitting.
//!
//! Everything stochastic in this crate takes a `u64` seed and derives
//! independent substreams by hashing a path of indices (replicate number,
//! matrix entry, chain id, ...) into a fresh generator state. Two properties
//! follow:
//!
//! * results are identical for any thread count or work ordering, because a
//!   worker's stream depends only on its indices, never on global draw order;
//! * results are stable across releases, because the generator is pinned here
//!   (xoshiro256++ seeded through SplitMix64) rather than inherited from a
//!   dependency.

use crate::math;

/// SplitMix64 step; used for seeding and for mixing path components.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of stream indices.
///
/// `derive_seed(s, &[a, b])` and `derive_seed(derive_seed(s, &[a]), &[b])`
/// intentionally differ; pick one convention per call site.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xa076_1d64_78bd_642f);
        out ^= splitmix64(&mut state);
    }
    out
}

/// xoshiro256++ generator with a Box-Muller cache for normal draws.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    /// Generator seeded by expanding `seed` through SplitMix64.
    pub fn from_seed(seed: u64) -> Self {
        let mut state = seed;
        let s = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Rng {
            s,
            spare_normal: None,
        }
    }

    /// Generator for the substream identified by `path` under `seed`.
    pub fn substream(seed: u64, path: &[u64]) -> Self {
        Rng::from_seed(derive_seed(seed, path))
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 random mantissa bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` by rejection; unbiased.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Standard normal draw (Marsaglia polar method, spare cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let a = 2.0 * self.next_f64() - 1.0;
            let b = 2.0 * self.next_f64() - 1.0;
            let r2 = a * a + b * b;
            if r2 < 1.0 && r2 > 0.0 {
                let f = math::sqrt(-2.0 * math::ln(r2) / r2);
                self.spare_normal = Some(b * f);
                return a * f;
            }
        }
    }

    /// Fill `out` with standard normal draws.
    pub fn normal_fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
