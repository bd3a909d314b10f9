//! Counter-based pseudo-random numbers.
//!
//! Every draw is a pure function of `(key, counter)`, so a buffer can be
//! filled in any order, or in parallel, and still come out bit-identical on
//! every platform. The mixing function is the SplitMix64 finalizer:
//!
//! ```text
//! key      = mix(seed)
//! draw(i)  = mix(key + (i + 1) * 0x9E3779B97F4A7C15)      (wrapping u64)
//! mix(z)   = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!            z ^= z >> 27; z *= 0x94D049BB133111EB;
//!            z ^ (z >> 31)
//! unit(i)  = (draw(i) >> 40) / 2^24                        in [0, 1)
//! uniform(i, lo, hi) = lo + (hi - lo) * unit(i)            (f32 arithmetic)
//! ```
//!
//! `split(stream)` derives an independent key as `mix(key ^ mix(stream + 1))`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A stateless, splittable generator addressed by a 64-bit counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix(seed) }
    }

    /// An independent generator for sub-stream `stream`.
    pub fn split(&self, stream: u64) -> Self {
        Self {
            key: mix(self.key ^ mix(stream.wrapping_add(1))),
        }
    }

    #[inline]
    pub fn draw(&self, counter: u64) -> u64 {
        mix(self
            .key
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// 24-bit uniform in `[0, 1)`; every value is exactly representable in f32.
    #[inline]
    pub fn unit_f32(&self, counter: u64) -> f32 {
        (self.draw(counter) >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }

    #[inline]
    pub fn uniform_f32(&self, counter: u64, lo: f32, hi: f32) -> f32 {
        lo + (hi - lo) * self.unit_f32(counter)
    }

    /// 53-bit uniform in `[0, 1)`.
    #[inline]
    pub fn unit_f64(&self, counter: u64) -> f64 {
        (self.draw(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_f64(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit_f64(counter)
    }

    /// Uniform integer in `[lo, hi]`. Modulo bias is below 2^-40 for the
    /// small ranges used in tests.
    pub fn range_usize(&self, counter: u64, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.draw(counter) % span) as usize
    }
}
