//! Counter-based pairwise random numbers.
//!
//! Every particle carries a 32-bit signature hashed from its tag and velocity
//! bits. A pair's uniforms are a short TEA hash of the two signatures, the
//! global seed and the step, so any domain holding copies of both particles
//! reproduces the same numbers without communication.

use crate::fastmath::{fastcos2pi, fastlog};

pub const TEA_DELTA: u32 = 0x9E37_79B9;

/// TEA key schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeaKey(pub [u32; 4]);

pub const DEFAULT_KEY: TeaKey = TeaKey([0xA341_316C, 0xC801_3EA4, 0xAD90_777D, 0x7E95_761E]);

/// Rounds of the signature blend.
pub const SIGNATURE_ROUNDS: u32 = 16;
/// Rounds of the per-pair hash.
pub const PAIR_ROUNDS: u32 = 4;

#[inline(always)]
pub fn tea_hash(rounds: u32, mut v0: u32, mut v1: u32, key: &TeaKey) -> (u32, u32) {
    let [k0, k1, k2, k3] = key.0;
    let mut sum = 0u32;
    for _ in 0..rounds {
        sum = sum.wrapping_add(TEA_DELTA);
        v0 = v0.wrapping_add(
            (v1 << 4).wrapping_add(k0) ^ v1.wrapping_add(sum) ^ (v1 >> 5).wrapping_add(k1),
        );
        v1 = v1.wrapping_add(
            (v0 << 4).wrapping_add(k2) ^ v0.wrapping_add(sum) ^ (v0 >> 5).wrapping_add(k3),
        );
    }
    (v0, v1)
}

/// Leading 11 mantissa bits of a double.
#[inline(always)]
fn mantissa11(x: f64) -> u32 {
    ((x.to_bits() >> 41) & 0x7FF) as u32
}

/// Round-robin interleave of three 11-bit fields, x at bit 0. Bit 32 is dropped.
#[inline(always)]
pub(crate) fn interleave11(a: u32, b: u32, c: u32) -> u32 {
    let spread = |v: u32| -> u64 {
        let mut v = v as u64 & 0x7FF;
        v = (v | (v << 32)) & 0x001F_0000_0000_FFFF;
        v = (v | (v << 16)) & 0x001F_0000_FF00_00FF;
        v = (v | (v << 8)) & 0x100F_00F0_0F00_F00F;
        v = (v | (v << 4)) & 0x10C3_0C30_C30C_30C3;
        v = (v | (v << 2)) & 0x1249_2492_4924_9249;
        v
    };
    (spread(a) | (spread(b) << 1) | (spread(c) << 2)) as u32
}

/// Per-particle signature from the tag and the current velocity.
#[inline]
pub fn make_signature(tag: u32, vel: [f64; 3]) -> u32 {
    let v0 = tag.reverse_bits();
    let v1 = interleave11(mantissa11(vel[0]), mantissa11(vel[1]), mantissa11(vel[2]));
    let (a, b) = tea_hash(SIGNATURE_ROUNDS, v0, v1, &DEFAULT_KEY);
    a ^ b
}

/// Seed and step shared by every domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRandomState {
    pub global_seed: u32,
    pub step: u64,
}

impl PairRandomState {
    pub fn new(global_seed: u32, step: u64) -> Self {
        Self { global_seed, step }
    }

    /// Word folded into the higher-tag signature for this step.
    #[inline]
    pub fn step_mix(&self) -> u32 {
        tea_hash(PAIR_ROUNDS, self.global_seed, self.step as u32, &DEFAULT_KEY).1
    }
}

/// Two uniform words for the pair. Symmetric in `(i, j)`.
#[inline(always)]
pub fn pair_uniforms_mixed(sig_i: u32, sig_j: u32, tag_i: u32, tag_j: u32, step_mix: u32) -> (u32, u32) {
    debug_assert!(tag_i != tag_j);
    let (lo, hi) = if tag_i < tag_j { (sig_i, sig_j) } else { (sig_j, sig_i) };
    tea_hash(PAIR_ROUNDS, lo, hi ^ step_mix, &DEFAULT_KEY)
}

#[inline]
pub fn pair_uniforms(
    sig_i: u32,
    sig_j: u32,
    tag_i: u32,
    tag_j: u32,
    state: &PairRandomState,
) -> (u32, u32) {
    pair_uniforms_mixed(sig_i, sig_j, tag_i, tag_j, state.step_mix())
}

/// Box-Muller with the custom kernels: `sqrt(-2 ln ua) cos(2 pi ub)`.
#[inline(always)]
pub fn gaussian(ua: u32, ub: u32) -> f64 {
    let ua = ua.max(1);
    (-2.0 * fastlog(ua)).sqrt() * fastcos2pi(ub)
}

/// Sequential counter stream for setup-time sampling (positions, velocities).
#[derive(Debug, Clone)]
pub struct CounterStream {
    seed: u32,
    stream: u32,
    counter: u64,
}

impl CounterStream {
    pub fn new(seed: u32, stream: u32) -> Self {
        Self {
            seed,
            stream,
            counter: 0,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        let c = self.counter;
        self.counter += 1;
        let (a, b) = tea_hash(
            SIGNATURE_ROUNDS,
            (c as u32) ^ self.stream.rotate_left(16),
            ((c >> 32) as u32) ^ self.seed,
            &DEFAULT_KEY,
        );
        a ^ b.rotate_left(7)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        let hi = (self.next_u32() >> 5) as u64;
        let lo = (self.next_u32() >> 6) as u64;
        ((hi << 26) | lo) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let a = self.next_u32();
        let b = self.next_u32();
        gaussian(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_is_identity() {
        assert_eq!(tea_hash(0, 7, 9, &DEFAULT_KEY), (7, 9));
    }

    #[test]
    fn bit_reverse_of_one() {
        assert_eq!(1u32.reverse_bits(), 0x8000_0000);
    }

    #[test]
    fn interleave_matches_naive() {
        let naive = |a: u32, b: u32, c: u32| {
            let mut out = 0u64;
            for k in 0..11 {
                out |= (((a >> k) & 1) as u64) << (3 * k);
                out |= (((b >> k) & 1) as u64) << (3 * k + 1);
                out |= (((c >> k) & 1) as u64) << (3 * k + 2);
            }
            out as u32
        };
        let mut s = CounterStream::new(3, 0);
        for _ in 0..2000 {
            let (a, b, c) = (s.next_u32() & 0x7FF, s.next_u32() & 0x7FF, s.next_u32() & 0x7FF);
            assert_eq!(interleave11(a, b, c), naive(a, b, c));
        }
        assert_eq!(interleave11(0x7FF, 0x7FF, 0x7FF), u32::MAX);
    }

    #[test]
    fn zero_velocity_signature() {
        let (a, b) = tea_hash(16, 5u32.reverse_bits(), 0, &DEFAULT_KEY);
        assert_eq!(make_signature(5, [0.0; 3]), a ^ b);
    }

    #[test]
    fn pair_is_symmetric() {
        let st = PairRandomState::new(11, 42);
        assert_eq!(pair_uniforms(100, 200, 1, 2, &st), pair_uniforms(200, 100, 2, 1, &st));
    }

    #[test]
    fn gaussian_closed_form() {
        let g = gaussian(1 << 31, 0);
        assert!((g - 1.1774100225154747).abs() < 1e-11);
        assert!(gaussian(0, 0).is_finite());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = CounterStream::new(1, 2);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
