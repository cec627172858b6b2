//! Reduced-range transcendental kernels.
//!
//! `fastlog` and `fastcos2pi` take raw 32-bit uniforms so the Box-Muller
//! transform never materialises `u` as a float before the range reduction.
//! `fastpow` splits `a^b = 2^(b log2 a)` into exponent and mantissa parts.
//! None of the kernels branch on their input.

mod coeffs;

use coeffs::{EXP2_TAIL, LN_ATANH, LOG2_LEAD, LOG2_TAIL, SIN_PI_TAIL};

const LN2: f64 = std::f64::consts::LN_2;

#[inline(always)]
fn horner(x: f64, c: &[f64]) -> f64 {
    let mut acc = c[c.len() - 1];
    for &k in c[..c.len() - 1].iter().rev() {
        acc = acc.mul_add(x, k);
    }
    acc
}

/// Exact `2^n` built from the exponent field. Valid for `-1022 <= n <= 1023`.
#[inline(always)]
pub fn power2(n: i64) -> f64 {
    f64::from_bits(((1023 + n) as u64) << 52)
}

/// `ln(v * 2^-32)` for `v >= 1`.
///
/// The mantissa is normalised into `[sqrt(1/2), sqrt(2))` so the odd series in
/// `z = (x-1)/(x+1)` stays short and the relative error stays bounded as `v`
/// approaches `2^32`.
#[inline(always)]
pub fn fastlog(v: u32) -> f64 {
    debug_assert!(v != 0, "fastlog(0)");
    let lz = v.leading_zeros();
    let m = v << lz;
    let adj = (m >= 0xB504_F334) as u32;
    // x = m * 2^-(31+adj), exact.
    let x = m as f64 * power2(-(31 + adj as i64));
    let k = adj as i64 - lz as i64 - 1;
    let z = (x - 1.0) / (x + 1.0);
    let w = z * z;
    (k as f64).mul_add(LN2, z * horner(w, &LN_ATANH))
}

/// `cos(2 pi v 2^-32)`.
///
/// The top bit selects the half-turn; the low 31 bits give `u` in `[0, 1)` and
/// `cos(pi u) = -sin(pi (u - 1/2))`.
#[inline(always)]
pub fn fastcos2pi(v: u32) -> f64 {
    let sign = 1.0 - 2.0 * (v >> 31) as f64;
    let u = (v & 0x7FFF_FFFF) as f64 * power2(-31);
    let t = u - 0.5;
    let w = t * t;
    -sign * t * (w - 0.25).mul_add(horner(w, &SIN_PI_TAIL), 2.0)
}

/// `2^x` for `x` in `[0, 1]`.
#[inline(always)]
pub fn exp2_frac(x: f64) -> f64 {
    x.mul_add(horner(x, &EXP2_TAIL), 1.0)
}

/// `log2(x)` for `x` in `[1, 2]`. `z` is carried as a double-double so the
/// result is good to about half an ulp.
#[inline(always)]
pub fn log2_frac(x: f64) -> f64 {
    let num = x - 1.0;
    let den = x + 1.0;
    let den_lo = (x - (den - 1.0)) + (1.0 - (den - (den - 1.0)));
    let z = num / den;
    let r = (-z).mul_add(den, num) - z * den_lo;
    let z_lo = r / den;
    let w = z * z;
    let tail = w * horner(w, &LOG2_TAIL);
    let p = z * LOG2_LEAD.0;
    let pe = z.mul_add(LOG2_LEAD.0, -p);
    p + (pe + z.mul_add(LOG2_LEAD.1 + tail, z_lo * LOG2_LEAD.0))
}

/// `a^b` for finite `a > 0` and finite `b`, with no special-value handling.
#[inline]
pub fn fastpow(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && a.is_finite());
    let bits = a.to_bits();
    let i = ((bits >> 52) & 0x7FF) as i64 - 1023;
    let x = f64::from_bits((bits & 0x000F_FFFF_FFFF_FFFF) | 0x3FF0_0000_0000_0000);
    let f = log2_frac(x);
    let fi = i as f64;
    let ii = (b * (fi + f)).floor();
    power2(ii as i64) * exp2_frac(b.mul_add(f, b.mul_add(fi, -ii)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_closed_forms() {
        assert_eq!(fastlog(1 << 31), -LN2);
        assert!((fastlog(1) - (-32.0 * LN2)).abs() <= 1e-14 * 22.2);
        assert!((fastlog(1) + 22.18070977791825).abs() < 1e-12);
    }

    #[test]
    fn log_near_one_is_small_and_negative() {
        let l = fastlog(u32::MAX);
        let exact = (-(2f64.powi(-32))).ln_1p();
        assert!(((l - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn log_monotone_on_ascending_samples() {
        let mut prev = f64::NEG_INFINITY;
        let mut v: u64 = 1;
        while v <= u32::MAX as u64 {
            let l = fastlog(v as u32);
            assert!(l > prev, "v={v}");
            prev = l;
            v = v * 3 / 2 + 1;
        }
    }

    #[test]
    fn cos_fixed_points() {
        assert_eq!(fastcos2pi(0), 1.0);
        assert_eq!(fastcos2pi(1 << 31), -1.0);
        assert!(fastcos2pi(1 << 30).abs() < 1e-15);
        assert!((fastcos2pi(0xC000_0000)).abs() < 1e-15);
    }

    #[test]
    fn power2_exact() {
        assert_eq!(power2(0), 1.0);
        assert_eq!(power2(10), 1024.0);
        assert_eq!(power2(-3), 0.125);
        assert_eq!(power2(-1022), f64::MIN_POSITIVE);
    }

    #[test]
    fn pow_small_cases() {
        let e = fastpow(2.0, 3.0);
        assert!((e - 8.0).abs() <= 6.0 * f64::EPSILON * 8.0);
        assert_eq!(fastpow(0.37, 0.0), 1.0);
        assert_eq!(fastpow(1.0, 2.5), 1.0);
        let r = fastpow(0.5, 0.5);
        assert!((r - 0.5f64.sqrt()).abs() < 4.0 * f64::EPSILON);
    }

    #[test]
    fn pow_monotone_in_base() {
        for &b in &[0.25, 0.5, 1.5, 3.0] {
            let mut prev = 0.0;
            for k in 1..2000 {
                let a = k as f64 * 1e-3;
                let p = fastpow(a, b);
                assert!(p >= prev, "a={a} b={b}");
                prev = p;
            }
        }
    }

    #[test]
    fn exp2_and_log2_endpoints() {
        assert_eq!(exp2_frac(0.0), 1.0);
        assert!((exp2_frac(1.0) - 2.0).abs() <= 4.5e-16);
        assert_eq!(log2_frac(1.0), 0.0);
        assert!((log2_frac(2.0) - 1.0).abs() <= 2.3e-16);
    }
}
