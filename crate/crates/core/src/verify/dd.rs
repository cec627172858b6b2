//! Double-double arithmetic, the reference for the fast kernels. `exp` and
//! `ln` keep about 96 bits.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const LN2: DD = DD {
    hi: 0.6931471805599453,
    lo: 2.3190468138462996e-17,
};

pub const PI: DD = DD {
    hi: std::f64::consts::PI,
    lo: 1.2246467991473532e-16,
};

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    pub fn sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DD { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DD { hi, lo }
    }

    /// Multiply by an exact power of two, split so that neither factor overflows.
    pub fn ldexp(self, k: i32) -> Self {
        let half = k / 2;
        let f1 = 2f64.powi(half);
        let f2 = 2f64.powi(k - half);
        DD {
            hi: self.hi * f1 * f2,
            lo: self.lo * f1 * f2,
        }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let d = self - DD::new(ax).sqr();
        DD::sum(ax, d.hi * x * 0.5)
    }

    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return DD::ONE;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        // exp(r) = exp(r / 2^10)^(2^10)
        let r = r.ldexp(-10);
        let mut term = DD::ONE;
        let mut s = DD::ONE;
        for n in 1..30 {
            term = (term * r) / DD::new(n as f64);
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            s = s.sqr();
        }
        s.ldexp(k as i32)
    }

    /// Natural log by Newton steps on `exp`, on the mantissa so that no
    /// intermediate leaves the normal range.
    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of non-positive value");
        let e = self.hi.log2().floor() as i32;
        let m = self.ldexp(-e);
        let mut y = DD::new(m.hi.ln());
        for _ in 0..2 {
            y = y + m * (-y).exp() - DD::ONE;
        }
        y + LN2.mul_f64(e as f64)
    }

    fn sin_cos_taylor(x: DD) -> (DD, DD) {
        let x2 = x.sqr();
        let mut sin = x;
        let mut cos = DD::ONE;
        let mut ts = x;
        let mut tc = DD::ONE;
        for n in 1..20 {
            let k = 2 * n;
            tc = -(tc * x2) / DD::new((k * (k - 1)) as f64);
            ts = -(ts * x2) / DD::new((k * (k + 1)) as f64);
            cos = cos + tc;
            sin = sin + ts;
            if tc.hi.abs() < 1e-36 && ts.hi.abs() < 1e-36 {
                break;
            }
        }
        (sin, cos)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }
}

/// `ln(v * 2^-32)`.
pub fn ln_u32(v: u32) -> DD {
    DD::new(v as f64).ln() - LN2.mul_f64(32.0)
}

/// `cos(2 pi v 2^-32)`, reduced exactly on the integer before any rounding.
pub fn cos2pi_u32(v: u32) -> DD {
    // signed turn in [-2^31, 2^31); cos is even
    let t = (v as i32 as i64).abs();
    let n = (t + (1 << 29)) >> 30; // nearest quarter turn
    let r = t - (n << 30);
    let x = PI.mul_f64(r as f64).ldexp(-31);
    let (s, c) = DD::sin_cos_taylor(x);
    match n & 3 {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    }
}

/// `a^b` for `a > 0`.
pub fn pow(a: f64, b: f64) -> DD {
    if b == 0.0 {
        return DD::ONE;
    }
    (DD::new(a).ln().mul_f64(b)).exp()
}

/// `2^x`.
pub fn exp2(x: f64) -> DD {
    LN2.mul_f64(x).exp()
}

/// `log2(x)` for `x > 0`.
pub fn log2(x: f64) -> DD {
    DD::new(x).ln() / LN2
}

/// Spacing of doubles at the magnitude of `x`.
pub fn ulp_at(x: DD) -> f64 {
    let m = x.hi.abs();
    if m == 0.0 {
        return f64::from_bits(1);
    }
    let e = ((m.to_bits() >> 52) & 0x7FF) as i32;
    let mut u = if e > 52 { f64::from_bits(((e - 52) as u64) << 52) } else { f64::from_bits(1u64 << (e - 1).max(0)) };
    // just below a power of two the spacing halves
    if m.to_bits() & 0x000F_FFFF_FFFF_FFFF == 0 && x.lo * x.hi.signum() < 0.0 && e > 1 {
        u *= 0.5;
    }
    u
}

/// `|got - exact|` without rounding the difference away.
pub fn abs_error(got: f64, exact: DD) -> f64 {
    (DD::new(got) - exact).to_f64().abs()
}

pub fn rel_error(got: f64, exact: DD) -> f64 {
    abs_error(got, exact) / exact.hi.abs()
}

pub fn ulp_error(got: f64, exact: DD) -> f64 {
    abs_error(got, exact) / ulp_at(exact)
}
