//! Error sweeps of the fast kernels against the double-double reference.

use crate::fastmath::{exp2_frac, fastcos2pi, fastlog, fastpow, log2_frac};
use crate::rng::CounterStream;
use crate::verify::dd;

/// Largest relative error allowed for `fastlog`.
pub const LOG_BOUND: f64 = 4.21e-12;
/// Largest error allowed for `fastcos2pi`: relative where `|cos| > COS_ROOT_BAND`,
/// absolute inside the band.
pub const COS_BOUND: f64 = 1.10e-10;
pub const COS_ROOT_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Log,
    Cos,
    Pow,
    Exp2Frac,
    Log2Frac,
}

impl Kernel {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fastlog" | "log" => Kernel::Log,
            "fastcos2pi" | "cos" => Kernel::Cos,
            "fastpow" | "pow" => Kernel::Pow,
            "exp2_frac" => Kernel::Exp2Frac,
            "log2_frac" => Kernel::Log2Frac,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Log => "fastlog",
            Kernel::Cos => "fastcos2pi",
            Kernel::Pow => "fastpow",
            Kernel::Exp2Frac => "exp2_frac",
            Kernel::Log2Frac => "log2_frac",
        }
    }
}

/// One evaluated input.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    /// The argument; for the 32-bit kernels the integer value.
    pub input: f64,
    /// Exponent of `fastpow`, zero for the other kernels.
    pub exponent: f64,
    pub output: f64,
    pub oracle: f64,
    pub ulp_error: f64,
    /// Relative error, or absolute error near a cosine root.
    pub error: f64,
}

/// Summary of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepStats {
    pub samples: u64,
    pub max_error: f64,
    pub max_ulp: f64,
    pub worst: Option<SweepPoint>,
}

impl Default for SweepStats {
    fn default() -> Self {
        Self {
            samples: 0,
            max_error: 0.0,
            max_ulp: 0.0,
            worst: None,
        }
    }
}

impl SweepStats {
    pub fn add(&mut self, p: SweepPoint) {
        self.samples += 1;
        if p.ulp_error > self.max_ulp {
            self.max_ulp = p.ulp_error;
        }
        if p.error > self.max_error || self.worst.is_none() {
            self.max_error = self.max_error.max(p.error);
            self.worst = Some(p);
        }
    }
}

pub fn log_point(v: u32) -> SweepPoint {
    let out = fastlog(v);
    let o = dd::ln_u32(v);
    SweepPoint {
        input: v as f64,
        exponent: 0.0,
        output: out,
        oracle: o.to_f64(),
        ulp_error: dd::ulp_error(out, o),
        error: dd::rel_error(out, o),
    }
}

pub fn cos_point(v: u32) -> SweepPoint {
    let out = fastcos2pi(v);
    let o = dd::cos2pi_u32(v);
    let error = if o.hi.abs() > COS_ROOT_BAND {
        dd::rel_error(out, o)
    } else {
        dd::abs_error(out, o)
    };
    SweepPoint {
        input: v as f64,
        exponent: 0.0,
        output: out,
        oracle: o.to_f64(),
        ulp_error: dd::ulp_error(out, o),
        error,
    }
}

pub fn pow_point(a: f64, b: f64) -> SweepPoint {
    let out = fastpow(a, b);
    let o = dd::pow(a, b);
    let u = dd::ulp_error(out, o);
    SweepPoint {
        input: a,
        exponent: b,
        output: out,
        oracle: o.to_f64(),
        ulp_error: u,
        error: u,
    }
}

pub fn exp2_frac_point(x: f64) -> SweepPoint {
    let out = exp2_frac(x);
    let o = dd::exp2(x);
    let u = dd::ulp_error(out, o);
    SweepPoint {
        input: x,
        exponent: 0.0,
        output: out,
        oracle: o.to_f64(),
        ulp_error: u,
        error: u,
    }
}

pub fn log2_frac_point(x: f64) -> SweepPoint {
    let out = log2_frac(x);
    let o = dd::log2(x);
    let u = if x == 1.0 { 0.0 } else { dd::ulp_error(out, o) };
    SweepPoint {
        input: x,
        exponent: 0.0,
        output: out,
        oracle: o.to_f64(),
        ulp_error: u,
        error: u,
    }
}

/// Inputs for the 32-bit kernels: every `stride`-th value, the values
/// around each power of two and the quarter turns, the ends of the range,
/// and `random` values from a counter stream.
pub fn u32_inputs(stride: u32, random: u64, seed: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (0..=u32::MAX / stride.max(1)).map(|k| k * stride.max(1)).collect();
    for b in 0..32 {
        let p = 1u64 << b;
        for d in -16i64..=16 {
            let x = p as i64 + d;
            if (1..=u32::MAX as i64).contains(&x) {
                v.push(x as u32);
            }
        }
    }
    for q in [1u64 << 30, 3 << 30, 0xB504_F334] {
        for d in -4096i64..=4096 {
            v.push((q as i64 + d) as u32);
        }
    }
    v.extend((0..4096u32).map(|k| u32::MAX - k));
    let mut rng = CounterStream::new(seed, 0x5EED);
    v.extend((0..random).map(|_| rng.next_u32()));
    v
}

fn sweep_u32(inputs: &[u32], f: fn(u32) -> SweepPoint, mut sink: impl FnMut(&SweepPoint)) -> SweepStats {
    let mut st = SweepStats::default();
    for &x in inputs {
        let p = f(x);
        sink(&p);
        st.add(p);
    }
    st
}

pub fn sweep_log(inputs: &[u32], sink: impl FnMut(&SweepPoint)) -> SweepStats {
    let xs: Vec<u32> = inputs.iter().copied().filter(|&v| v != 0).collect();
    sweep_u32(&xs, log_point, sink)
}

pub fn sweep_cos(inputs: &[u32], sink: impl FnMut(&SweepPoint)) -> SweepStats {
    sweep_u32(inputs, cos_point, sink)
}

/// `n` samples of `fastpow` with `a` log-uniform or uniform (alternating) in
/// `[a_lo, a_hi]` and `b` uniform in `[b_lo, b_hi]`.
pub fn sweep_pow(
    n: u64,
    (a_lo, a_hi): (f64, f64),
    (b_lo, b_hi): (f64, f64),
    seed: u32,
    mut sink: impl FnMut(&SweepPoint),
) -> SweepStats {
    let mut rng = CounterStream::new(seed, 0x90E);
    let (la, lb) = (a_lo.ln(), a_hi.ln());
    let mut st = SweepStats::default();
    for k in 0..n {
        let u = rng.uniform();
        let a = if k % 2 == 0 { (la + u * (lb - la)).exp() } else { a_lo + u * (a_hi - a_lo) };
        let a = a.clamp(a_lo, a_hi);
        let b = b_lo + rng.uniform() * (b_hi - b_lo);
        let p = pow_point(a, b);
        sink(&p);
        st.add(p);
    }
    st
}

/// Evenly spaced and random points of a helper on its reduced range.
pub fn sweep_helper(kernel: Kernel, n: u64, seed: u32, mut sink: impl FnMut(&SweepPoint)) -> SweepStats {
    let (lo, f): (f64, fn(f64) -> SweepPoint) = match kernel {
        Kernel::Exp2Frac => (0.0, exp2_frac_point),
        Kernel::Log2Frac => (1.0, log2_frac_point),
        _ => panic!("{} is not a helper", kernel.name()),
    };
    let mut rng = CounterStream::new(seed, 0x4E1);
    let mut st = SweepStats::default();
    for k in 0..=n {
        let x = if k % 2 == 0 { lo + k as f64 / n as f64 } else { lo + rng.uniform() };
        let p = f(x);
        sink(&p);
        st.add(p);
    }
    st
}

/// Bucketed counts of ulp errors: `[0, 0.5), [0.5, 1), [1, 2), ... [2^k, inf)`.
pub fn ulp_histogram(points: impl IntoIterator<Item = f64>) -> Vec<(f64, u64)> {
    let mut edges = vec![0.0, 0.5];
    let mut e = 1.0;
    while e <= 1024.0 {
        edges.push(e);
        e *= 2.0;
    }
    let mut counts = vec![0u64; edges.len()];
    for u in points {
        let b = edges.iter().rposition(|&x| u >= x).unwrap_or(0);
        counts[b] += 1;
    }
    edges.into_iter().zip(counts).collect()
}

pub const CSV_HEADER: &str = "input,exponent,output,oracle,ulp_error";

pub fn csv_row(p: &SweepPoint) -> String {
    format!("{},{},{:e},{:e},{:.4}", p.input, p.exponent, p.output, p.oracle, p.ulp_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_cover_edges() {
        let v = u32_inputs(1 << 24, 10, 1);
        assert!(v.contains(&0) && v.contains(&1) && v.contains(&u32::MAX) && v.contains(&(1 << 30)));
    }

    #[test]
    fn histogram_buckets() {
        let h = ulp_histogram([0.1, 0.6, 1.5, 3.0, 5000.0]);
        assert_eq!(h[0], (0.0, 1));
        assert_eq!(h[1], (0.5, 1));
        assert_eq!(h[2], (1.0, 1));
        assert_eq!(h[3], (2.0, 1));
        assert_eq!(h.last().unwrap().1, 1);
        assert_eq!(h.iter().map(|x| x.1).sum::<u64>(), 5);
    }

    #[test]
    fn closed_form_points() {
        let p = log_point(1 << 31);
        assert_eq!(p.output, (-dd::LN2).to_f64());
        assert!(p.error < 1e-16);
        assert_eq!(cos_point(1 << 31).error, 0.0);
        assert!(pow_point(2.0, 3.0).ulp_error <= 6.0);
    }

    #[test]
    fn short_sweeps_meet_bounds() {
        let v = u32_inputs(1 << 20, 20_000, 3);
        assert!(sweep_log(&v, |_| {}).max_error <= LOG_BOUND);
        assert!(sweep_cos(&v, |_| {}).max_error <= COS_BOUND);
        assert!(sweep_pow(20_000, (1e-10, 2.0), (0.25, 3.0), 3, |_| {}).max_error <= 6.0);
    }

    #[test]
    fn helpers_below_one_ulp() {
        for k in [Kernel::Exp2Frac, Kernel::Log2Frac] {
            let st = sweep_helper(k, 200_000, 9, |_| {});
            assert!(st.max_ulp < 1.0, "{} {:?}", k.name(), st.worst);
        }
    }
}
