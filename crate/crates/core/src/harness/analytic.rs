//! Start-up of a body-force driven channel flow.

use std::f64::consts::PI;

/// Velocity at `z` (measured from the channel centre, `|z| <= d/2`) a time
/// `t` after a body force `f` starts acting on fluid at rest, for kinematic
/// viscosity `nu` and channel width `d`.
///
/// The steady parabola minus a cosine series; summation stops after
/// `n_terms` terms or once the remaining terms are below 1e-12 of the
/// leading one.
pub fn analytic_transient_profile(z: f64, t: f64, f: f64, d: f64, nu: f64, n_terms: usize) -> f64 {
    let steady = f * d * d / (8.0 * nu) * (1.0 - (2.0 * z / d).powi(2));
    let amp = 4.0 * f * d * d / (nu * PI.powi(3));
    let decay = PI * PI * nu * t / (d * d);
    let mut series = 0.0;
    let mut lead = 0.0;
    for n in 0..n_terms.max(1) {
        let m = (2 * n + 1) as f64;
        let e = (-m * m * decay).exp();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * amp / (m * m * m) * (m * PI * z / d).cos() * e;
        series += term;
        if n == 0 {
            lead = (amp * e).abs();
        }
        // bound on everything after term n: sum over m' > m of amp e / m'^3
        let tail = (amp * e).abs() / (4.0 * (m + 1.0) * (m + 1.0));
        if tail < 1e-12 * lead || e == 0.0 {
            break;
        }
    }
    steady - series
}
