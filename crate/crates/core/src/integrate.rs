//! Velocity-Verlet stepping, body forcing and box boundaries.

use crate::error::{DpdError, Result};
use crate::system::{BodyForce, ParticleStore, SimBox, WallMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPhase {
    /// Half kick, drift, boundaries.
    Phase1,
    /// Half kick with the new forces.
    Phase2,
}

/// Advance particles `0..n` by one half of a Verlet step. Mass is 1.
pub fn verlet_step(
    store: &mut ParticleStore,
    n: usize,
    dt: f64,
    phase: StepPhase,
    bx: &SimBox,
    wall_mode: WallMode,
) -> Result<()> {
    verlet_half(store, n, dt, phase, bx, wall_mode, true)
}

/// As [`verlet_step`], but periodic coordinates are left unwrapped so that
/// ghost images and bond partners resolved at the last rebuild stay on the
/// same side. Walls still reflect.
pub fn verlet_step_unwrapped(
    store: &mut ParticleStore,
    n: usize,
    dt: f64,
    phase: StepPhase,
    bx: &SimBox,
    wall_mode: WallMode,
) -> Result<()> {
    verlet_half(store, n, dt, phase, bx, wall_mode, false)
}

fn verlet_half(
    store: &mut ParticleStore,
    n: usize,
    dt: f64,
    phase: StepPhase,
    bx: &SimBox,
    wall_mode: WallMode,
    wrap: bool,
) -> Result<()> {
    let half = 0.5 * dt;
    for k in 0..3 {
        let (v, f) = (&mut store.veloc[k][..n], &store.force[k][..n]);
        for (vi, fi) in v.iter_mut().zip(f) {
            *vi += half * fi;
        }
    }
    if phase == StepPhase::Phase1 {
        for k in 0..3 {
            let (x, v) = (&mut store.coord[k][..n], &store.veloc[k][..n]);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += dt * vi;
            }
        }
        if wrap {
            apply_boundaries(store, n, bx, wall_mode)?;
        } else if bx.wall.iter().any(|&w| w) {
            apply_bounce_forward(store, n, bx, wall_mode)?;
        }
    }
    check_finite(store, n)
}

fn check_finite(store: &ParticleStore, n: usize) -> Result<()> {
    for i in 0..n {
        let ok = (0..3).all(|k| store.coord[k][i].is_finite() && store.veloc[k][i].is_finite());
        if !ok {
            return Err(DpdError::NonFinite { tag: store.tag[i] });
        }
    }
    Ok(())
}

/// Wrap periodic axes into `[lo, hi)`.
#[inline]
pub fn wrap_periodic(x: f64, lo: f64, hi: f64) -> f64 {
    let l = hi - lo;
    let mut y = x;
    if y >= hi {
        y -= l;
    } else if y < lo {
        y += l;
    }
    if !(y >= lo && y < hi) && y.is_finite() {
        y = lo + (y - lo).rem_euclid(l);
    }
    if y >= hi {
        y = hi.next_down();
    }
    y
}

/// Wrap the periodic coordinates of particles `0..n` into the box.
pub fn wrap_positions(store: &mut ParticleStore, n: usize, bx: &SimBox) {
    for k in 0..3 {
        let (lo, hi) = (bx.lo[k], bx.hi[k]);
        if bx.periodic[k] {
            for x in store.coord[k][..n].iter_mut() {
                *x = wrap_periodic(*x, lo, hi);
            }
        }
    }
}

/// Periodic wrap and wall reflection for particles `0..n`.
pub fn apply_boundaries(store: &mut ParticleStore, n: usize, bx: &SimBox, wall_mode: WallMode) -> Result<()> {
    wrap_positions(store, n, bx);
    if bx.wall.iter().any(|&w| w) {
        apply_bounce_forward(store, n, bx, wall_mode)?;
    }
    Ok(())
}

/// Reflect particles that crossed a wall plane.
pub fn apply_bounce_forward(store: &mut ParticleStore, n: usize, bx: &SimBox, wall_mode: WallMode) -> Result<()> {
    for i in 0..n {
        let mut crossed = false;
        for k in 0..3 {
            if !bx.wall[k] {
                continue;
            }
            let (lo, hi) = (bx.lo[k], bx.hi[k]);
            let x = store.coord[k][i];
            let y = if x < lo {
                2.0 * lo - x
            } else if x > hi {
                2.0 * hi - x
            } else {
                continue;
            };
            if !(y >= lo && y <= hi) {
                return Err(DpdError::BeyondReflection { tag: store.tag[i] });
            }
            store.coord[k][i] = y;
            crossed = true;
            if wall_mode == WallMode::Specular {
                store.veloc[k][i] = -store.veloc[k][i];
            }
        }
        if crossed && wall_mode == WallMode::BounceBack {
            for k in 0..3 {
                store.veloc[k][i] = -store.veloc[k][i];
            }
        }
    }
    Ok(())
}

/// `+g` along the drive axis below the box midpoint on the partition axis,
/// `-g` above it.
pub fn apply_body_force(store: &mut ParticleStore, n: usize, bf: &BodyForce, bx: &SimBox) {
    if bf.g == 0.0 {
        return;
    }
    let p = bf.partition_axis;
    let mid = 0.5 * (bx.lo[p] + bx.hi[p]);
    for i in 0..n {
        let mut z = store.coord[p][i];
        if bx.periodic[p] {
            z = wrap_periodic(z, bx.lo[p], bx.hi[p]);
        }
        let s = if z < mid { bf.g } else { -bf.g };
        store.force[bf.drive_axis][i] += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Particle;

    fn one(x: [f64; 3], v: [f64; 3], f: [f64; 3]) -> ParticleStore {
        let mut s = ParticleStore::default();
        s.push(Particle {
            tag: 3,
            species: 0,
            molecule: 0,
            coord: x,
            veloc: v,
            force: f,
        });
        s
    }

    fn full_step(s: &mut ParticleStore, dt: f64, bx: &SimBox) {
        verlet_step(s, 1, dt, StepPhase::Phase1, bx, WallMode::Specular).unwrap();
        verlet_step(s, 1, dt, StepPhase::Phase2, bx, WallMode::Specular).unwrap();
    }

    #[test]
    fn free_streaming() {
        let bx = SimBox::periodic([10.0; 3]).unwrap();
        let mut s = one([1.0; 3], [0.5, -0.25, 2.0], [0.0; 3]);
        full_step(&mut s, 0.01, &bx);
        assert_eq!(s.vel(0), [0.5, -0.25, 2.0]);
        assert_eq!(s.pos(0), [1.0 + 0.01 * 0.5, 1.0 + 0.01 * -0.25, 1.0 + 0.01 * 2.0]);
    }

    #[test]
    fn constant_force_step() {
        let bx = SimBox::periodic([10.0; 3]).unwrap();
        let (dt, f, v0) = (0.1, 2.0, 0.5);
        let mut s = one([1.0; 3], [v0, 0.0, 0.0], [f, 0.0, 0.0]);
        full_step(&mut s, dt, &bx);
        assert!((s.coord[0][0] - (1.0 + dt * v0 + dt * dt * f / 2.0)).abs() < 1e-15);
        assert!((s.veloc[0][0] - (v0 + dt * f)).abs() < 1e-15);
    }

    #[test]
    fn periodic_wrap_range() {
        assert_eq!(wrap_periodic(10.5, 0.0, 10.0), 0.5);
        assert_eq!(wrap_periodic(-0.5, 0.0, 10.0), 9.5);
        assert!(wrap_periodic(-1e-18, 0.0, 10.0) < 10.0);
        assert_eq!(wrap_periodic(35.0, 0.0, 10.0), 5.0);
    }

    #[test]
    fn wall_reflection() {
        let bx = SimBox::walled([4.0; 3]).unwrap();
        let mut s = one([4.0 + 0.25, 1.0, 1.0], [1.0, 2.0, 3.0], [0.0; 3]);
        apply_bounce_forward(&mut s, 1, &bx, WallMode::Specular).unwrap();
        assert_eq!(s.pos(0), [4.0 - 0.25, 1.0, 1.0]);
        assert_eq!(s.vel(0), [-1.0, 2.0, 3.0]);

        let mut s = one([4.0, 1.0, 1.0], [-1.0, 0.0, 0.0], [0.0; 3]);
        apply_bounce_forward(&mut s, 1, &bx, WallMode::Specular).unwrap();
        assert_eq!(s.pos(0), [4.0, 1.0, 1.0]);
        assert_eq!(s.vel(0), [-1.0, 0.0, 0.0]);

        let mut s = one([-0.5, 1.0, 1.0], [-1.0, 2.0, 3.0], [0.0; 3]);
        apply_bounce_forward(&mut s, 1, &bx, WallMode::BounceBack).unwrap();
        assert_eq!(s.pos(0), [0.5, 1.0, 1.0]);
        assert_eq!(s.vel(0), [1.0, -2.0, -3.0]);

        let mut s = one([9.0, 1.0, 1.0], [0.0; 3], [0.0; 3]);
        assert!(matches!(
            apply_bounce_forward(&mut s, 1, &bx, WallMode::Specular),
            Err(DpdError::BeyondReflection { tag: 3 })
        ));
    }

    #[test]
    fn body_force_sign() {
        let bx = SimBox::periodic([4.0, 4.0, 4.0]).unwrap();
        let bf = BodyForce {
            g: 0.055,
            drive_axis: 2,
            partition_axis: 0,
        };
        let mut s = one([1.999, 0.0, 0.0], [0.0; 3], [0.0; 3]);
        apply_body_force(&mut s, 1, &bf, &bx);
        assert_eq!(s.force[2][0], 0.055);
        let mut s = one([2.0, 0.0, 0.0], [0.0; 3], [0.0; 3]);
        apply_body_force(&mut s, 1, &bf, &bx);
        assert_eq!(s.force[2][0], -0.055);
        let zero = BodyForce { g: 0.0, ..bf };
        apply_body_force(&mut s, 1, &zero, &bx);
        assert_eq!(s.force[2][0], -0.055);
    }

    #[test]
    fn non_finite_reported() {
        let bx = SimBox::periodic([4.0; 3]).unwrap();
        let mut s = one([1.0; 3], [f64::NAN, 0.0, 0.0], [0.0; 3]);
        assert!(matches!(
            verlet_step(&mut s, 1, 0.01, StepPhase::Phase2, &bx, WallMode::Specular),
            Err(DpdError::NonFinite { tag: 3 })
        ));
    }
}
