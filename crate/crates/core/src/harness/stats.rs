//! Velocity profiles, viscosity fits and solvophobic clusters.

use crate::engine::Observer;
use crate::integrate::wrap_periodic;
use crate::system::{minimum_image, ParticleStore, SimBox};

/// Time- and slab-averaged drive velocity per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSample {
    pub centers: Vec<f64>,
    /// Mean drive velocity; zero where the count is zero.
    pub mean_v: Vec<f64>,
    /// Particle samples per bin, summed over the window.
    pub counts: Vec<u64>,
    /// Time window covered.
    pub window: (f64, f64),
    /// Snapshots accumulated.
    pub snapshots: u64,
}

impl ProfileSample {
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Accumulates a velocity profile over snapshots.
///
/// With `fold`, the bins cover the upper half of the axis and a particle in
/// the lower half is shifted up by half a box with its velocity negated.
#[derive(Debug, Clone)]
pub struct ProfileAccumulator {
    axis: usize,
    drive: usize,
    lo: f64,
    hi: f64,
    fold: bool,
    box_lo: f64,
    box_hi: f64,
    periodic: bool,
    sums: Vec<f64>,
    counts: Vec<u64>,
    snapshots: u64,
    /// Steps sampled: `first..=last` every `every`.
    pub first: u64,
    pub last: u64,
    pub every: u64,
    dt: f64,
}

impl ProfileAccumulator {
    pub fn new(bx: &SimBox, axis: usize, drive: usize, bins: usize, fold: bool) -> Self {
        let (lo, hi) = (bx.lo[axis], bx.hi[axis]);
        Self {
            axis,
            drive,
            lo: if fold { 0.5 * (lo + hi) } else { lo },
            hi,
            fold,
            box_lo: lo,
            box_hi: hi,
            periodic: bx.periodic[axis],
            sums: vec![0.0; bins.max(1)],
            counts: vec![0; bins.max(1)],
            snapshots: 0,
            first: 0,
            last: u64::MAX,
            every: 1,
            dt: 1.0,
        }
    }

    /// Restrict sampling to steps in `[first, last]` that are multiples of `every`.
    pub fn with_window(mut self, first: u64, last: u64, every: u64, dt: f64) -> Self {
        self.first = first;
        self.last = last;
        self.every = every.max(1);
        self.dt = dt;
        self
    }

    pub fn wants(&self, step: u64) -> bool {
        step >= self.first && step <= self.last && step % self.every == 0
    }

    /// Add particles `0..n` of `store` as one snapshot.
    pub fn add(&mut self, store: &ParticleStore, n: usize) {
        let bins = self.sums.len();
        let width = (self.hi - self.lo) / bins as f64;
        let half = 0.5 * (self.box_hi - self.box_lo);
        for i in 0..n {
            let mut z = store.coord[self.axis][i];
            if self.periodic {
                z = wrap_periodic(z, self.box_lo, self.box_hi);
            }
            let mut v = store.veloc[self.drive][i];
            if self.fold && z < self.lo {
                z += half;
                v = -v;
            }
            let b = (((z - self.lo) / width).floor().max(0.0) as usize).min(bins - 1);
            self.sums[b] += v;
            self.counts[b] += 1;
        }
        self.snapshots += 1;
    }

    /// Fold another accumulator's sums into this one.
    pub fn merge(&mut self, o: &ProfileAccumulator) {
        for (a, b) in self.sums.iter_mut().zip(&o.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        self.snapshots = self.snapshots.max(o.snapshots);
    }

    pub fn sample(&self) -> ProfileSample {
        let bins = self.sums.len();
        let width = (self.hi - self.lo) / bins as f64;
        ProfileSample {
            centers: (0..bins).map(|b| self.lo + (b as f64 + 0.5) * width).collect(),
            mean_v: self
                .sums
                .iter()
                .zip(&self.counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect(),
            counts: self.counts.clone(),
            window: (self.first as f64 * self.dt, self.last.min(u64::MAX / 2) as f64 * self.dt),
            snapshots: self.snapshots,
        }
    }
}

/// Profile of a set of snapshots, each a store with all its particles owned.
pub fn velocity_profile(frames: &[&ParticleStore], bx: &SimBox, axis: usize, drive: usize, bins: usize, fold: bool) -> ProfileSample {
    let mut acc = ProfileAccumulator::new(bx, axis, drive, bins, fold);
    for f in frames {
        acc.add(f, f.len());
    }
    acc.sample()
}

/// Several profile windows sampled from inside a domain's step loop.
#[derive(Debug, Clone, Default)]
pub struct ProfileObserver {
    pub accs: Vec<ProfileAccumulator>,
}

impl Observer for ProfileObserver {
    fn observe(&mut self, step: u64, store: &ParticleStore, nl: usize) {
        for a in &mut self.accs {
            if a.wants(step) {
                a.add(store, nl);
            }
        }
    }
}

/// Result of a parabolic profile fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityFit {
    pub mu: f64,
    pub stderr: f64,
    /// RMS residual relative to the fitted peak.
    pub rel_residual: f64,
    pub warning: Option<String>,
}

/// Residual level above which a fit is flagged as non-parabolic.
pub const RESIDUAL_WARN: f64 = 0.1;

/// Least-squares fit of `u(z) = (g rho / 2 mu) z (d - z)` with `z` measured
/// from `origin`. Only non-empty bins inside `[0, d]` take part.
pub fn estimate_viscosity(profile: &ProfileSample, origin: f64, g: f64, rho: f64, d: f64) -> ViscosityFit {
    let pts: Vec<(f64, f64)> = profile
        .centers
        .iter()
        .zip(&profile.mean_v)
        .zip(&profile.counts)
        .filter(|(_, &c)| c > 0)
        .map(|((&z, &u), _)| (z - origin, u))
        .filter(|&(z, _)| (0.0..=d).contains(&z))
        .map(|(z, u)| (z * (d - z), u))
        .collect();
    let m = pts.len();
    let spp: f64 = pts.iter().map(|(p, _)| p * p).sum();
    let spu: f64 = pts.iter().map(|(p, u)| p * u).sum();
    let c = spu / spp;
    let mu = g * rho / (2.0 * c);
    let ss: f64 = pts.iter().map(|(p, u)| (u - c * p).powi(2)).sum();
    let se_c = if m > 1 { (ss / (m - 1) as f64 / spp).sqrt() } else { f64::INFINITY };
    let peak = (c * d * d / 4.0).abs();
    let rel_residual = (ss / m.max(1) as f64).sqrt() / peak;
    let warning = if !(rel_residual <= RESIDUAL_WARN) {
        Some(format!("profile is not parabolic: relative residual {rel_residual:.3}"))
    } else {
        None
    };
    ViscosityFit {
        mu,
        stderr: (mu * se_c / c).abs(),
        rel_residual,
        warning,
    }
}

/// Mean and standard error of the mean.
pub fn mean_sem(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = p;
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Clusters of `species` beads in contact (distance below `contact`),
/// merged through their molecules. Returns the number of distinct molecules
/// in each cluster, largest first.
pub fn chain_clusters(store: &ParticleStore, bx: &SimBox, species: u8, contact: f64) -> Vec<usize> {
    let idx: Vec<usize> = (0..store.len())
        .filter(|&i| store.species[i] == species && store.molecule[i] != 0)
        .collect();
    if idx.is_empty() {
        return Vec::new();
    }
    let n_mol = idx.iter().map(|&i| store.molecule[i] as usize).max().unwrap() + 1;
    let mut uf = UnionFind::new(n_mol);

    let l = bx.lengths();
    let nc: [usize; 3] = [0, 1, 2].map(|k| ((l[k] / contact).floor() as usize).max(1));
    let cell_of = |p: [f64; 3]| -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let x = if bx.periodic[k] { wrap_periodic(p[k], bx.lo[k], bx.hi[k]) } else { p[k] };
            (((x - bx.lo[k]) / l[k] * nc[k] as f64).floor().max(0.0) as usize).min(nc[k] - 1)
        })
    };
    let flat = |c: [usize; 3]| (c[2] * nc[1] + c[1]) * nc[0] + c[0];
    let mut head = vec![u32::MAX; nc[0] * nc[1] * nc[2]];
    let mut next = vec![u32::MAX; idx.len()];
    let cells: Vec<[usize; 3]> = idx.iter().map(|&i| cell_of(store.pos(i))).collect();
    for (a, c) in cells.iter().enumerate() {
        let f = flat(*c);
        next[a] = head[f];
        head[f] = a as u32;
    }
    let c2 = contact * contact;
    let periodic_box = bx.periodic.iter().any(|&p| p).then_some(bx);
    for (a, &i) in idx.iter().enumerate() {
        let c = cells[a];
        let mut seen = Vec::with_capacity(27);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let mut nb = [0usize; 3];
                    let mut ok = true;
                    for (k, dk) in [dx, dy, dz].into_iter().enumerate() {
                        let v = c[k] as i64 + dk;
                        let n = nc[k] as i64;
                        nb[k] = if (0..n).contains(&v) {
                            v as usize
                        } else if bx.periodic[k] {
                            v.rem_euclid(n) as usize
                        } else {
                            ok = false;
                            0
                        };
                    }
                    let f = flat(nb);
                    if !ok || seen.contains(&f) {
                        continue;
                    }
                    seen.push(f);
                    let mut b = head[f];
                    while b != u32::MAX {
                        let j = idx[b as usize];
                        if (b as usize) > a {
                            let mut d = [0, 1, 2].map(|k| store.coord[k][i] - store.coord[k][j]);
                            if let Some(bx) = periodic_box {
                                d = minimum_image(d, bx);
                            }
                            if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < c2 {
                                uf.union(store.molecule[i], store.molecule[j]);
                            }
                        }
                        b = next[b as usize];
                    }
                }
            }
        }
    }
    let mut size = vec![0usize; n_mol];
    let mut present = vec![false; n_mol];
    for &i in &idx {
        present[store.molecule[i] as usize] = true;
    }
    for m in 0..n_mol {
        if present[m] {
            let r = uf.find(m as u32) as usize;
            size[r] += 1;
        }
    }
    let mut out: Vec<usize> = size.into_iter().filter(|&s| s > 0).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Number of contacts closer than `contact` between beads of species `a`
/// and species `b`.
pub fn contact_count(store: &ParticleStore, bx: &SimBox, a: u8, b: u8, contact: f64) -> u64 {
    let of = |s: u8| -> Vec<usize> { (0..store.len()).filter(|&i| store.species[i] == s).collect() };
    let (ia, ib) = (of(a), of(b));
    let l = bx.lengths();
    let nc: [usize; 3] = [0, 1, 2].map(|k| ((l[k] / contact).floor() as usize).max(1));
    let cell_of = |p: [f64; 3]| -> [i64; 3] {
        [0, 1, 2].map(|k| {
            let x = if bx.periodic[k] { wrap_periodic(p[k], bx.lo[k], bx.hi[k]) } else { p[k] };
            (((x - bx.lo[k]) / l[k] * nc[k] as f64).floor().max(0.0) as i64).min(nc[k] as i64 - 1)
        })
    };
    let mut grid: std::collections::HashMap<[i64; 3], Vec<usize>> = std::collections::HashMap::new();
    for &j in &ib {
        grid.entry(cell_of(store.pos(j))).or_default().push(j);
    }
    let c2 = contact * contact;
    let periodic_box = bx.periodic.iter().any(|&p| p).then_some(bx);
    let mut count = 0;
    for &i in &ia {
        let c = cell_of(store.pos(i));
        let mut seen: Vec<[i64; 3]> = Vec::with_capacity(27);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let mut nb = [c[0] + dx, c[1] + dy, c[2] + dz];
                    for k in 0..3 {
                        if bx.periodic[k] {
                            nb[k] = nb[k].rem_euclid(nc[k] as i64);
                        }
                    }
                    if seen.contains(&nb) {
                        continue;
                    }
                    seen.push(nb);
                    for &j in grid.get(&nb).map(|v| v.as_slice()).unwrap_or(&[]) {
                        if i == j {
                            continue;
                        }
                        let mut d = [0, 1, 2].map(|k| store.coord[k][i] - store.coord[k][j]);
                        if let Some(bx) = periodic_box {
                            d = minimum_image(d, bx);
                        }
                        count += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < c2) as u64;
                    }
                }
            }
        }
    }
    count
}
