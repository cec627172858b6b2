//! Particles, box geometry, interaction parameters and bond topology.

use std::collections::HashSet;

use crate::error::{DpdError, Result};
use crate::rng::CounterStream;

/// Orthorhombic simulation box. Each axis is periodic, walled, or free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub periodic: [bool; 3],
    pub wall: [bool; 3],
}

impl SimBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3], periodic: [bool; 3], wall: [bool; 3]) -> Result<Self> {
        for k in 0..3 {
            if !(hi[k] > lo[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(DpdError::ZeroVolume);
            }
            if periodic[k] && wall[k] {
                return Err(DpdError::InvalidInput(format!(
                    "axis {k} cannot be both periodic and walled"
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            periodic,
            wall,
        })
    }

    /// Fully periodic box `[0, l)`.
    pub fn periodic(l: [f64; 3]) -> Result<Self> {
        Self::new([0.0; 3], l, [true; 3], [false; 3])
    }

    /// Box `[0, l)` with reflecting walls on every axis.
    pub fn walled(l: [f64; 3]) -> Result<Self> {
        Self::new([0.0; 3], l, [false; 3], [true; 3])
    }

    #[inline]
    pub fn length(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.length(0), self.length(1), self.length(2)]
    }

    pub fn volume(&self) -> f64 {
        self.length(0) * self.length(1) * self.length(2)
    }

    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| 0.5 * (self.lo[k] + self.hi[k]))
    }
}

/// Map each periodic component of `dr` into `[-L/2, L/2)`.
#[inline]
pub fn minimum_image(mut dr: [f64; 3], bx: &SimBox) -> [f64; 3] {
    for k in 0..3 {
        if bx.periodic[k] {
            let l = bx.length(k);
            dr[k] -= l * (dr[k] / l + 0.5).floor();
        }
    }
    dr
}

/// Structure-of-arrays particle storage. Mass is 1 for every particle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleStore {
    pub coord: [Vec<f64>; 3],
    pub veloc: [Vec<f64>; 3],
    pub force: [Vec<f64>; 3],
    pub tag: Vec<u32>,
    pub species: Vec<u8>,
    pub signature: Vec<u32>,
    pub molecule: Vec<u32>,
}

/// One particle's full state, used for packing and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub tag: u32,
    pub species: u8,
    pub molecule: u32,
    pub coord: [f64; 3],
    pub veloc: [f64; 3],
    pub force: [f64; 3],
}

impl ParticleStore {
    pub fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            coord: [v(), v(), v()],
            veloc: [v(), v(), v()],
            force: [v(), v(), v()],
            tag: Vec::with_capacity(n),
            species: Vec::with_capacity(n),
            signature: Vec::with_capacity(n),
            molecule: Vec::with_capacity(n),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tag.is_empty()
    }

    pub fn push(&mut self, p: Particle) {
        for k in 0..3 {
            self.coord[k].push(p.coord[k]);
            self.veloc[k].push(p.veloc[k]);
            self.force[k].push(p.force[k]);
        }
        self.tag.push(p.tag);
        self.species.push(p.species);
        self.signature.push(0);
        self.molecule.push(p.molecule);
    }

    pub fn get(&self, i: usize) -> Particle {
        Particle {
            tag: self.tag[i],
            species: self.species[i],
            molecule: self.molecule[i],
            coord: self.pos(i),
            veloc: self.vel(i),
            force: [self.force[0][i], self.force[1][i], self.force[2][i]],
        }
    }

    #[inline(always)]
    pub fn pos(&self, i: usize) -> [f64; 3] {
        [self.coord[0][i], self.coord[1][i], self.coord[2][i]]
    }

    #[inline(always)]
    pub fn vel(&self, i: usize) -> [f64; 3] {
        [self.veloc[0][i], self.veloc[1][i], self.veloc[2][i]]
    }

    pub fn truncate(&mut self, n: usize) {
        for k in 0..3 {
            self.coord[k].truncate(n);
            self.veloc[k].truncate(n);
            self.force[k].truncate(n);
        }
        self.tag.truncate(n);
        self.species.truncate(n);
        self.signature.truncate(n);
        self.molecule.truncate(n);
    }

    /// Gather `perm[new] = old` into a new store.
    pub fn gather(&self, perm: &[usize]) -> Self {
        let g64 = |v: &Vec<f64>| perm.iter().map(|&o| v[o]).collect::<Vec<_>>();
        Self {
            coord: [g64(&self.coord[0]), g64(&self.coord[1]), g64(&self.coord[2])],
            veloc: [g64(&self.veloc[0]), g64(&self.veloc[1]), g64(&self.veloc[2])],
            force: [g64(&self.force[0]), g64(&self.force[1]), g64(&self.force[2])],
            tag: perm.iter().map(|&o| self.tag[o]).collect(),
            species: perm.iter().map(|&o| self.species[o]).collect(),
            signature: perm.iter().map(|&o| self.signature[o]).collect(),
            molecule: perm.iter().map(|&o| self.molecule[o]).collect(),
        }
    }

    /// Keep only the particles whose flag is set, preserving order.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep[i]).collect();
        *self = self.gather(&idx);
    }

    pub fn append(&mut self, other: &ParticleStore) {
        for k in 0..3 {
            self.coord[k].extend_from_slice(&other.coord[k]);
            self.veloc[k].extend_from_slice(&other.veloc[k]);
            self.force[k].extend_from_slice(&other.force[k]);
        }
        self.tag.extend_from_slice(&other.tag);
        self.species.extend_from_slice(&other.species);
        self.signature.extend_from_slice(&other.signature);
        self.molecule.extend_from_slice(&other.molecule);
    }

    /// Refresh every signature from the current velocities.
    pub fn update_signatures(&mut self) {
        use rayon::prelude::*;
        let [vx, vy, vz] = &self.veloc;
        self.signature
            .par_iter_mut()
            .zip(self.tag.par_iter())
            .enumerate()
            .for_each(|(i, (s, &t))| *s = crate::rng::make_signature(t, [vx[i], vy[i], vz[i]]));
    }
}

/// Kinetic partial sums; combine across domains before taking the temperature.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KineticSums {
    pub n: u64,
    pub momentum: [f64; 3],
    pub v2: f64,
}

impl KineticSums {
    pub fn of(store: &ParticleStore) -> Self {
        Self::of_range(store, store.len())
    }

    /// Sums over particles `0..n`.
    pub fn of_range(store: &ParticleStore, n: usize) -> Self {
        let mut s = KineticSums {
            n: n as u64,
            ..Default::default()
        };
        for i in 0..n {
            for k in 0..3 {
                let v = store.veloc[k][i];
                s.momentum[k] += v;
                s.v2 += v * v;
            }
        }
        s
    }

    pub fn combine(&self, o: &KineticSums) -> Self {
        KineticSums {
            n: self.n + o.n,
            momentum: [0, 1, 2].map(|k| self.momentum[k] + o.momentum[k]),
            v2: self.v2 + o.v2,
        }
    }

    /// `sum |v - v_com|^2 / (3n)`.
    pub fn temperature(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(DpdError::EmptySystem {
                density: 0.0,
                volume: 0.0,
            });
        }
        let n = self.n as f64;
        let p2: f64 = self.momentum.iter().map(|p| p * p).sum();
        Ok((self.v2 - p2 / n) / (3.0 * n))
    }
}

pub fn compute_temperature(store: &ParticleStore) -> Result<f64> {
    KineticSums::of(store).temperature()
}

/// Species-pair coefficients with sigma derived from gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct PairParams {
    pub n_species: usize,
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub s: f64,
    pub rc: f64,
    pub kbt: f64,
    pub dt: f64,
}

impl PairParams {
    /// `a` and `gamma` are row-major `n x n` matrices.
    pub fn new(n_species: usize, a: Vec<f64>, gamma: Vec<f64>, s: f64, rc: f64, kbt: f64, dt: f64) -> Result<Self> {
        let nn = n_species * n_species;
        if n_species == 0 || a.len() != nn || gamma.len() != nn {
            return Err(DpdError::InvalidInput(format!(
                "pair matrices must be {n_species}x{n_species}"
            )));
        }
        for i in 0..n_species {
            for j in 0..n_species {
                if a[i * n_species + j] != a[j * n_species + i] {
                    return Err(DpdError::InvalidInput(format!("a is not symmetric at ({i},{j})")));
                }
                if gamma[i * n_species + j] != gamma[j * n_species + i] {
                    return Err(DpdError::InvalidInput(format!("gamma is not symmetric at ({i},{j})")));
                }
            }
        }
        if gamma.iter().any(|&g| g < 0.0 || !g.is_finite()) {
            return Err(DpdError::InvalidInput("gamma must be finite and >= 0".into()));
        }
        if !(rc > 0.0) || !(s > 0.0) || !(dt > 0.0) || !(kbt >= 0.0) {
            return Err(DpdError::InvalidInput(format!(
                "need rc > 0, s > 0, dt > 0, kbt >= 0 (got rc={rc}, s={s}, dt={dt}, kbt={kbt})"
            )));
        }
        let sigma = gamma.iter().map(|&g| (2.0 * g * kbt).sqrt()).collect();
        Ok(Self {
            n_species,
            a,
            gamma,
            sigma,
            s,
            rc,
            kbt,
            dt,
        })
    }

    /// Build from sigma instead of gamma: `gamma = sigma^2 / (2 kbt)`.
    pub fn from_sigma(n_species: usize, a: Vec<f64>, sigma: Vec<f64>, s: f64, rc: f64, kbt: f64, dt: f64) -> Result<Self> {
        if !(kbt > 0.0) {
            return Err(DpdError::InvalidInput("sigma needs kbt > 0".into()));
        }
        let gamma = sigma.iter().map(|&x| x * x / (2.0 * kbt)).collect();
        Self::new(n_species, a, gamma, s, rc, kbt, dt)
    }

    /// Single-species convenience.
    pub fn uniform(a: f64, gamma: f64, s: f64, rc: f64, kbt: f64, dt: f64) -> Result<Self> {
        Self::new(1, vec![a], vec![gamma], s, rc, kbt, dt)
    }

    #[inline(always)]
    pub fn idx(&self, si: u8, sj: u8) -> usize {
        si as usize * self.n_species + sj as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub i: u32,
    pub j: u32,
    pub k: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BondTopology {
    pub bonds: Vec<Bond>,
}

impl BondTopology {
    pub fn new(bonds: Vec<Bond>) -> Result<Self> {
        let mut seen = HashSet::new();
        for b in &bonds {
            if b.i == b.j {
                return Err(DpdError::InvalidInput(format!("self-bond on tag {}", b.i)));
            }
            if !seen.insert((b.i.min(b.j), b.i.max(b.j))) {
                return Err(DpdError::InvalidInput(format!("bond {}-{} listed twice", b.i, b.j)));
            }
        }
        Ok(Self { bonds })
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }
}

/// Wall reflection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WallMode {
    /// Mirror position, negate the normal velocity.
    #[default]
    Specular,
    /// Mirror position, reverse the whole velocity.
    BounceBack,
}

/// Reversed body force driving a double Poiseuille flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyForce {
    pub g: f64,
    pub drive_axis: usize,
    pub partition_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub steps: u64,
    pub rebuild_every: u64,
    pub skin: f64,
    pub body_force: Option<BodyForce>,
    pub thermo_every: u64,
    pub dump_every: u64,
    pub seed: u32,
    pub workers: usize,
    pub domains: [usize; 3],
    pub max_neighbors: usize,
    pub sub_bits: u32,
    pub wall_mode: WallMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: 0,
            rebuild_every: 10,
            skin: 0.3,
            body_force: None,
            thermo_every: 100,
            dump_every: 0,
            seed: 1,
            workers: 1,
            domains: [1, 1, 1],
            max_neighbors: 128,
            sub_bits: 2,
            wall_mode: WallMode::Specular,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rebuild_every == 0 {
            return Err(DpdError::Config("rebuild interval must be >= 1".into()));
        }
        if !(self.skin >= 0.0) {
            return Err(DpdError::Config("skin must be >= 0".into()));
        }
        if self.workers == 0 || self.domains.iter().any(|&d| d == 0) {
            return Err(DpdError::Config("workers and domain counts must be >= 1".into()));
        }
        if let Some(b) = self.body_force {
            if b.drive_axis > 2 || b.partition_axis > 2 || b.drive_axis == b.partition_axis {
                return Err(DpdError::Config("body force axes must be distinct and < 3".into()));
            }
        }
        Ok(())
    }
}

/// Linear polymer description: bead species along the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub sequence: Vec<u8>,
    /// Fraction of all particles that belong to chains.
    pub fraction: f64,
    pub k: f64,
    pub r0: f64,
}

/// Random initial state.
///
/// Chains come first (tags `0..`), each a random walk of step `r0`; the rest
/// are free particles with species drawn from `species_fractions`.
pub fn init_random(
    bx: &SimBox,
    density: f64,
    species_fractions: &[f64],
    chain: Option<&ChainSpec>,
    kbt: f64,
    seed: u32,
) -> Result<(ParticleStore, BondTopology)> {
    let volume = bx.volume();
    if !(volume > 0.0) {
        return Err(DpdError::ZeroVolume);
    }
    if !(density > 0.0) {
        return Err(DpdError::InvalidInput("density must be > 0".into()));
    }
    let total: f64 = species_fractions.iter().sum();
    if species_fractions.is_empty() || species_fractions.iter().any(|&f| f < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(DpdError::InvalidInput("species fractions must be >= 0 and sum to 1".into()));
    }
    let n = (density * volume).round() as usize;
    if n == 0 {
        return Err(DpdError::EmptySystem { density, volume });
    }
    if n > u32::MAX as usize {
        return Err(DpdError::InvalidInput("more particles than 32-bit tags".into()));
    }

    let mut pos_rng = CounterStream::new(seed, 1);
    let mut vel_rng = CounterStream::new(seed, 2);
    let mut spec_rng = CounterStream::new(seed, 3);
    let mut store = ParticleStore::with_capacity(n);
    let mut bonds = Vec::new();
    let min_len = bx.lengths().iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = kbt.max(0.0).sqrt();

    let uniform_point = |rng: &mut CounterStream| -> [f64; 3] {
        [0, 1, 2].map(|k| {
            let x = bx.lo[k] + rng.uniform() * bx.length(k);
            if x >= bx.hi[k] {
                bx.lo[k]
            } else {
                x
            }
        })
    };

    let mut tag = 0u32;
    if let Some(c) = chain {
        let len = c.sequence.len();
        if len == 0 {
            return Err(DpdError::InvalidInput("empty chain sequence".into()));
        }
        let contour = (len - 1) as f64 * c.r0;
        if contour >= min_len {
            return Err(DpdError::ChainTooLong {
                beads: len,
                contour,
                min_length: min_len,
            });
        }
        let n_chains = (c.fraction * n as f64 / len as f64).round() as usize;
        if n_chains * len > n {
            return Err(DpdError::InvalidInput("chain fraction exceeds 1".into()));
        }
        for m in 0..n_chains {
            let mut p = uniform_point(&mut pos_rng);
            for (b, &sp) in c.sequence.iter().enumerate() {
                if b > 0 {
                    let dir = random_unit(&mut pos_rng);
                    for k in 0..3 {
                        p[k] = fold_into(p[k] + c.r0 * dir[k], bx, k);
                    }
                    bonds.push(Bond {
                        i: tag - 1,
                        j: tag,
                        k: c.k,
                        r0: c.r0,
                    });
                }
                store.push(Particle {
                    tag,
                    species: sp,
                    molecule: m as u32 + 1,
                    coord: p,
                    veloc: [0.0; 3],
                    force: [0.0; 3],
                });
                tag += 1;
            }
        }
    }
    while store.len() < n {
        let p = uniform_point(&mut pos_rng);
        let u = spec_rng.uniform();
        let mut acc = 0.0;
        let mut sp = species_fractions.len() - 1;
        for (s, &f) in species_fractions.iter().enumerate() {
            acc += f;
            if u < acc && f > 0.0 {
                sp = s;
                break;
            }
        }
        store.push(Particle {
            tag,
            species: sp as u8,
            molecule: 0,
            coord: p,
            veloc: [0.0; 3],
            force: [0.0; 3],
        });
        tag += 1;
    }

    for k in 0..3 {
        for i in 0..n {
            store.veloc[k][i] = scale * vel_rng.normal();
        }
    }
    for k in 0..3 {
        let mean = store.veloc[k].iter().sum::<f64>() / n as f64;
        for v in store.veloc[k].iter_mut() {
            *v -= mean;
        }
    }
    store.update_signatures();
    Ok((store, BondTopology::new(bonds)?))
}

fn random_unit(rng: &mut CounterStream) -> [f64; 3] {
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.uniform();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Wrap on periodic axes, mirror on the others.
fn fold_into(x: f64, bx: &SimBox, k: usize) -> f64 {
    let (lo, hi) = (bx.lo[k], bx.hi[k]);
    if bx.periodic[k] {
        let l = hi - lo;
        let y = lo + (x - lo).rem_euclid(l);
        if y >= hi {
            lo
        } else {
            y
        }
    } else if x < lo {
        (2.0 * lo - x).min(hi - 1e-12)
    } else if x >= hi {
        (2.0 * hi - x).max(lo)
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_counts() {
        let b = SimBox::periodic([12.0, 8.0, 8.0]).unwrap();
        let (s, _) = init_random(&b, 6.0, &[1.0], None, 0.5, 1).unwrap();
        assert_eq!(s.len(), 4608);
        let b = SimBox::periodic([59.4123, 7.42654, 118.825]).unwrap();
        let (s, _) = init_random(&b, 5.0, &[1.0], None, 1.0, 1).unwrap();
        assert_eq!(s.len(), 262_144);
    }

    #[test]
    fn empty_system_rejected() {
        let b = SimBox::periodic([1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            init_random(&b, 0.1, &[1.0], None, 1.0, 1),
            Err(DpdError::EmptySystem { .. })
        ));
    }

    #[test]
    fn zero_volume_rejected() {
        assert!(matches!(
            SimBox::periodic([1.0, 0.0, 1.0]),
            Err(DpdError::ZeroVolume)
        ));
    }

    #[test]
    fn long_chain_rejected() {
        let b = SimBox::walled([2.0, 2.0, 2.0]).unwrap();
        let c = ChainSpec {
            sequence: vec![0; 20],
            fraction: 0.5,
            k: 80.0,
            r0: 0.38,
        };
        assert!(matches!(
            init_random(&b, 3.0, &[1.0], Some(&c), 1.0, 1),
            Err(DpdError::ChainTooLong { .. })
        ));
    }

    #[test]
    fn minimum_image_cases() {
        let b = SimBox::new([0.0; 3], [12.0, 8.0, 8.0], [true, true, false], [false, false, true]).unwrap();
        assert_eq!(minimum_image([0.0; 3], &b), [0.0; 3]);
        assert_eq!(minimum_image([7.0, 0.0, 0.0], &b)[0], -5.0);
        assert_eq!(minimum_image([0.0, 0.0, 7.5], &b)[2], 7.5);
        assert_eq!(minimum_image([6.0, -4.0, 0.0], &b), [-6.0, -4.0, 0.0]);
    }

    #[test]
    fn temperature_mirror_pair() {
        let mut s = ParticleStore::default();
        for (t, v) in [(0, 1.0), (1, -1.0)] {
            s.push(Particle {
                tag: t,
                species: 0,
                molecule: 0,
                coord: [0.0; 3],
                veloc: [v; 3],
                force: [0.0; 3],
            });
        }
        assert_eq!(compute_temperature(&s).unwrap(), 1.0);
        for k in 0..3 {
            s.veloc[k].iter_mut().for_each(|v| *v = 0.0);
        }
        assert_eq!(compute_temperature(&s).unwrap(), 0.0);
        assert!(compute_temperature(&ParticleStore::default()).is_err());
    }

    #[test]
    fn maxwell_boltzmann_temperature() {
        let b = SimBox::periodic([10.0, 10.0, 10.0]).unwrap();
        let (s, _) = init_random(&b, 100.0, &[1.0], None, 0.5, 9).unwrap();
        assert_eq!(s.len(), 100_000);
        let t = compute_temperature(&s).unwrap();
        assert!((t - 0.5).abs() < 0.01, "{t}");
    }

    #[test]
    fn zero_net_momentum_and_reproducible() {
        let b = SimBox::periodic([6.0, 5.0, 4.0]).unwrap();
        let (s1, _) = init_random(&b, 3.0, &[0.5, 0.5], None, 1.0, 4).unwrap();
        let (s2, _) = init_random(&b, 3.0, &[0.5, 0.5], None, 1.0, 4).unwrap();
        assert_eq!(s1, s2);
        for k in 0..3 {
            let p: f64 = s1.veloc[k].iter().sum();
            let scale: f64 = s1.veloc[k].iter().map(|v| v.abs()).sum();
            assert!(p.abs() <= scale * f64::EPSILON, "{p}");
        }
    }

    #[test]
    fn chains_are_bonded_walks_inside_box() {
        let b = SimBox::walled([6.0, 6.0, 6.0]).unwrap();
        let c = ChainSpec {
            sequence: vec![1, 1, 1, 0, 0, 1, 1, 1],
            fraction: 0.1,
            k: 80.0,
            r0: 0.38,
        };
        let (s, bonds) = init_random(&b, 5.0, &[0.0, 0.0, 1.0], Some(&c), 1.0, 2).unwrap();
        let n_chains = (0.1 * 1080.0 / 8.0f64).round() as usize;
        assert_eq!(bonds.len(), n_chains * 7);
        for bd in &bonds.bonds {
            let (pi, pj) = (s.pos(bd.i as usize), s.pos(bd.j as usize));
            let r = ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2) + (pi[2] - pj[2]).powi(2)).sqrt();
            assert!(r <= 0.38 + 1e-9);
        }
        for i in 0..s.len() {
            for k in 0..3 {
                assert!(s.coord[k][i] >= 0.0 && s.coord[k][i] < 6.0);
            }
        }
        assert_eq!(s.species[8 * n_chains], 2);
    }

    #[test]
    fn sigma_from_gamma() {
        let p = PairParams::from_sigma(1, vec![0.0], vec![4.5], 1.0, 1.0, 0.5, 0.001).unwrap();
        assert_eq!(p.gamma[0], 20.25);
        assert_eq!(p.sigma[0] * p.sigma[0], 2.0 * p.gamma[0] * p.kbt);
        assert!(PairParams::new(2, vec![1.0, 2.0, 3.0, 1.0], vec![0.0; 4], 1.0, 1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn bonds_validated() {
        let b = |i, j| Bond { i, j, k: 1.0, r0: 0.5 };
        assert!(BondTopology::new(vec![b(1, 1)]).is_err());
        assert!(BondTopology::new(vec![b(1, 2), b(2, 1)]).is_err());
        assert!(BondTopology::new(vec![b(1, 2), b(2, 3)]).is_ok());
    }
}
