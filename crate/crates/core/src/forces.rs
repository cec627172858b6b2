//! Pairwise DPD forces and harmonic bonds.

use rayon::prelude::*;

use crate::error::{DpdError, Result};
use crate::fastmath::fastpow;
use crate::neighbor::{Layout, NeighborTable};
use crate::rng::{gaussian, pair_uniforms_mixed, PairRandomState};
use crate::system::{minimum_image, BondTopology, PairParams, ParticleStore, SimBox};

/// `1 - r / rc`.
#[inline(always)]
pub fn weight_c(r: f64, rc: f64) -> f64 {
    1.0 - r / rc
}

/// `wc^s`, exact for small integer exponents.
#[inline(always)]
pub fn weight_r(wc: f64, s: f64, s_int: u8) -> f64 {
    match s_int {
        1 => wc,
        2 => wc * wc,
        3 => wc * wc * wc,
        _ => fastpow(wc, s),
    }
}

fn integer_exponent(s: f64) -> u8 {
    if s == 1.0 {
        1
    } else if s == 2.0 {
        2
    } else if s == 3.0 {
        3
    } else {
        0
    }
}

/// The three components of one pair's force on `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairForceTerms {
    pub fc: [f64; 3],
    pub fd: [f64; 3],
    pub fr: [f64; 3],
    pub r_ij: [f64; 3],
    pub e_ij: [f64; 3],
    pub v_ij: [f64; 3],
}

impl PairForceTerms {
    pub fn total(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.fc[k] + self.fd[k] + self.fr[k])
    }
}

/// Force on `i` from `j` with a given Gaussian `xi`.
pub fn dpd_pair_force(
    i: usize,
    j: usize,
    store: &ParticleStore,
    params: &PairParams,
    min_image: Option<&SimBox>,
    xi: f64,
) -> Result<PairForceTerms> {
    let mut r_ij = [0, 1, 2].map(|k| store.coord[k][i] - store.coord[k][j]);
    if let Some(bx) = min_image {
        r_ij = minimum_image(r_ij, bx);
    }
    let v_ij = [0, 1, 2].map(|k| store.veloc[k][i] - store.veloc[k][j]);
    let r = (r_ij[0] * r_ij[0] + r_ij[1] * r_ij[1] + r_ij[2] * r_ij[2]).sqrt();
    if r == 0.0 {
        return Err(DpdError::CoincidentParticles {
            tag_i: store.tag[i],
            tag_j: store.tag[j],
        });
    }
    let e = r_ij.map(|x| x / r);
    let zero = PairForceTerms {
        fc: [0.0; 3],
        fd: [0.0; 3],
        fr: [0.0; 3],
        r_ij,
        e_ij: e,
        v_ij,
    };
    if r >= params.rc {
        return Ok(zero);
    }
    let p = params.idx(store.species[i], store.species[j]);
    let wc = weight_c(r, params.rc);
    let wr = weight_r(wc, params.s, integer_exponent(params.s));
    let ev = e[0] * v_ij[0] + e[1] * v_ij[1] + e[2] * v_ij[2];
    let c = params.a[p] * wc;
    let d = -params.gamma[p] * wr * wr * ev;
    let rr = params.sigma[p] * wr * xi / params.dt.sqrt();
    Ok(PairForceTerms {
        fc: e.map(|x| c * x),
        fd: e.map(|x| d * x),
        fr: e.map(|x| rr * x),
        ..zero
    })
}

/// Per species pair: `(a, gamma, sigma / sqrt(dt))`.
#[derive(Debug, Clone)]
struct Coeffs {
    n: usize,
    a: Vec<f64>,
    gamma: Vec<f64>,
    sigma_dt: Vec<f64>,
}

impl Coeffs {
    fn new(p: &PairParams) -> Self {
        let inv = 1.0 / p.dt.sqrt();
        Self {
            n: p.n_species,
            a: p.a.clone(),
            gamma: p.gamma.clone(),
            sigma_dt: p.sigma.iter().map(|s| s * inv).collect(),
        }
    }
}

/// Everything the pair kernel reads about one particle, in one cache line.
#[derive(Debug, Clone, Copy, Default)]
#[repr(C, align(64))]
struct Packed {
    x: [f64; 3],
    v: [f64; 3],
    sig: u32,
    tag: u32,
    species: u32,
}

fn pack(store: &ParticleStore) -> Vec<Packed> {
    (0..store.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| Packed {
            x: store.pos(i),
            v: store.vel(i),
            sig: store.signature[i],
            tag: store.tag[i],
            species: store.species[i] as u32,
        })
        .collect()
}

struct Kernel<'a> {
    co: &'a Coeffs,
    rc2: f64,
    inv_rc: f64,
    s: f64,
    s_int: u8,
    wrap: Option<([bool; 3], [f64; 3])>,
    step_mix: u32,
}

impl Kernel<'_> {
    #[inline(always)]
    fn separation(&self, pi: &Packed, pj: &Packed) -> [f64; 3] {
        let mut d = [pi.x[0] - pj.x[0], pi.x[1] - pj.x[1], pi.x[2] - pj.x[2]];
        if let Some((w, l)) = self.wrap {
            for k in 0..3 {
                if w[k] {
                    if d[k] > 0.5 * l[k] {
                        d[k] -= l[k];
                    } else if d[k] < -0.5 * l[k] {
                        d[k] += l[k];
                    }
                }
            }
        }
        d
    }

    /// Sum the row of `pi` over `js`, visiting them in order. `scratch` must
    /// hold at least one more entry than the row.
    fn row<I: Iterator<Item = u32>>(
        &self,
        packed: &[Packed],
        pi: &Packed,
        js: I,
        scratch: &mut [(u32, [f64; 3], f64)],
    ) -> Result<[f64; 3]> {
        let mut n = 0;
        for j in js {
            let d = self.separation(pi, &packed[j as usize]);
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            scratch[n] = (j, d, r2);
            n += (r2 < self.rc2) as usize;
        }
        let mut acc = [0.0; 3];
        for &(j, d, r2) in &scratch[..n] {
            let pj = &packed[j as usize];
            if r2 == 0.0 {
                return Err(DpdError::CoincidentParticles {
                    tag_i: pi.tag,
                    tag_j: pj.tag,
                });
            }
            let r = r2.sqrt();
            let inv_r = 1.0 / r;
            let v = [pi.v[0] - pj.v[0], pi.v[1] - pj.v[1], pi.v[2] - pj.v[2]];
            let wc = 1.0 - r * self.inv_rc;
            let wr = weight_r(wc, self.s, self.s_int);
            let p = pi.species as usize * self.co.n + pj.species as usize;
            let (ua, ub) = pair_uniforms_mixed(pi.sig, pj.sig, pi.tag, pj.tag, self.step_mix);
            let xi = gaussian(ua, ub);
            let ev = (d[0] * v[0] + d[1] * v[1] + d[2] * v[2]) * inv_r;
            let mag = self.co.a[p] * wc - self.co.gamma[p] * wr * wr * ev + self.co.sigma_dt[p] * wr * xi;
            let f = mag * inv_r;
            acc[0] += f * d[0];
            acc[1] += f * d[1];
            acc[2] += f * d[2];
        }
        Ok(acc)
    }
}

impl<'a> Kernel<'a> {
    fn new(co: &'a Coeffs, params: &PairParams, min_image: Option<&SimBox>, state: &PairRandomState) -> Self {
        Kernel {
            co,
            rc2: params.rc * params.rc,
            inv_rc: 1.0 / params.rc,
            s: params.s,
            s_int: integer_exponent(params.s),
            wrap: min_image.map(|b| (b.periodic, b.lengths())),
            step_mix: state.step_mix(),
        }
    }
}

/// Evaluate `rows` rows in parallel and write their forces.
fn pair_forces_by_row<F>(
    store: &mut ParticleStore,
    nrows: usize,
    width: usize,
    params: &PairParams,
    min_image: Option<&SimBox>,
    state: &PairRandomState,
    visit: F,
) -> Result<()>
where
    F: Fn(&Kernel, &[Packed], usize, &mut [(u32, [f64; 3], f64)]) -> Result<[f64; 3]> + Sync,
{
    let co = Coeffs::new(params);
    let k = Kernel::new(&co, params, min_image, state);
    let packed = pack(store);
    let forces: Vec<[f64; 3]> = (0..nrows)
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || vec![(0u32, [0.0; 3], 0.0); width + 1],
            |scratch, i| visit(&k, &packed, i, scratch),
        )
        .collect::<Result<Vec<_>>>()?;
    for (i, f) in forces.into_iter().enumerate() {
        store.force[0][i] = f[0];
        store.force[1][i] = f[1];
        store.force[2][i] = f[2];
    }
    Ok(())
}

/// Overwrite the forces of rows `0..table.nrows` with the pair sum over each
/// row, in row order: core ascending, then skin ascending. Entries beyond the
/// cutoff at this step are skipped.
pub fn compute_pair_forces(
    store: &mut ParticleStore,
    table: &NeighborTable,
    params: &PairParams,
    min_image: Option<&SimBox>,
    state: &PairRandomState,
) -> Result<()> {
    pair_forces_by_row(store, table.nrows, table.width, params, min_image, state, |k, packed, i, scratch| {
        let pi = &packed[i];
        if table.tiled {
            k.row(packed, pi, table.row(i).into_iter(), scratch)
        } else {
            let (core, skin) = table.row_slices(i);
            let skin: &[u32] = if table.layout == Layout::Split { skin } else { &[] };
            k.row(packed, pi, core.iter().copied().chain(skin.iter().rev().copied()), scratch)
        }
    })
}

/// The rows of a neighbour table with each row's entries sorted by the
/// neighbour's tag.
///
/// Summing in this order makes a particle's force independent of local
/// numbering, so runs split into different domains agree to roundoff in the
/// positions alone.
#[derive(Debug, Clone, Default)]
pub struct TagOrder {
    offsets: Vec<u32>,
    entries: Vec<u32>,
    width: usize,
}

impl TagOrder {
    pub fn new(table: &NeighborTable, store: &ParticleStore) -> Self {
        let rows: Vec<Vec<u32>> = (0..table.nrows)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                let mut keys: Vec<u64> = if table.tiled {
                    table.row(i).into_iter().map(|j| (store.tag[j as usize] as u64) << 32 | j as u64).collect()
                } else {
                    let (core, skin) = table.row_slices(i);
                    let skin: &[u32] = if table.layout == Layout::Split { skin } else { &[] };
                    core.iter()
                        .chain(skin)
                        .map(|&j| (store.tag[j as usize] as u64) << 32 | j as u64)
                        .collect()
                };
                keys.sort_unstable();
                keys.into_iter().map(|k| k as u32).collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut entries = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in &rows {
            entries.extend_from_slice(r);
            offsets.push(entries.len() as u32);
        }
        Self {
            offsets,
            entries,
            width: table.width,
        }
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// [`compute_pair_forces`] visiting each row in tag order.
pub fn compute_pair_forces_tag_ordered(
    store: &mut ParticleStore,
    order: &TagOrder,
    params: &PairParams,
    min_image: Option<&SimBox>,
    state: &PairRandomState,
) -> Result<()> {
    pair_forces_by_row(store, order.nrows(), order.width, params, min_image, state, |k, packed, i, scratch| {
        k.row(packed, &packed[i], order.row(i).iter().copied(), scratch)
    })
}

/// Bond adjacency keyed by tag.
#[derive(Debug, Clone, Default)]
pub struct BondIndex {
    offsets: Vec<u32>,
    partners: Vec<(u32, f64, f64)>,
}

impl BondIndex {
    pub fn new(top: &BondTopology, n_tags: usize) -> Self {
        let mut count = vec![0u32; n_tags + 1];
        for b in &top.bonds {
            count[b.i as usize + 1] += 1;
            count[b.j as usize + 1] += 1;
        }
        for t in 0..n_tags {
            count[t + 1] += count[t];
        }
        let mut fill = count.clone();
        let mut partners = vec![(0u32, 0.0, 0.0); count[n_tags] as usize];
        for b in &top.bonds {
            for (a, c) in [(b.i, b.j), (b.j, b.i)] {
                let slot = &mut fill[a as usize];
                partners[*slot as usize] = (c, b.k, b.r0);
                *slot += 1;
            }
        }
        Self {
            offsets: count,
            partners,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.partners.is_empty()
    }

    pub fn of(&self, tag: u32) -> &[(u32, f64, f64)] {
        let t = tag as usize;
        if t + 1 >= self.offsets.len() {
            return &[];
        }
        &self.partners[self.offsets[t] as usize..self.offsets[t + 1] as usize]
    }
}

/// Bonds resolved to storage indices for rows `0..nrows`.
#[derive(Debug, Clone, Default)]
pub struct BondList {
    pub offsets: Vec<u32>,
    pub partner: Vec<(u32, f64, f64)>,
}

/// Pick, for every bond of every row particle, the nearest stored copy of the
/// partner (local or ghost image).
pub fn resolve_bonds(store: &ParticleStore, nrows: usize, index: &BondIndex, min_image: Option<&SimBox>) -> Result<BondList> {
    let mut offsets = Vec::with_capacity(nrows + 1);
    offsets.push(0u32);
    let mut partner = Vec::new();
    if index.is_empty() {
        offsets.resize(nrows + 1, 0);
        return Ok(BondList { offsets, partner });
    }
    let mut by_tag: Vec<(u32, u32)> = (0..store.len()).map(|i| (store.tag[i], i as u32)).collect();
    by_tag.sort_unstable();
    for i in 0..nrows {
        for &(t, k, r0) in index.of(store.tag[i]) {
            let lo = by_tag.partition_point(|p| p.0 < t);
            let hi = by_tag.partition_point(|p| p.0 <= t);
            let mut best: Option<(f64, u32)> = None;
            for &(_, j) in &by_tag[lo..hi] {
                let mut d = [0, 1, 2].map(|a| store.coord[a][i] - store.coord[a][j as usize]);
                if let Some(bx) = min_image {
                    d = minimum_image(d, bx);
                }
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if best.map_or(true, |b| r2 < b.0) {
                    best = Some((r2, j));
                }
            }
            match best {
                Some((_, j)) => partner.push((j, k, r0)),
                None => {
                    return Err(DpdError::MissingBondEndpoint {
                        tag_i: store.tag[i],
                        tag_j: t,
                    })
                }
            }
        }
        offsets.push(partner.len() as u32);
    }
    Ok(BondList { offsets, partner })
}

/// Add `-K (r - r0) e` for every resolved bond of every row particle.
pub fn bond_forces(store: &mut ParticleStore, bonds: &BondList, min_image: Option<&SimBox>) {
    let nrows = bonds.offsets.len().saturating_sub(1);
    for i in 0..nrows {
        let (a, b) = (bonds.offsets[i] as usize, bonds.offsets[i + 1] as usize);
        for &(j, k, r0) in &bonds.partner[a..b] {
            let f = bond_force_pair(store.pos(i), store.pos(j as usize), k, r0, min_image);
            for c in 0..3 {
                store.force[c][i] += f[c];
            }
        }
    }
}

/// Harmonic force on the particle at `pi` from its partner at `pj`.
#[inline]
pub fn bond_force_pair(pi: [f64; 3], pj: [f64; 3], k: f64, r0: f64, min_image: Option<&SimBox>) -> [f64; 3] {
    let mut d = [pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]];
    if let Some(bx) = min_image {
        d = minimum_image(d, bx);
    }
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r == 0.0 {
        return [0.0; 3];
    }
    let m = -k * (r - r0) / r;
    d.map(|x| m * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Particle;

    fn pair(d: [f64; 3], v: [f64; 3]) -> ParticleStore {
        let mut s = ParticleStore::default();
        s.push(Particle {
            tag: 0,
            species: 0,
            molecule: 0,
            coord: [1.0; 3],
            veloc: v,
            force: [0.0; 3],
        });
        s.push(Particle {
            tag: 1,
            species: 0,
            molecule: 0,
            coord: [1.0 + d[0], 1.0 + d[1], 1.0 + d[2]],
            veloc: [0.0; 3],
            force: [0.0; 3],
        });
        s
    }

    #[test]
    fn weights() {
        assert_eq!(weight_c(0.0, 1.0), 1.0);
        assert_eq!(weight_c(1.0, 1.0), 0.0);
        assert_eq!(weight_c(0.5, 1.0), 0.5);
        assert_eq!(weight_r(0.5, 2.0, 2), 0.25);
    }

    #[test]
    fn zero_at_cutoff() {
        let p = PairParams::uniform(25.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        let s = pair([1.0, 0.0, 0.0], [3.0, 0.0, 0.0]);
        let t = dpd_pair_force(0, 1, &s, &p, None, 1.3).unwrap();
        assert_eq!(t.total(), [0.0; 3]);
    }

    #[test]
    fn conservative_magnitude() {
        let p = PairParams::uniform(25.0, 0.0, 1.0, 1.0, 1.0, 0.01).unwrap();
        let s = pair([0.5, 0.0, 0.0], [0.0; 3]);
        let t = dpd_pair_force(0, 1, &s, &p, None, 0.0).unwrap();
        assert_eq!(t.fc, [-12.5, 0.0, 0.0]);
    }

    #[test]
    fn head_on_dissipative() {
        let p = PairParams::uniform(0.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        // r_ij = r_i - r_j = (0.5, 0, 0); v_ij = (-2, 0, 0): approaching.
        let s = pair([-0.5, 0.0, 0.0], [-2.0, 0.0, 0.0]);
        let t = dpd_pair_force(0, 1, &s, &p, None, 0.0).unwrap();
        let e = 1.0;
        let wd = 0.5f64 * 0.5;
        let expect = -4.5 * wd * (e * -2.0) * e;
        assert_eq!(t.fd, [expect, 0.0, 0.0]);
        assert!(t.fd[0] > 0.0);
    }

    #[test]
    fn coincident_rejected() {
        let p = PairParams::uniform(25.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        let s = pair([0.0; 3], [0.0; 3]);
        assert!(matches!(
            dpd_pair_force(0, 1, &s, &p, None, 0.0),
            Err(DpdError::CoincidentParticles { tag_i: 0, tag_j: 1 })
        ));
    }

    #[test]
    fn bond_equilibrium_and_stretch() {
        assert_eq!(bond_force_pair([0.0; 3], [0.38, 0.0, 0.0], 80.0, 0.38, None), [0.0; 3]);
        let f = bond_force_pair([0.0; 3], [1.38, 0.0, 0.0], 80.0, 0.38, None);
        assert!((f[0] - 80.0).abs() < 1e-12);
        let g = bond_force_pair([1.38, 0.0, 0.0], [0.0; 3], 80.0, 0.38, None);
        assert_eq!(f[0], -g[0]);
    }
}
