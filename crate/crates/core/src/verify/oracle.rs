//! Brute-force references for the neighbour table, the pair forces and the
//! ghost halo.

use crate::engine::Engine;
use crate::error::Result;
use crate::forces::dpd_pair_force;
use crate::neighbor::table::{dist2_f32, relative_f32, thresholds};
use crate::neighbor::{build_coarse_stencil, build_neighbor_table, expand_fine_stencil, NeighborTable};
use crate::rng::{gaussian, pair_uniforms, CounterStream, PairRandomState};
use crate::sort::{reorder_particles, CellGrid, GridMode};
use crate::system::{minimum_image, PairParams, Particle, ParticleStore, SimBox};

/// Core and skin entries of one row, ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleRow {
    pub core: Vec<u32>,
    pub skin: Vec<u32>,
}

/// Every pair tested, in the same single-precision arithmetic as the builder.
pub fn brute_neighbors(store: &ParticleStore, grid: &CellGrid, rc: f64, skin: f64) -> Vec<OracleRow> {
    let pos = relative_f32(store, grid);
    let wrap = match grid.mode {
        GridMode::Wrap => grid.wrap,
        GridMode::Padded => [false; 3],
    };
    let len = grid.box_len.map(|l| l as f32);
    let (core2, outer2) = thresholds(rc, skin);
    (0..store.len())
        .map(|i| {
            let mut row = OracleRow::default();
            for j in 0..store.len() {
                if i == j {
                    continue;
                }
                let d2 = dist2_f32(pos[i], pos[j], wrap, len);
                if d2 <= core2 {
                    row.core.push(j as u32);
                } else if d2 <= outer2 {
                    row.skin.push(j as u32);
                }
            }
            row
        })
        .collect()
}

fn strictly_ascending(v: &[u32]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// First row where the table and the oracle disagree.
pub fn compare_table(table: &NeighborTable, oracle: &[OracleRow]) -> std::result::Result<(), String> {
    if table.nrows != oracle.len() {
        return Err(format!("{} rows, oracle has {}", table.nrows, oracle.len()));
    }
    for (i, o) in oracle.iter().enumerate() {
        let core = table.core(i);
        let skin = table.skin(i);
        if !strictly_ascending(&core) || !strictly_ascending(&skin) {
            return Err(format!("row {i} is not strictly ascending"));
        }
        if core != o.core {
            return Err(format!("row {i} core {core:?} != oracle {:?}", o.core));
        }
        if skin != o.skin {
            return Err(format!("row {i} skin {skin:?} != oracle {:?}", o.skin));
        }
    }
    Ok(())
}

/// `n` particles uniformly at random in `bx` with Gaussian velocities.
pub fn random_store(bx: &SimBox, n: usize, seed: u32) -> ParticleStore {
    let mut rng = CounterStream::new(seed, 0xC0F);
    let l = bx.lengths();
    let mut s = ParticleStore::with_capacity(n);
    for t in 0..n {
        let coord = [0, 1, 2].map(|k| bx.lo[k] + rng.uniform() * l[k]);
        let veloc = [0, 1, 2].map(|_| rng.normal());
        s.push(Particle {
            tag: t as u32,
            species: 0,
            molecule: 0,
            coord,
            veloc,
            force: [0.0; 3],
        });
    }
    s
}

/// A random box for density `rho` with every edge at least `min_edge`
/// and at most `max_n` particles.
pub fn random_box(rho: f64, min_edge: f64, max_n: usize, periodic: bool, rng: &mut CounterStream) -> Result<(SimBox, usize)> {
    let top = (max_n as f64 / rho).cbrt().max(min_edge);
    let l = [0; 3].map(|_| min_edge + rng.uniform() * (top - min_edge));
    let n = ((rho * l[0] * l[1] * l[2]).round() as usize).clamp(2, max_n);
    let bx = if periodic { SimBox::periodic(l)? } else { SimBox::walled(l)? };
    Ok((bx, n))
}

/// Build a table through the full pipeline on a wrapped grid and compare it
/// with [`brute_neighbors`].
pub fn check_table(
    store: &ParticleStore,
    bx: &SimBox,
    rc: f64,
    skin: f64,
    max_neighbors: usize,
) -> Result<std::result::Result<NeighborTable, String>> {
    let mut g = CellGrid::wrap(bx, rc + skin, 2)?;
    let (s, ro) = reorder_particles(store, &g)?;
    g.build_cell_list(&ro.keys)?;
    let c = build_coarse_stencil(&g);
    let f = expand_fine_stencil(&c, &g);
    let t = build_neighbor_table(&s, &g, &f, rc, skin, max_neighbors)?;
    let o = brute_neighbors(&s, &g, rc, skin);
    Ok(compare_table(&t, &o).map(|_| t))
}

/// Pair forces from every pair in the box, no table. `store` must carry
/// current signatures.
pub fn brute_forces(store: &ParticleStore, params: &PairParams, bx: &SimBox, state: &PairRandomState) -> Result<Vec<[f64; 3]>> {
    let n = store.len();
    let mut out = vec![[0.0; 3]; n];
    for (i, f) in out.iter_mut().enumerate() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ua, ub) = pair_uniforms(store.signature[i], store.signature[j], store.tag[i], store.tag[j], state);
            let t = dpd_pair_force(i, j, store, params, Some(bx), gaussian(ua, ub))?;
            let tot = t.total();
            for k in 0..3 {
                f[k] += tot[k];
            }
        }
    }
    Ok(out)
}

/// Check that every domain of `e` sees, as a local or a ghost, each particle
/// within `reach` of each of its own particles, at the right image position.
pub fn check_ghost_views(e: &Engine, reach: f64) -> std::result::Result<(), String> {
    let all = e.gather();
    let periodic = e.bx.periodic.iter().any(|&p| p).then_some(&e.bx);
    let r2 = reach * reach;
    for d in &e.domains {
        let s = &d.store;
        let mut by_tag: Vec<(u32, usize)> = (0..s.len()).map(|i| (s.tag[i], i)).collect();
        by_tag.sort_unstable();
        for i in 0..d.nl {
            let xi = s.pos(i);
            for j in 0..all.len() {
                if all.tag[j] == s.tag[i] {
                    continue;
                }
                let mut dr = [0, 1, 2].map(|k| all.coord[k][j] - xi[k]);
                if let Some(bx) = periodic {
                    dr = minimum_image(dr, bx);
                }
                if dr[0] * dr[0] + dr[1] * dr[1] + dr[2] * dr[2] > r2 {
                    continue;
                }
                let want = [0, 1, 2].map(|k| xi[k] + dr[k]);
                let lo = by_tag.partition_point(|p| p.0 < all.tag[j]);
                let found = by_tag[lo..]
                    .iter()
                    .take_while(|p| p.0 == all.tag[j])
                    .any(|&(_, g)| (0..3).all(|k| (s.coord[k][g] - want[k]).abs() < 1e-9));
                if !found {
                    return Err(format!(
                        "domain {} particle {} misses tag {} at {:?}",
                        d.rank, s.tag[i], all.tag[j], want
                    ));
                }
            }
        }
    }
    Ok(())
}
