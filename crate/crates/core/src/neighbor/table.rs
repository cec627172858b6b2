//! Ordered neighbour table built without atomics.
//!
//! Candidates are tested in batches of `W` lanes. Each hit's slot is the
//! row's current count plus the number of hits in lower lanes, so rows come
//! out in stencil order, which is ascending because particles are numbered
//! along the cell curve. Core hits fill a row from the front; skin hits fill
//! it from the back.

use rayon::prelude::*;

use crate::error::{DpdError, Result};
use crate::neighbor::stencil::{row_cells, FineStencil};
use crate::sort::{CellGrid, GridMode};
use crate::system::ParticleStore;

/// Lane-group width.
pub const W: usize = 32;
/// Tile edge for the transposed layout.
pub const TILE: usize = 32;
pub const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Core from the front, skin from the back.
    Split,
    /// Core then skin, both ascending; count held in `core_count`.
    Joined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborTable {
    pub max_neighbors: usize,
    /// Physical row width, a multiple of `TILE`.
    pub width: usize,
    pub nrows: usize,
    pub entries: Vec<u32>,
    pub core_count: Vec<u16>,
    pub skin_count: Vec<u16>,
    pub layout: Layout,
    pub tiled: bool,
}

/// Single-precision coordinates relative to the grid center.
pub fn relative_f32(store: &ParticleStore, grid: &CellGrid) -> Vec<[f32; 3]> {
    let c = grid.center;
    (0..store.len())
        .map(|i| {
            [
                (store.coord[0][i] - c[0]) as f32,
                (store.coord[1][i] - c[1]) as f32,
                (store.coord[2][i] - c[2]) as f32,
            ]
        })
        .collect()
}

/// Squared distance in single precision, with minimum image on wrapped axes.
#[inline(always)]
pub fn dist2_f32(pi: [f32; 3], pj: [f32; 3], wrap: [bool; 3], len: [f32; 3]) -> f32 {
    let mut d = [pj[0] - pi[0], pj[1] - pi[1], pj[2] - pi[2]];
    for k in 0..3 {
        if wrap[k] {
            d[k] = wrap_f32(d[k], len[k]);
        }
    }
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Fold a separation in `(-len, len)` into `[-len/2, len/2]`.
#[inline(always)]
pub fn wrap_f32(d: f32, len: f32) -> f32 {
    let half = 0.5 * len;
    if d > half {
        d - len
    } else if d < -half {
        d + len
    } else {
        d
    }
}

/// Squared thresholds `(rc^2, (rc + skin)^2)` rounded to single precision.
pub fn thresholds(rc: f64, skin: f64) -> (f32, f32) {
    ((rc * rc) as f32, ((rc + skin) * (rc + skin)) as f32)
}

struct CellRows<'a> {
    rank: usize,
    first: usize,
    entries: &'a mut [u32],
    core: &'a mut [u16],
    skin: &'a mut [u16],
}

/// Build rows for every particle in a row cell.
pub fn build_neighbor_table(
    store: &ParticleStore,
    grid: &CellGrid,
    fine: &FineStencil,
    rc: f64,
    skin: f64,
    max_neighbors: usize,
) -> Result<NeighborTable> {
    if max_neighbors == 0 || max_neighbors > u16::MAX as usize {
        return Err(DpdError::InvalidInput("max_neighbors must be in 1..=65535".into()));
    }
    let ncells = row_cells(grid);
    let nrows = grid.cell_start[ncells] as usize;
    let width = max_neighbors.div_ceil(TILE) * TILE;
    let padded_rows = nrows.div_ceil(TILE) * TILE;
    let mut entries = vec![EMPTY; padded_rows * width];
    let mut core_count = vec![0u16; padded_rows];
    let mut skin_count = vec![0u16; padded_rows];

    let pos = relative_f32(store, grid);
    let wrap = match grid.mode {
        GridMode::Wrap => grid.wrap,
        GridMode::Padded => [false; 3],
    };
    let len = grid.box_len.map(|l| l as f32);
    let (core2, outer2) = thresholds(rc, skin);

    let mut chunks = Vec::with_capacity(ncells);
    {
        let mut e: &mut [u32] = &mut entries[..nrows * width];
        let mut cc: &mut [u16] = &mut core_count[..nrows];
        let mut sc: &mut [u16] = &mut skin_count[..nrows];
        for r in 0..ncells {
            let n = grid.range(r).len();
            let (e0, e1) = std::mem::take(&mut e).split_at_mut(n * width);
            let (c0, c1) = std::mem::take(&mut cc).split_at_mut(n);
            let (s0, s1) = std::mem::take(&mut sc).split_at_mut(n);
            chunks.push(CellRows {
                rank: r,
                first: grid.cell_start[r] as usize,
                entries: e0,
                core: c0,
                skin: s0,
            });
            e = e1;
            cc = c1;
            sc = s1;
        }
    }

    let results: Vec<Result<()>> = chunks
        .into_par_iter()
        .map(|mut rows| {
            let stencil = fine.get(rows.rank);
            let n = rows.core.len();
            if n == 0 {
                return Ok(());
            }
            let m = stencil.len();
            let padded = m.div_ceil(W) * W;
            let mut sx = vec![0f32; padded];
            let mut sy = vec![0f32; padded];
            let mut sz = vec![0f32; padded];
            for (k, &j) in stencil.iter().enumerate() {
                let q = pos[j as usize];
                sx[k] = q[0];
                sy[k] = q[1];
                sz[k] = q[2];
            }
            let own = stencil
                .iter()
                .position(|&j| j as usize == rows.first)
                .expect("row cell missing from its own stencil");
            if wrap.iter().any(|&w| w) {
                fill_rows::<true>(&mut rows, store, stencil, &pos, [&sx, &sy, &sz], own, wrap, len, core2, outer2, width, max_neighbors)
            } else {
                fill_rows::<false>(&mut rows, store, stencil, &pos, [&sx, &sy, &sz], own, wrap, len, core2, outer2, width, max_neighbors)
            }
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(NeighborTable {
        max_neighbors,
        width,
        nrows,
        entries,
        core_count,
        skin_count,
        layout: Layout::Split,
        tiled: false,
    })
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn fill_rows<const WRAP: bool>(
    rows: &mut CellRows,
    store: &ParticleStore,
    stencil: &[u32],
    pos: &[[f32; 3]],
    sp: [&[f32]; 3],
    own: usize,
    wrap: [bool; 3],
    len: [f32; 3],
    core2: f32,
    outer2: f32,
    width: usize,
    max_neighbors: usize,
) -> Result<()> {
    let m = stencil.len();
    let n = rows.core.len();
    for li in 0..n {
        let i = rows.first + li;
        let pi = pos[i];
        let self_lane = own + li;
        let row = &mut rows.entries[li * width..(li + 1) * width];
        let mut cc = 0usize;
        let mut sc = 0usize;
        for jb in (0..m).step_by(W) {
            let mut r2 = [0f32; W];
            let xs = &sp[0][jb..jb + W];
            let ys = &sp[1][jb..jb + W];
            let zs = &sp[2][jb..jb + W];
            for l in 0..W {
                let mut d = [xs[l] - pi[0], ys[l] - pi[1], zs[l] - pi[2]];
                if WRAP {
                    for k in 0..3 {
                        if wrap[k] {
                            d[k] = wrap_f32(d[k], len[k]);
                        }
                    }
                }
                r2[l] = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            }
            let valid = if m - jb >= W { u32::MAX } else { (1u32 << (m - jb)) - 1 };
            let mut core_hits = 0u32;
            let mut skin_hits = 0u32;
            for (l, &x) in r2.iter().enumerate() {
                core_hits |= ((x <= core2) as u32) << l;
                skin_hits |= ((x > core2 && x <= outer2) as u32) << l;
            }
            core_hits &= valid;
            skin_hits &= valid;
            if (jb..jb + W).contains(&self_lane) {
                core_hits &= !(1u32 << (self_lane - jb));
            }
            if core_hits | skin_hits == 0 {
                continue;
            }
            let total = cc + sc + (core_hits.count_ones() + skin_hits.count_ones()) as usize;
            if total > max_neighbors {
                return Err(DpdError::RowOverflow {
                    tag: store.tag[i],
                    count: total,
                    capacity: max_neighbors,
                });
            }
            let lanes = &stencil[jb..];
            let mut mk = core_hits;
            while mk != 0 {
                let l = mk.trailing_zeros();
                let ahead = (core_hits & ((1u32 << l) - 1)).count_ones() as usize;
                row[cc + ahead] = lanes[l as usize];
                mk &= mk - 1;
            }
            let mut mk = skin_hits;
            while mk != 0 {
                let l = mk.trailing_zeros();
                let ahead = (skin_hits & ((1u32 << l) - 1)).count_ones() as usize;
                row[width - 1 - (sc + ahead)] = lanes[l as usize];
                mk &= mk - 1;
            }
            cc += core_hits.count_ones() as usize;
            sc += skin_hits.count_ones() as usize;
        }
        rows.core[li] = cc as u16;
        rows.skin[li] = sc as u16;
    }
    Ok(())
}

impl NeighborTable {
    /// Physical slot of logical `(row, k)`.
    #[inline(always)]
    fn slot(&self, row: usize, k: usize) -> usize {
        if self.tiled {
            let pr = (row / TILE) * TILE + k % TILE;
            let pc = (k / TILE) * TILE + row % TILE;
            pr * self.width + pc
        } else {
            row * self.width + k
        }
    }

    /// Logical row-major read, independent of the tile layout.
    #[inline(always)]
    pub fn get(&self, row: usize, k: usize) -> u32 {
        self.entries[self.slot(row, k)]
    }

    pub fn count(&self, row: usize) -> usize {
        self.core_count[row] as usize + self.skin_count[row] as usize
    }

    /// Core entries, ascending.
    pub fn core(&self, row: usize) -> Vec<u32> {
        let n = self.core_count[row] as usize;
        match self.layout {
            Layout::Split => (0..n).map(|k| self.get(row, k)).collect(),
            Layout::Joined => Vec::new(),
        }
    }

    /// Skin entries, ascending (read back to front).
    pub fn skin(&self, row: usize) -> Vec<u32> {
        let n = self.skin_count[row] as usize;
        (0..n).map(|s| self.get(row, self.width - 1 - s)).collect()
    }

    /// All entries of a row in evaluation order: core ascending, then skin ascending.
    pub fn row(&self, row: usize) -> Vec<u32> {
        match self.layout {
            Layout::Split => {
                let mut v = self.core(row);
                v.extend(self.skin(row));
                v
            }
            Layout::Joined => (0..self.core_count[row] as usize).map(|k| self.get(row, k)).collect(),
        }
    }

    /// Contiguous slices `(core, skin_stored_descending)` of an untiled row.
    #[inline(always)]
    pub fn row_slices(&self, row: usize) -> (&[u32], &[u32]) {
        debug_assert!(!self.tiled);
        let base = row * self.width;
        let cc = self.core_count[row] as usize;
        let sc = self.skin_count[row] as usize;
        let core = &self.entries[base..base + cc];
        let skin = &self.entries[base + self.width - sc..base + self.width];
        (core, skin)
    }

    pub fn total_entries(&self) -> usize {
        (0..self.nrows).map(|r| self.count(r)).sum()
    }
}

/// Rewrite every row as core then skin, both ascending.
pub fn join_core_skin(table: &NeighborTable) -> NeighborTable {
    let mut out = table.clone();
    if table.layout == Layout::Joined {
        return out;
    }
    out.tiled = false;
    out.entries.iter_mut().for_each(|e| *e = EMPTY);
    for r in 0..table.nrows {
        let row = table.row(r);
        let base = r * out.width;
        out.entries[base..base + row.len()].copy_from_slice(&row);
        out.core_count[r] = row.len() as u16;
        out.skin_count[r] = 0;
    }
    out.layout = Layout::Joined;
    if table.tiled {
        tile_transpose(&mut out);
    }
    out
}

/// Transpose each `TILE x TILE` block in place. Applying it twice restores the table.
pub fn tile_transpose(table: &mut NeighborTable) {
    let rows = table.entries.len() / table.width;
    debug_assert_eq!(rows % TILE, 0);
    debug_assert_eq!(table.width % TILE, 0);
    let w = table.width;
    for rb in (0..rows).step_by(TILE) {
        for cb in (0..w).step_by(TILE) {
            for r in 0..TILE {
                for c in (r + 1)..TILE {
                    table.entries.swap((rb + r) * w + cb + c, (rb + c) * w + cb + r);
                }
            }
        }
    }
    table.tiled = !table.tiled;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbor::stencil::{build_coarse_stencil, expand_fine_stencil};
    use crate::sort::reorder_particles;
    use crate::system::{Particle, SimBox};

    fn build(store: &ParticleStore, bx: &SimBox, rc: f64, skin: f64, workers: usize) -> NeighborTable {
        let mut g = CellGrid::wrap(bx, rc + skin, 2).unwrap();
        let (s, ro) = reorder_particles(store, &g).unwrap();
        g.build_cell_list(&ro.keys).unwrap();
        let c = build_coarse_stencil(&g);
        let f = expand_fine_stencil(&c, &g);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| build_neighbor_table(&s, &g, &f, rc, skin, 128)).unwrap()
    }

    fn two(d: f64) -> ParticleStore {
        let mut s = ParticleStore::default();
        for (t, x) in [(0u32, 2.0), (1, 2.0 + d)] {
            s.push(Particle {
                tag: t,
                species: 0,
                molecule: 0,
                coord: [x, 2.0, 2.0],
                veloc: [0.0; 3],
                force: [0.0; 3],
            });
        }
        s
    }

    #[test]
    fn close_pair_is_core() {
        let bx = SimBox::periodic([5.0; 3]).unwrap();
        let t = build(&two(0.5), &bx, 1.0, 0.3, 1);
        assert_eq!(t.core(0), vec![1]);
        assert_eq!(t.core(1), vec![0]);
        assert!(t.skin(0).is_empty());
    }

    #[test]
    fn far_pair_is_absent() {
        let bx = SimBox::periodic([5.0; 3]).unwrap();
        let t = build(&two(1.3 + 1e-4), &bx, 1.0, 0.3, 1);
        assert_eq!(t.count(0), 0);
        assert_eq!(t.count(1), 0);
        let t = build(&two(1.2), &bx, 1.0, 0.3, 1);
        assert_eq!(t.skin(0), vec![1]);
    }

    #[test]
    fn join_example() {
        let mut t = NeighborTable {
            max_neighbors: 32,
            width: 32,
            nrows: 1,
            entries: vec![EMPTY; 32 * 32],
            core_count: vec![0; 32],
            skin_count: vec![0; 32],
            layout: Layout::Split,
            tiled: false,
        };
        t.entries[0] = 2;
        t.entries[1] = 5;
        t.entries[31] = 7;
        t.entries[30] = 9;
        t.core_count[0] = 2;
        t.skin_count[0] = 2;
        let j = join_core_skin(&t);
        assert_eq!(j.row(0), vec![2, 5, 7, 9]);
        assert_eq!(j.count(0), 4);
    }

    #[test]
    fn transpose_moves_and_restores() {
        let mut t = NeighborTable {
            max_neighbors: 64,
            width: 64,
            nrows: 40,
            entries: (0..64 * 64).map(|x| x as u32).collect(),
            core_count: vec![0; 64],
            skin_count: vec![0; 64],
            layout: Layout::Split,
            tiled: false,
        };
        let orig = t.clone();
        tile_transpose(&mut t);
        assert_eq!(t.entries[64], orig.entries[1]);
        for r in 0..64 {
            for k in 0..64 {
                assert_eq!(t.get(r, k), orig.get(r, k));
            }
        }
        tile_transpose(&mut t);
        assert_eq!(t, orig);
    }

    #[test]
    fn overflow_reports_tag() {
        let bx = SimBox::periodic([3.0; 3]).unwrap();
        let mut s = ParticleStore::default();
        for t in 0..40u32 {
            s.push(Particle {
                tag: t,
                species: 0,
                molecule: 0,
                coord: [1.0 + 0.01 * t as f64, 1.0, 1.0],
                veloc: [0.0; 3],
                force: [0.0; 3],
            });
        }
        let mut g = CellGrid::wrap(&bx, 1.3, 2).unwrap();
        let (s, ro) = reorder_particles(&s, &g).unwrap();
        g.build_cell_list(&ro.keys).unwrap();
        let f = expand_fine_stencil(&build_coarse_stencil(&g), &g);
        let e = build_neighbor_table(&s, &g, &f, 1.0, 0.3, 16).unwrap_err();
        assert!(matches!(e, DpdError::RowOverflow { capacity: 16, .. }));
    }
}
