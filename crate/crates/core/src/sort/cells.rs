//! Cell geometry, two-level Morton reordering and the sort-based cell list.
//!
//! Two layouts share one type. `wrap` covers a whole box and wraps stencils
//! across periodic faces. `padded` covers one domain slab plus a one-cell
//! ghost margin on every side, with no wrapping: periodic images arrive as
//! ghosts already shifted.
//!
//! Cell ranks order interior cells before margin cells, each group by Morton
//! code. Local particles therefore precede ghosts in the sorted array.

use crate::error::{DpdError, Result};
use crate::sort::morton::morton_unchecked;
use crate::sort::radix::{bits_for, radix_sort_in_place};
use crate::system::{ParticleStore, SimBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Wrap,
    Padded,
}

#[derive(Debug, Clone)]
pub struct CellGrid {
    pub mode: GridMode,
    /// Cells per axis including the margin.
    pub ncell: [usize; 3],
    /// Cells per axis inside the slab.
    pub interior: [usize; 3],
    pub margin: usize,
    pub origin: [f64; 3],
    pub cell_size: [f64; 3],
    inv_cell: [f64; 3],
    /// Slab bounds covered by interior cells.
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Axes wrapped by the stencil (wrap mode only).
    pub wrap: [bool; 3],
    pub box_len: [f64; 3],
    /// Reference point for single-precision coordinates.
    pub center: [f64; 3],
    pub rank_of_cell: Vec<u32>,
    pub cell_of_rank: Vec<u32>,
    pub n_interior: usize,
    pub cell_start: Vec<u32>,
    pub sub_bits: u32,
}

impl CellGrid {
    /// Whole-box grid. Periodic axes must be at least twice the cell reach.
    pub fn wrap(bx: &SimBox, reach: f64, sub_bits: u32) -> Result<Self> {
        for k in 0..3 {
            if bx.periodic[k] && bx.length(k) < 2.0 * reach {
                return Err(DpdError::InvalidInput(format!(
                    "periodic axis {k} of length {} is shorter than twice the reach {reach}",
                    bx.length(k)
                )));
            }
        }
        Self::build(GridMode::Wrap, bx.lo, bx.hi, reach, sub_bits, bx.periodic, bx.center(), bx.lengths())
    }

    /// Slab grid with a one-cell ghost margin.
    pub fn padded(lo: [f64; 3], hi: [f64; 3], reach: f64, sub_bits: u32, center: [f64; 3]) -> Result<Self> {
        let len = [0, 1, 2].map(|k| hi[k] - lo[k]);
        Self::build(GridMode::Padded, lo, hi, reach, sub_bits, [false; 3], center, len)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        mode: GridMode,
        lo: [f64; 3],
        hi: [f64; 3],
        reach: f64,
        sub_bits: u32,
        wrap: [bool; 3],
        center: [f64; 3],
        box_len: [f64; 3],
    ) -> Result<Self> {
        if !(reach > 0.0) {
            return Err(DpdError::InvalidInput("cell reach must be > 0".into()));
        }
        if sub_bits > 3 {
            return Err(DpdError::InvalidInput("sub_bits must be <= 3".into()));
        }
        let margin = usize::from(mode == GridMode::Padded);
        let mut interior = [0usize; 3];
        let mut cell_size = [0.0; 3];
        for k in 0..3 {
            let slab = hi[k] - lo[k];
            if slab < reach {
                return Err(DpdError::SlabTooThin {
                    axis: k,
                    slab,
                    required: reach,
                });
            }
            interior[k] = ((slab / reach).floor() as usize).max(1);
            cell_size[k] = slab / interior[k] as f64;
        }
        let ncell = interior.map(|n| n + 2 * margin);
        if ncell.iter().any(|&n| n > 1 << 10) {
            return Err(DpdError::InvalidInput("more than 1024 cells along an axis".into()));
        }
        let origin = [0, 1, 2].map(|k| lo[k] - margin as f64 * cell_size[k]);
        let total = ncell[0] * ncell[1] * ncell[2];
        if (total as u64) << (3 * sub_bits) > u32::MAX as u64 {
            return Err(DpdError::InvalidInput("cell grid too large for 32-bit keys".into()));
        }

        let mut order: Vec<(bool, u32, u32)> = Vec::with_capacity(total);
        for iz in 0..ncell[2] {
            for iy in 0..ncell[1] {
                for ix in 0..ncell[0] {
                    let l = (ix + ncell[0] * (iy + ncell[1] * iz)) as u32;
                    let edge = [ix, iy, iz]
                        .iter()
                        .zip(ncell.iter())
                        .any(|(&i, &n)| i < margin || i >= n - margin);
                    order.push((edge, morton_unchecked(ix as u32, iy as u32, iz as u32), l));
                }
            }
        }
        order.sort_unstable();
        let mut rank_of_cell = vec![0u32; total];
        let cell_of_rank: Vec<u32> = order.iter().map(|o| o.2).collect();
        for (r, &c) in cell_of_rank.iter().enumerate() {
            rank_of_cell[c as usize] = r as u32;
        }
        let n_interior = order.iter().filter(|o| !o.0).count();
        Ok(Self {
            mode,
            ncell,
            interior,
            margin,
            origin,
            cell_size,
            inv_cell: cell_size.map(|c| 1.0 / c),
            lo,
            hi,
            wrap,
            box_len,
            center,
            rank_of_cell,
            cell_of_rank,
            n_interior,
            cell_start: vec![0; total + 1],
            sub_bits,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.rank_of_cell.len()
    }

    #[inline]
    pub fn lattice_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.ncell[0] * (c[1] + self.ncell[1] * c[2])
    }

    #[inline]
    pub fn lattice_coords(&self, l: usize) -> [usize; 3] {
        [l % self.ncell[0], (l / self.ncell[0]) % self.ncell[1], l / (self.ncell[0] * self.ncell[1])]
    }

    /// Cell coordinate and sub-cell index along one axis, clamped to `[lo_c, hi_c]`.
    #[inline]
    fn axis_bin(&self, k: usize, x: f64, lo_c: usize, hi_c: usize) -> (usize, u32) {
        let t = (x - self.origin[k]) * self.inv_cell[k];
        let f = t.floor();
        let c = (f.max(lo_c as f64) as usize).min(hi_c);
        let frac = t - c as f64;
        let nsub = 1u32 << self.sub_bits;
        let s = ((frac * nsub as f64).floor().max(0.0) as u32).min(nsub - 1);
        (c, s)
    }

    /// Composite sort key for a particle inside the slab.
    pub fn local_key(&self, tag: u32, pos: [f64; 3]) -> Result<u32> {
        let mut c = [0usize; 3];
        let mut s = [0u32; 3];
        for k in 0..3 {
            let x = pos[k];
            if !(x >= self.lo[k] && x <= self.hi[k]) {
                return Err(DpdError::OutsideGrid { tag, pos });
            }
            let (ci, si) = self.axis_bin(k, x, self.margin, self.margin + self.interior[k] - 1);
            c[k] = ci;
            s[k] = si;
        }
        Ok(self.compose(c, s))
    }

    /// Key for a ghost that arrived from direction `o`: it sits in the margin
    /// on side `-o`, clamped into the interior on axes where `o` is zero.
    pub fn ghost_key(&self, pos: [f64; 3], o: [i32; 3]) -> u32 {
        let mut c = [0usize; 3];
        let mut s = [0u32; 3];
        for k in 0..3 {
            let (lo_c, hi_c) = match o[k] {
                1 => (0, 0),
                -1 => (self.ncell[k] - 1, self.ncell[k] - 1),
                _ => (self.margin, self.margin + self.interior[k] - 1),
            };
            let (ci, si) = self.axis_bin(k, pos[k], lo_c, hi_c);
            c[k] = ci;
            s[k] = si;
        }
        self.compose(c, s)
    }

    #[inline]
    fn compose(&self, c: [usize; 3], s: [u32; 3]) -> u32 {
        let rank = self.rank_of_cell[self.lattice_index(c)];
        (rank << (3 * self.sub_bits)) | morton_unchecked(s[0], s[1], s[2])
    }

    #[inline]
    pub fn rank_of_key(&self, key: u32) -> u32 {
        key >> (3 * self.sub_bits)
    }

    pub fn key_bits(&self) -> u32 {
        bits_for(((self.n_cells() as u32) << (3 * self.sub_bits)).saturating_sub(1))
    }

    /// Particle range of the cell with rank `r`.
    #[inline]
    pub fn range(&self, r: usize) -> std::ops::Range<usize> {
        self.cell_start[r] as usize..self.cell_start[r + 1] as usize
    }

    /// Fill `cell_start` from keys already sorted by rank, by detecting where
    /// the rank changes.
    pub fn build_cell_list(&mut self, keys: &[u32]) -> Result<()> {
        let nc = self.n_cells();
        let mut prev: i64 = -1;
        let mut prev_key = 0u32;
        for (i, &k) in keys.iter().enumerate() {
            if i > 0 && k < prev_key {
                return Err(DpdError::UnsortedCells { index: i });
            }
            prev_key = k;
            let r = self.rank_of_key(k) as i64;
            if r as usize >= nc {
                return Err(DpdError::InvalidInput(format!("key {k} beyond cell grid")));
            }
            if r != prev {
                for c in (prev + 1)..=r {
                    self.cell_start[c as usize] = i as u32;
                }
                prev = r;
            }
        }
        for c in (prev + 1) as usize..=nc {
            self.cell_start[c] = keys.len() as u32;
        }
        Ok(())
    }
}

/// Result of a reorder.
#[derive(Debug, Clone)]
pub struct Reorder {
    /// `order[new] = old`.
    pub order: Vec<usize>,
    /// `new_of_old[old] = new`.
    pub new_of_old: Vec<usize>,
    /// Sorted composite keys.
    pub keys: Vec<u32>,
}

/// Compute local keys and stable-sort them.
pub fn sort_keys(keys: Vec<u32>, bits: u32) -> Reorder {
    let mut keys = keys;
    let mut vals: Vec<u32> = (0..keys.len() as u32).collect();
    radix_sort_in_place(&mut keys, &mut vals, bits);
    let order: Vec<usize> = vals.iter().map(|&v| v as usize).collect();
    let mut new_of_old = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_of_old[old] = new;
    }
    Reorder {
        order,
        new_of_old,
        keys,
    }
}

/// Reorder every particle of `store` (all assumed local) along the
/// two-level Morton curve.
pub fn reorder_particles(store: &ParticleStore, grid: &CellGrid) -> Result<(ParticleStore, Reorder)> {
    let keys = (0..store.len())
        .map(|i| grid.local_key(store.tag[i], store.pos(i)))
        .collect::<Result<Vec<_>>>()?;
    let ro = sort_keys(keys, grid.key_bits());
    Ok((store.gather(&ro.order), ro))
}
