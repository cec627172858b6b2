//! Coarse (cell) and fine (particle) stencils.

use crate::sort::{CellGrid, GridMode};

/// Per row cell, the neighbouring cell ranks in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseStencil {
    pub offsets: Vec<usize>,
    pub ranks: Vec<u32>,
}

impl CoarseStencil {
    pub fn n_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn get(&self, r: usize) -> &[u32] {
        &self.ranks[self.offsets[r]..self.offsets[r + 1]]
    }
}

/// Number of cells that own neighbour rows: all of them in wrap mode, the
/// interior ones in padded mode.
pub fn row_cells(grid: &CellGrid) -> usize {
    match grid.mode {
        GridMode::Wrap => grid.n_cells(),
        GridMode::Padded => grid.n_interior,
    }
}

pub fn build_coarse_stencil(grid: &CellGrid) -> CoarseStencil {
    let n = row_cells(grid);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut ranks = Vec::with_capacity(n * 27);
    offsets.push(0);
    let mut buf = Vec::with_capacity(27);
    for r in 0..n {
        let c = grid.lattice_coords(grid.cell_of_rank[r] as usize);
        buf.clear();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                'dx: for dx in -1i64..=1 {
                    let mut nc = [0usize; 3];
                    for (k, d) in [dx, dy, dz].into_iter().enumerate() {
                        let m = grid.ncell[k] as i64;
                        let mut v = c[k] as i64 + d;
                        if v < 0 || v >= m {
                            if grid.wrap[k] {
                                v = v.rem_euclid(m);
                            } else {
                                continue 'dx;
                            }
                        }
                        nc[k] = v as usize;
                    }
                    buf.push(grid.rank_of_cell[grid.lattice_index(nc)]);
                }
            }
        }
        buf.sort_unstable();
        buf.dedup();
        ranks.extend_from_slice(&buf);
        offsets.push(ranks.len());
    }
    CoarseStencil { offsets, ranks }
}

/// Per row cell, the particle indices of its coarse stencil, concatenated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FineStencil {
    pub offsets: Vec<usize>,
    pub indices: Vec<u32>,
}

impl FineStencil {
    pub fn get(&self, r: usize) -> &[u32] {
        &self.indices[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn mean_len(&self) -> f64 {
        let n = self.offsets.len() - 1;
        if n == 0 {
            0.0
        } else {
            self.indices.len() as f64 / n as f64
        }
    }
}

pub fn expand_fine_stencil(coarse: &CoarseStencil, grid: &CellGrid) -> FineStencil {
    let n = coarse.n_cells();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let total: usize = (0..n)
        .map(|r| coarse.get(r).iter().map(|&c| grid.range(c as usize).len()).sum::<usize>())
        .sum();
    let mut indices = Vec::with_capacity(total);
    for r in 0..n {
        for &c in coarse.get(r) {
            indices.extend(grid.range(c as usize).map(|i| i as u32));
        }
        offsets.push(indices.len());
    }
    FineStencil { offsets, indices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SimBox;

    fn rank_at(g: &CellGrid, c: [usize; 3]) -> usize {
        g.rank_of_cell[g.lattice_index(c)] as usize
    }

    #[test]
    fn periodic_interior_and_corner() {
        let bx = SimBox::periodic([4.0; 3]).unwrap();
        let g = CellGrid::wrap(&bx, 1.0, 2).unwrap();
        let s = build_coarse_stencil(&g);
        assert_eq!(s.get(rank_at(&g, [1, 1, 1])).len(), 27);
        assert_eq!(s.get(rank_at(&g, [0, 0, 0])).len(), 27);
        for r in 0..s.n_cells() {
            assert!(s.get(r).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn walled_corner() {
        let bx = SimBox::walled([4.0; 3]).unwrap();
        let g = CellGrid::wrap(&bx, 1.0, 2).unwrap();
        let s = build_coarse_stencil(&g);
        assert_eq!(s.get(rank_at(&g, [0, 0, 0])).len(), 8);
        assert_eq!(s.get(rank_at(&g, [1, 2, 1])).len(), 27);
        assert_eq!(s.get(rank_at(&g, [0, 2, 1])).len(), 18);
    }

    #[test]
    fn padded_rows_only_interior() {
        let g = CellGrid::padded([0.0; 3], [3.0; 3], 1.0, 2, [1.5; 3]).unwrap();
        let s = build_coarse_stencil(&g);
        assert_eq!(s.n_cells(), 27);
        for r in 0..27 {
            assert_eq!(s.get(r).len(), 27);
        }
    }

    #[test]
    fn two_small_wraps_dedupe() {
        let bx = SimBox::periodic([2.0, 2.0, 2.0]).unwrap();
        let g = CellGrid::wrap(&bx, 1.0, 2).unwrap();
        let s = build_coarse_stencil(&g);
        assert_eq!(s.get(0).len(), 8);
    }
}
