//! Processor grid over the simulation box.

use crate::error::{DpdError, Result};
use crate::system::SimBox;

/// The 26 neighbour offsets, z outermost, skipping the origin.
pub fn directions() -> [[i32; 3]; 26] {
    let mut out = [[0; 3]; 26];
    let mut n = 0;
    for oz in -1..=1 {
        for oy in -1..=1 {
            for ox in -1..=1 {
                if ox == 0 && oy == 0 && oz == 0 {
                    continue;
                }
                out[n] = [ox, oy, oz];
                n += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    pub dims: [usize; 3],
    pub bx: SimBox,
    /// Slab boundaries per axis, `dims[k] + 1` values from `lo` to `hi`.
    pub bounds: [Vec<f64>; 3],
}

/// Link from one domain to a neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub rank: usize,
    /// Added to coordinates sent along this link.
    pub shift: [f64; 3],
}

impl DomainGrid {
    pub fn n_domains(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn rank_of(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn coords_of(&self, rank: usize) -> [usize; 3] {
        [
            rank % self.dims[0],
            (rank / self.dims[0]) % self.dims[1],
            rank / (self.dims[0] * self.dims[1]),
        ]
    }

    pub fn slab(&self, rank: usize) -> ([f64; 3], [f64; 3]) {
        let c = self.coords_of(rank);
        let lo = [0, 1, 2].map(|k| self.bounds[k][c[k]]);
        let hi = [0, 1, 2].map(|k| self.bounds[k][c[k] + 1]);
        (lo, hi)
    }

    /// Domain index along axis `k` owning coordinate `x` (half-open slabs).
    #[inline]
    pub fn owner_axis(&self, k: usize, x: f64) -> usize {
        let b = &self.bounds[k];
        let mut c = 0;
        while c + 1 < self.dims[k] && x >= b[c + 1] {
            c += 1;
        }
        c
    }

    pub fn owner(&self, pos: [f64; 3]) -> usize {
        self.rank_of([0, 1, 2].map(|k| self.owner_axis(k, pos[k])))
    }

    /// Neighbour of `rank` in direction `o`, or `None` across a non-periodic edge.
    pub fn neighbor(&self, rank: usize, o: [i32; 3]) -> Option<Link> {
        let c = self.coords_of(rank);
        let mut nc = [0usize; 3];
        let mut shift = [0.0; 3];
        for k in 0..3 {
            let p = self.dims[k] as i64;
            let v = c[k] as i64 + o[k] as i64;
            if v < 0 || v >= p {
                if !self.bx.periodic[k] {
                    return None;
                }
                shift[k] = -(o[k] as f64) * self.bx.length(k);
            }
            nc[k] = v.rem_euclid(p) as usize;
        }
        Some(Link {
            rank: self.rank_of(nc),
            shift,
        })
    }

    /// Distinct neighbour ranks other than `rank`, ascending.
    pub fn neighbor_ranks(&self, rank: usize) -> Vec<usize> {
        let mut v: Vec<usize> = directions()
            .iter()
            .filter_map(|&o| self.neighbor(rank, o))
            .map(|l| l.rank)
            .filter(|&r| r != rank)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Uniform slabs; each must be at least `reach` thick.
pub fn decompose(bx: &SimBox, dims: [usize; 3], reach: f64) -> Result<DomainGrid> {
    let mut bounds: [Vec<f64>; 3] = Default::default();
    for k in 0..3 {
        if dims[k] == 0 {
            return Err(DpdError::Config("domain counts must be >= 1".into()));
        }
        let slab = bx.length(k) / dims[k] as f64;
        if slab < reach {
            return Err(DpdError::SlabTooThin {
                axis: k,
                slab,
                required: reach,
            });
        }
        bounds[k] = (0..=dims[k])
            .map(|c| if c == dims[k] { bx.hi[k] } else { bx.lo[k] + c as f64 * slab })
            .collect();
    }
    Ok(DomainGrid { dims, bx: *bx, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_domain() {
        let bx = SimBox::periodic([12.0, 8.0, 8.0]).unwrap();
        let g = decompose(&bx, [1, 1, 1], 1.3).unwrap();
        assert_eq!(g.n_domains(), 1);
        assert_eq!(g.slab(0), ([0.0; 3], [12.0, 8.0, 8.0]));
        let l = g.neighbor(0, [1, 0, -1]).unwrap();
        assert_eq!(l.rank, 0);
        assert_eq!(l.shift, [-12.0, 0.0, 8.0]);
    }

    #[test]
    fn halves_and_tie_break() {
        let bx = SimBox::periodic([12.0, 8.0, 8.0]).unwrap();
        let g = decompose(&bx, [2, 1, 1], 1.3).unwrap();
        assert_eq!(g.bounds[0], vec![0.0, 6.0, 12.0]);
        assert_eq!(g.owner([6.0, 1.0, 1.0]), 1);
        assert_eq!(g.owner([5.999, 1.0, 1.0]), 0);
    }

    #[test]
    fn thin_slab_rejected() {
        let bx = SimBox::periodic([4.0; 3]).unwrap();
        assert!(matches!(decompose(&bx, [4, 1, 1], 1.3), Err(DpdError::SlabTooThin { axis: 0, .. })));
    }

    #[test]
    fn walls_cut_links() {
        let bx = SimBox::walled([8.0; 3]).unwrap();
        let g = decompose(&bx, [2, 2, 2], 1.3).unwrap();
        assert!(g.neighbor(0, [-1, 0, 0]).is_none());
        assert_eq!(g.neighbor(0, [1, 1, 1]).unwrap().rank, 7);
        assert_eq!(g.neighbor_ranks(0), vec![1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn direction_order() {
        let d = directions();
        assert_eq!(d[0], [-1, -1, -1]);
        assert_eq!(d[13], [1, 0, 0]);
        assert_eq!(d[25], [1, 1, 1]);
    }
}
