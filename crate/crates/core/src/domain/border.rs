//! Selection of local particles that must be sent as ghosts.

use rayon::prelude::*;

use super::grid::{directions, DomainGrid, Link};
use crate::system::ParticleStore;

const BLOCK: usize = 4096;

/// One outgoing ghost stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SendList {
    /// Index into [`directions`].
    pub dir: usize,
    pub link: Link,
    /// Local indices, ascending.
    pub indices: Vec<u32>,
}

/// Parallel stream compaction: indices `i` with `flag(i)`, in ascending order.
/// Per-block counts, an exclusive scan over blocks, then per-block writes.
pub fn compact<F>(n: usize, flag: F) -> Vec<u32>
where
    F: Fn(usize) -> bool + Sync,
{
    let nblocks = n.div_ceil(BLOCK);
    let flags: Vec<bool> = (0..n).into_par_iter().map(&flag).collect();
    let counts: Vec<usize> = (0..nblocks)
        .into_par_iter()
        .map(|b| flags[b * BLOCK..((b + 1) * BLOCK).min(n)].iter().filter(|&&f| f).count())
        .collect();
    let mut starts = Vec::with_capacity(nblocks + 1);
    starts.push(0);
    for c in &counts {
        starts.push(starts.last().unwrap() + c);
    }
    let mut out = vec![0u32; starts[nblocks]];
    let mut chunks = Vec::with_capacity(nblocks);
    let mut rest = out.as_mut_slice();
    for c in &counts {
        let (head, tail) = rest.split_at_mut(*c);
        chunks.push(head);
        rest = tail;
    }
    chunks.into_par_iter().enumerate().for_each(|(b, dst)| {
        let mut w = 0;
        for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
            if flags[i] {
                dst[w] = i as u32;
                w += 1;
            }
        }
    });
    out
}

/// For each existing neighbour direction, the locals within `reach` of the
/// matching slab faces. Directions are visited in [`directions`] order.
pub fn border_determination(store: &ParticleStore, nl: usize, grid: &DomainGrid, rank: usize, reach: f64) -> Vec<SendList> {
    let (lo, hi) = grid.slab(rank);
    let mut out = Vec::new();
    for (d, o) in directions().into_iter().enumerate() {
        let Some(link) = grid.neighbor(rank, o) else {
            continue;
        };
        let indices = compact(nl, |i| {
            (0..3).all(|k| {
                let x = store.coord[k][i];
                match o[k] {
                    -1 => x < lo[k] + reach,
                    1 => x >= hi[k] - reach,
                    _ => true,
                }
            })
        });
        out.push(SendList { dir: d, link, indices });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::grid::decompose;
    use crate::system::{Particle, SimBox};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn compaction_matches_filter(flags in proptest::collection::vec(any::<bool>(), 0..20000)) {
            let got = compact(flags.len(), |i| flags[i]);
            let want: Vec<u32> = (0..flags.len()).filter(|&i| flags[i]).map(|i| i as u32).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn face_edge_corner() {
        let bx = SimBox::periodic([8.0; 3]).unwrap();
        let g = decompose(&bx, [2, 2, 2], 1.0).unwrap();
        let mut s = ParticleStore::default();
        for (t, p) in [[0.5, 2.0, 2.0], [0.5, 0.5, 2.0], [0.5, 0.5, 0.5], [2.0, 2.0, 2.0], [3.5, 2.0, 2.0]]
            .into_iter()
            .enumerate()
        {
            s.push(Particle {
                tag: t as u32,
                species: 0,
                molecule: 0,
                coord: p,
                veloc: [0.0; 3],
                force: [0.0; 3],
            });
        }
        let lists = border_determination(&s, 5, &g, 0, 1.0);
        assert_eq!(lists.len(), 26);
        let find = |o: [i32; 3]| {
            let d = directions().iter().position(|&x| x == o).unwrap();
            lists.iter().find(|l| l.dir == d).unwrap().indices.clone()
        };
        assert_eq!(find([-1, 0, 0]), vec![0, 1, 2]);
        assert_eq!(find([1, 0, 0]), vec![4]);
        assert_eq!(find([-1, -1, 0]), vec![1, 2]);
        assert_eq!(find([-1, -1, -1]), vec![2]);
        assert_eq!(find([1, 1, 1]), Vec::<u32>::new());
        let l = lists.iter().find(|l| l.dir == 0).unwrap();
        assert_eq!(l.link.shift, [8.0, 8.0, 8.0]);
    }
}
