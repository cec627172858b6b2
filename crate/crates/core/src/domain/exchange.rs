//! Ghost exchange, stray migration and reductions over a [`Transport`].
//!
//! Every rank walks the 26 directions in the same order, so the messages on
//! each ordered rank pair are matched by position.

use super::border::SendList;
use super::grid::{directions, DomainGrid};
use super::packet::{decode_full, decode_stray, decode_update, encode_full, encode_stray, encode_update};
use super::transport::Transport;
use crate::error::{DpdError, Result};
use crate::system::{Particle, ParticleStore};

/// Where received ghosts came from and where they are stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GhostLayout {
    /// `(direction, source rank, count)` in receive order.
    pub recv: Vec<(usize, usize, usize)>,
    /// Receive index to storage index.
    pub perm: Vec<usize>,
}

impl GhostLayout {
    pub fn n_ghosts(&self) -> usize {
        self.perm.len()
    }
}

fn recv_plan(grid: &DomainGrid, rank: usize) -> Vec<(usize, usize)> {
    directions()
        .iter()
        .enumerate()
        .filter_map(|(d, &o)| grid.neighbor(rank, o.map(|x| -x)).map(|l| (d, l.rank)))
        .collect()
}

/// Send full ghost records along every list, then receive. Returns the
/// ghosts in receive order, each with the direction it travelled, and the
/// receive plan (storage permutation left empty).
pub fn exchange_full(
    store: &ParticleStore,
    sends: &[SendList],
    grid: &DomainGrid,
    t: &dyn Transport,
    step: u64,
) -> Result<(Vec<(Particle, [i32; 3])>, GhostLayout)> {
    for s in sends {
        t.send(s.link.rank, encode_full(store, &s.indices, s.link.shift, step))?;
    }
    let dirs = directions();
    let mut ghosts = Vec::new();
    let mut layout = GhostLayout::default();
    for (d, src) in recv_plan(grid, t.rank()) {
        let got = decode_full(&t.recv(src)?, step)?;
        layout.recv.push((d, src, got.len()));
        ghosts.extend(got.into_iter().map(|p| (p, dirs[d])));
    }
    Ok((ghosts, layout))
}

/// Refresh ghost positions and velocities in place.
pub fn exchange_update(
    store: &mut ParticleStore,
    sends: &[SendList],
    layout: &GhostLayout,
    t: &dyn Transport,
    step: u64,
) -> Result<()> {
    for s in sends {
        t.send(s.link.rank, encode_update(store, &s.indices, s.link.shift, step))?;
    }
    let mut k = 0;
    for &(_, src, count) in &layout.recv {
        let recs = decode_update(&t.recv(src)?, step)?;
        if recs.len() != count {
            return Err(DpdError::ProtocolDesync {
                src,
                expected: count,
                got: recs.len(),
            });
        }
        for r in recs {
            let i = layout.perm[k];
            for c in 0..3 {
                store.coord[c][i] = r.coord[c];
                store.veloc[c][i] = r.veloc[c];
            }
            k += 1;
        }
    }
    Ok(())
}

/// Hand locals that left the slab to their new owners and take in arrivals.
/// `store` must hold locals only. Arrivals are appended in ascending source
/// rank order.
pub fn migrate_strays(store: &mut ParticleStore, grid: &DomainGrid, t: &dyn Transport, step: u64) -> Result<usize> {
    let me = t.rank();
    let peers = grid.neighbor_ranks(me);
    let mut outgoing: Vec<Vec<Particle>> = vec![Vec::new(); peers.len()];
    let mut keep = vec![true; store.len()];
    let mut n_out = 0;
    for (i, kept) in keep.iter_mut().enumerate() {
        let owner = grid.owner(store.pos(i));
        if owner == me {
            continue;
        }
        let slot = peers
            .binary_search(&owner)
            .map_err(|_| DpdError::StrayTooFar { tag: store.tag[i] })?;
        outgoing[slot].push(store.get(i));
        *kept = false;
        n_out += 1;
    }
    for (p, out) in peers.iter().zip(&outgoing) {
        t.send(*p, encode_stray(out, step))?;
    }
    if n_out > 0 {
        store.retain_mask(&keep);
    }
    for &p in &peers {
        for q in decode_stray(&t.recv(p)?, step)? {
            store.push(q);
        }
    }
    Ok(n_out)
}

/// Element-wise sum across ranks, accumulated on rank 0 in rank order and
/// broadcast back.
pub fn allreduce_sum(values: &[f64], t: &dyn Transport) -> Result<Vec<f64>> {
    let enc = |v: &[f64]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
    let dec = |b: &[u8]| -> Result<Vec<f64>> {
        if b.len() != values.len() * 8 {
            return Err(DpdError::Packet(format!("reduction of {} bytes, expected {}", b.len(), values.len() * 8)));
        }
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    if t.size() == 1 {
        return Ok(values.to_vec());
    }
    if t.rank() == 0 {
        let mut acc = values.to_vec();
        for r in 1..t.size() {
            for (a, x) in acc.iter_mut().zip(dec(&t.recv(r)?)?) {
                *a += x;
            }
        }
        for r in 1..t.size() {
            t.send(r, enc(&acc))?;
        }
        Ok(acc)
    } else {
        t.send(0, enc(values))?;
        dec(&t.recv(0)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::border::border_determination;
    use crate::domain::grid::decompose;
    use crate::domain::transport::ChannelTransport;
    use crate::system::SimBox;

    fn p(tag: u32, x: [f64; 3]) -> Particle {
        Particle {
            tag,
            species: 0,
            molecule: 0,
            coord: x,
            veloc: [tag as f64, 0.0, 0.0],
            force: [0.0; 3],
        }
    }

    #[test]
    fn reduction_in_rank_order() {
        let mesh = ChannelTransport::mesh(4);
        let out: Vec<Vec<f64>> = std::thread::scope(|s| {
            let hs: Vec<_> = mesh
                .into_iter()
                .map(|t| s.spawn(move || allreduce_sum(&[t.rank() as f64, 1.0], &t).unwrap()))
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for v in out {
            assert_eq!(v, vec![6.0, 4.0]);
        }
    }

    #[test]
    fn ghosts_and_strays_between_two_slabs() {
        let bx = SimBox::periodic([8.0, 4.0, 4.0]).unwrap();
        let g = decompose(&bx, [2, 1, 1], 1.0).unwrap();
        let mesh = ChannelTransport::mesh(2);
        let res: Vec<(Vec<u32>, Vec<(u32, [f64; 3])>)> = std::thread::scope(|s| {
            let hs: Vec<_> = mesh
                .into_iter()
                .map(|t| {
                    let g = &g;
                    s.spawn(move || {
                        let mut st = ParticleStore::default();
                        if t.rank() == 0 {
                            st.push(p(0, [0.5, 2.0, 2.0]));
                            st.push(p(1, [2.0, 2.0, 2.0]));
                            st.push(p(2, [4.2, 2.0, 2.0]));
                        } else {
                            st.push(p(3, [7.5, 2.0, 2.0]));
                        }
                        migrate_strays(&mut st, g, &t, 1).unwrap();
                        let sends = border_determination(&st, st.len(), g, t.rank(), 1.0);
                        let (ghosts, _) = exchange_full(&st, &sends, g, &t, 1).unwrap();
                        let mut gl: Vec<(u32, [f64; 3])> = ghosts.iter().map(|(q, _)| (q.tag, q.coord)).collect();
                        gl.sort_by(|a, b| a.0.cmp(&b.0).then(a.1[0].total_cmp(&b.1[0])));
                        gl.dedup();
                        (st.tag.clone(), gl)
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(res[0].0, vec![0, 1]);
        assert_eq!(res[1].0, vec![3, 2]);
        assert_eq!(res[0].1, vec![(2, [4.2, 2.0, 2.0]), (3, [-0.5, 2.0, 2.0])]);
        assert_eq!(res[1].1, vec![(0, [8.5, 2.0, 2.0])]);
    }

    #[test]
    fn stray_too_far() {
        let bx = SimBox::walled([12.0, 4.0, 4.0]).unwrap();
        let g = decompose(&bx, [3, 1, 1], 1.0).unwrap();
        let mesh = ChannelTransport::mesh(3);
        let r: Vec<Result<usize>> = std::thread::scope(|s| {
            let hs: Vec<_> = mesh
                .into_iter()
                .map(|t| {
                    let g = &g;
                    s.spawn(move || {
                        let mut st = ParticleStore::default();
                        if t.rank() == 0 {
                            st.push(p(7, [11.0, 2.0, 2.0]));
                        }
                        migrate_strays(&mut st, g, &t, 1)
                    })
                })
                .collect();
            // rank 0 fails before sending; the others block on it, so only join rank 0.
            let mut it = hs.into_iter();
            let first = it.next().unwrap().join().unwrap();
            drop(it);
            vec![first]
        });
        assert!(matches!(r[0], Err(DpdError::StrayTooFar { tag: 7 })));
    }
}
