use dpd_core::forces::{
    bond_force_pair, bond_forces, compute_pair_forces, compute_pair_forces_tag_ordered, dpd_pair_force, resolve_bonds,
    BondIndex, TagOrder,
};
use dpd_core::neighbor::{build_coarse_stencil, build_neighbor_table, expand_fine_stencil, NeighborTable};
use dpd_core::rng::PairRandomState;
use dpd_core::sort::{reorder_particles, CellGrid};
use dpd_core::system::{Bond, BondTopology, PairParams, Particle, ParticleStore, SimBox};
use dpd_core::verify::oracle::random_store;
use proptest::prelude::*;

fn params() -> PairParams {
    PairParams::uniform(25.0, 4.5, 1.0, 1.0, 1.0, 0.01).unwrap()
}

fn sorted_gas(l: f64, rho: f64, seed: u32) -> (SimBox, ParticleStore, NeighborTable) {
    let bx = SimBox::periodic([l; 3]).unwrap();
    let s = random_store(&bx, (rho * bx.volume()) as usize, seed);
    let mut g = CellGrid::wrap(&bx, 1.3, 2).unwrap();
    let (mut s, ro) = reorder_particles(&s, &g).unwrap();
    g.build_cell_list(&ro.keys).unwrap();
    let f = expand_fine_stencil(&build_coarse_stencil(&g), &g);
    let t = build_neighbor_table(&s, &g, &f, 1.0, 0.3, 128).unwrap();
    s.update_signatures();
    (bx, s, t)
}

fn two(pi: [f64; 3], pj: [f64; 3], vi: [f64; 3], vj: [f64; 3]) -> ParticleStore {
    let mut s = ParticleStore::with_capacity(2);
    for (t, (coord, veloc)) in [(pi, vi), (pj, vj)].into_iter().enumerate() {
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

#[test]
fn total_pair_force_vanishes() {
    let (bx, mut s, t) = sorted_gas(6.0, 3.0, 1);
    compute_pair_forces(&mut s, &t, &params(), Some(&bx), &PairRandomState::new(2, 3)).unwrap();
    let mut scale = 0.0f64;
    for k in 0..3 {
        let sum: f64 = s.force[k].iter().sum();
        scale = scale.max(s.force[k].iter().map(|f| f.abs()).sum::<f64>());
        assert!(sum.abs() <= 1e-12 * scale, "axis {k}: {sum}");
    }
}

#[test]
fn tag_order_matches_row_order() {
    let (bx, mut a, t) = sorted_gas(6.0, 3.0, 5);
    let mut b = a.clone();
    let st = PairRandomState::new(9, 1);
    compute_pair_forces(&mut a, &t, &params(), Some(&bx), &st).unwrap();
    let order = TagOrder::new(&t, &b);
    assert_eq!(order.nrows(), t.nrows);
    for i in 0..t.nrows {
        let row = order.row(i);
        assert!(row.windows(2).all(|w| b.tag[w[0] as usize] < b.tag[w[1] as usize]));
        let mut want = t.row(i);
        want.sort_unstable();
        let mut got = row.to_vec();
        got.sort_unstable();
        assert_eq!(got, want);
    }
    compute_pair_forces_tag_ordered(&mut b, &order, &params(), Some(&bx), &st).unwrap();
    for k in 0..3 {
        for i in 0..a.len() {
            assert!((a.force[k][i] - b.force[k][i]).abs() <= 1e-12 * a.force[k][i].abs().max(1.0));
        }
    }
}

#[test]
fn tag_order_ignores_storage_order() {
    let (bx, s, t) = sorted_gas(5.0, 3.0, 7);
    let st = PairRandomState::new(1, 1);
    let mut a = s.clone();
    let order = TagOrder::new(&t, &s);
    compute_pair_forces_tag_ordered(&mut a, &order, &params(), Some(&bx), &st).unwrap();
    // rebuild from reversed storage
    let rev: Vec<usize> = (0..s.len()).rev().collect();
    let s2 = s.gather(&rev);
    let mut g = CellGrid::wrap(&bx, 1.3, 2).unwrap();
    let (mut s2, ro) = reorder_particles(&s2, &g).unwrap();
    g.build_cell_list(&ro.keys).unwrap();
    let f = expand_fine_stencil(&build_coarse_stencil(&g), &g);
    let t2 = build_neighbor_table(&s2, &g, &f, 1.0, 0.3, 128).unwrap();
    s2.update_signatures();
    let order = TagOrder::new(&t2, &s2);
    compute_pair_forces_tag_ordered(&mut s2, &order, &params(), Some(&bx), &st).unwrap();
    for i in 0..s2.len() {
        let j = a.tag.iter().position(|&x| x == s2.tag[i]).unwrap();
        for k in 0..3 {
            assert_eq!(a.force[k][j].to_bits(), s2.force[k][i].to_bits());
        }
    }
}

#[test]
fn bonds_pull_both_ends() {
    let bx = SimBox::periodic([4.0; 3]).unwrap();
    let mut s = two([0.2, 0.0, 0.0], [3.6, 0.0, 0.0], [0.0; 3], [0.0; 3]);
    let top = BondTopology::new(vec![Bond {
        i: 0,
        j: 1,
        k: 80.0,
        r0: 0.38,
    }])
    .unwrap();
    let idx = BondIndex::new(&top, 2);
    let list = resolve_bonds(&s, 2, &idx, Some(&bx)).unwrap();
    for k in 0..3 {
        s.force[k].fill(0.0);
    }
    bond_forces(&mut s, &list, Some(&bx));
    // separation 0.6 through the boundary: stretched by 0.22
    let want = 80.0 * 0.22;
    assert!((s.force[0][0] + want).abs() < 1e-12);
    assert!((s.force[0][1] - want).abs() < 1e-12);
    assert!(resolve_bonds(&two([0.0; 3], [1.0; 3], [0.0; 3], [0.0; 3]).gather(&[0]), 1, &idx, None).is_err());
}

#[test]
fn no_force_beyond_cutoff() {
    let s = two([0.0; 3], [1.01, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]);
    let t = dpd_pair_force(0, 1, &s, &params(), None, 1.5).unwrap();
    assert_eq!(t.total(), [0.0; 3]);
}

proptest! {
    #[test]
    fn pair_force_antisymmetric(
        d in prop::array::uniform3(-0.57f64..0.57),
        vi in prop::array::uniform3(-3.0f64..3.0),
        vj in prop::array::uniform3(-3.0f64..3.0),
        xi in -4.0f64..4.0,
    ) {
        prop_assume!(d.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let s = two([1.0; 3], [1.0 + d[0], 1.0 + d[1], 1.0 + d[2]], vi, vj);
        let p = params();
        let a = dpd_pair_force(0, 1, &s, &p, None, xi).unwrap().total();
        let b = dpd_pair_force(1, 0, &s, &p, None, xi).unwrap().total();
        for k in 0..3 {
            prop_assert!((a[k] + b[k]).abs() <= 1e-12 * a[k].abs().max(1.0));
        }
    }

    #[test]
    fn bond_force_antisymmetric(pi in prop::array::uniform3(0.0f64..4.0), pj in prop::array::uniform3(0.0f64..4.0), k in 1.0f64..100.0, r0 in 0.0f64..1.0) {
        let bx = SimBox::periodic([4.0; 3]).unwrap();
        let a = bond_force_pair(pi, pj, k, r0, Some(&bx));
        let b = bond_force_pair(pj, pi, k, r0, Some(&bx));
        for c in 0..3 {
            prop_assert!((a[c] + b[c]).abs() <= 1e-12 * a[c].abs().max(1.0));
        }
    }
}
