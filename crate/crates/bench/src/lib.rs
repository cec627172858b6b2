//! Setup shared by the kernel benchmarks.

use dpd_core::neighbor::{build_coarse_stencil, build_neighbor_table, expand_fine_stencil, NeighborTable};
use dpd_core::sort::{reorder_particles, CellGrid};
use dpd_core::system::{ParticleStore, SimBox};
use dpd_core::verify::oracle::random_store;

/// A periodic cube of side `l` at density `rho`, reordered, with its table.
pub fn gas(l: f64, rho: f64) -> (SimBox, CellGrid, ParticleStore, NeighborTable) {
    let bx = SimBox::periodic([l; 3]).unwrap();
    let n = (rho * bx.volume()) as usize;
    let s = random_store(&bx, n, 1);
    let mut g = CellGrid::wrap(&bx, 1.3, 2).unwrap();
    let (mut s, ro) = reorder_particles(&s, &g).unwrap();
    g.build_cell_list(&ro.keys).unwrap();
    let f = expand_fine_stencil(&build_coarse_stencil(&g), &g);
    let t = build_neighbor_table(&s, &g, &f, 1.0, 0.3, 128).unwrap();
    s.update_signatures();
    (bx, g, s, t)
}
