//! Stencils and the ordered neighbour table.

pub mod dump;
pub mod stencil;
pub mod table;

pub use stencil::{build_coarse_stencil, expand_fine_stencil, CoarseStencil, FineStencil};
pub use table::{build_neighbor_table, join_core_skin, tile_transpose, Layout, NeighborTable};
