//! Radix sort, Morton codes and cell lists.

pub mod cells;
pub mod morton;
pub mod radix;

pub use cells::{reorder_particles, sort_keys, CellGrid, GridMode, Reorder};
pub use morton::{morton_decode, morton_encode};
pub use radix::radix_sort;
