//! Spatial domain decomposition with ghost halos.

pub mod border;
pub mod exchange;
pub mod grid;
pub mod packet;
pub mod transport;

pub use border::{border_determination, SendList};
pub use exchange::{allreduce_sum, exchange_full, exchange_update, migrate_strays, GhostLayout};
pub use grid::{decompose, directions, DomainGrid, Link};
pub use transport::{ChannelTransport, TcpTransport, Transport};
