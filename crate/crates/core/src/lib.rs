pub mod domain;
pub mod engine;
pub mod error;
pub mod fastmath;
pub mod forces;
pub mod harness;
pub mod integrate;
pub mod neighbor;
pub mod rng;
pub mod sort;
pub mod system;
pub mod verify;

pub use error::{DpdError, Result};
