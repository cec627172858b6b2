//! Reference implementations and the acceptance checks built on them.

pub mod dd;
pub mod sweep;
pub mod oracle;
pub mod criteria;
