use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine and its harness.
#[derive(Debug, Error)]
pub enum DpdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simulation box has zero volume")]
    ZeroVolume,

    #[error("density {density} in volume {volume} yields an empty system")]
    EmptySystem { density: f64, volume: f64 },

    #[error("chain of {beads} beads (contour {contour}) does not fit in a box of minimum length {min_length}")]
    ChainTooLong {
        beads: usize,
        contour: f64,
        min_length: f64,
    },

    #[error("lattice coordinate {coord} exceeds {bits} bits per axis")]
    MortonRange { coord: u32, bits: u32 },

    #[error("particle {tag} at {pos:?} lies outside the cell grid (missed migration?)")]
    OutsideGrid { tag: u32, pos: [f64; 3] },

    #[error("cell keys are not sorted at index {index}")]
    UnsortedCells { index: usize },

    #[error("neighbor row of particle {tag} overflows: {count} entries > capacity {capacity}")]
    RowOverflow {
        tag: u32,
        count: usize,
        capacity: usize,
    },

    #[error("coincident particles {tag_i} and {tag_j}")]
    CoincidentParticles { tag_i: u32, tag_j: u32 },

    #[error("bond {tag_i}-{tag_j} has no visible endpoint near particle {tag_i}")]
    MissingBondEndpoint { tag_i: u32, tag_j: u32 },

    #[error("non-finite state for particle {tag}")]
    NonFinite { tag: u32 },

    #[error("particle {tag} moved beyond a wall by more than one box length")]
    BeyondReflection { tag: u32 },

    #[error("domain slab along axis {axis} is {slab}, thinner than cutoff+skin {required}")]
    SlabTooThin {
        axis: usize,
        slab: f64,
        required: f64,
    },

    #[error("particle {tag} moved more than one domain slab between rebuilds")]
    StrayTooFar { tag: u32 },

    #[error("ghost protocol desync from rank {src}: expected {expected} particles, got {got}")]
    ProtocolDesync {
        src: usize,
        expected: usize,
        got: usize,
    },

    #[error("malformed packet: {0}")]
    Packet(String),

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<DpdError>,
    },
}

impl DpdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DpdError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(self, step: u64) -> Self {
        match self {
            e @ DpdError::AtStep { .. } => e,
            e => DpdError::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Short category string used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            DpdError::Config(_) | DpdError::InvalidInput(_) => "config",
            DpdError::Io { .. } => "io",
            DpdError::Transport(_) | DpdError::Packet(_) | DpdError::ProtocolDesync { .. } => {
                "communication"
            }
            DpdError::AtStep { source, .. } => source.category(),
            _ => "simulation",
        }
    }
}

pub type Result<T, E = DpdError> = std::result::Result<T, E>;
