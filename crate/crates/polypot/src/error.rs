use std::path::PathBuf;

use polypot_core::KernelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolypotError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("face {face} references vertex {index}, but the mesh has {vertices} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertices: usize },
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error("edge ({0}, {1}) is shared by {2} faces, expected 2")]
    NonManifold(usize, usize, usize),
    #[error("inconsistent orientation: {0}")]
    Orientation(String),
    #[error("sphere refinement level {0} exceeds the cap of {max}", max = crate::geometry::MAX_SPHERE_LEVEL)]
    LevelCap(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point lies {distance:.3e} from the boundary, inside the exclusion band {band:.3e}")]
    TooClose { distance: f64, band: f64 },
    #[error("stage {stage}: linear system is numerically singular (condition estimate {condition:.3e})")]
    SingularSystem { stage: usize, condition: f64 },
    #[error("stage {stage}: compatibility violated, right-hand side mean {magnitude:.3e}")]
    Compatibility { stage: usize, magnitude: f64 },
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T, E = PolypotError> = std::result::Result<T, E>;
