use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every stage of the support pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate tetrahedron {tet}: volume {volume:e} mm^3")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("non-manifold tetrahedral connectivity: face {face:?} shared by {count} tetrahedra")]
    NonManifold { face: [usize; 3], count: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown fixture `{0}` (expected box, dome, bridge_slab or t_shape)")]
    UnknownFixture(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh is disconnected: {0} components")]
    Disconnected(usize),

    #[error("linear solve stalled at relative residual {0:e}")]
    Solver(f64),

    #[error("interface node {node}: {message}")]
    Interface { node: usize, message: String },

    #[error("model tetrahedron {tet} has no counterpart in the envelope")]
    Containment { tet: usize },

    #[error("layer {layer}: incompatible interface at node {node}: {message}")]
    Compatibility {
        layer: usize,
        node: usize,
        message: String,
    },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("cut_edge requires opposite field signs, got {0} and {1}")]
    SameSign(f64, f64),

    #[error("missing intermediate artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("external command failed: {0}")]
    External(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
