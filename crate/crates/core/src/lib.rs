//! Slimmed tree-like supports for multi-axis printing on curved layers.
//!
//! The pipeline fits a governing scalar field on a tetrahedral model, finds
//! overhangs under the local printing directions, builds a convex envelope, slices
//! compatible model/support layers, traces a branching skeleton through the
//! support layers, wraps it in a convolution surface and trims the support layers
//! to that solid before emitting contour waypoints.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvh;
pub mod error;
pub mod fields;
pub mod geom;
pub mod implicit;
pub mod linalg;
pub mod mesh;
pub mod overhang_hull;
pub mod pipeline;
pub mod skeleton;
pub mod slicer;
pub mod toolpath;
pub mod trim;

pub use error::{Error, Result};
pub use geom::{Point, Vector};
pub use mesh::{TetMesh, TriMesh};
