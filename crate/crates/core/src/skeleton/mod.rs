//! Tree skeleton of the support: leaves at overhang vertices, traced down through
//! the support layers with host/follower merging.

mod io;
mod trace;

pub use io::{format_skel, load_skel, parse_skel, save_skel};
pub(crate) use trace::trace_all;
pub use trace::{seed_leaves, trace_layer, trace_tree, ActivePoint, LayerTargets, Seeds, TraceConfig, TraceStats};

use crate::geom::{Point, Vector};

/// Layer index of the platform.
pub const PLATFORM_LAYER: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Leaf,
    Internal,
    Root,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonNode {
    pub position: Point,
    pub layer: i64,
    pub branch_count: u64,
    pub kind: NodeKind,
    /// Local downward printing direction (-d_p) where the node sits. Not persisted.
    pub down_dir: Option<Vector>,
    /// Field value at the node. Not persisted.
    pub field_value: Option<f64>,
}

/// Forest of edges pointing toward the platform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkeletonGraph {
    pub nodes: Vec<SkeletonNode>,
    /// (upper node, lower node).
    pub edges: Vec<(usize, usize)>,
}

impl SkeletonGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn add_node(&mut self, position: Point, layer: i64, count: u64, down: Option<Vector>, field: Option<f64>) -> usize {
        self.nodes.push(SkeletonNode {
            position,
            layer,
            branch_count: count,
            kind: NodeKind::Internal,
            down_dir: down,
            field_value: field,
        });
        self.nodes.len() - 1
    }

    /// Recomputes node kinds from connectivity: no in-edge means leaf, no out-edge root.
    pub fn classify(&mut self) {
        let mut has_in = vec![false; self.nodes.len()];
        let mut has_out = vec![false; self.nodes.len()];
        for &(a, b) in &self.edges {
            has_out[a] = true;
            has_in[b] = true;
        }
        for (i, n) in self.nodes.iter_mut().enumerate() {
            n.kind = match (has_in[i], has_out[i]) {
                (false, _) => NodeKind::Leaf,
                (true, false) => NodeKind::Root,
                (true, true) => NodeKind::Internal,
            };
        }
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Outgoing edge of each node, if any.
    pub fn out_edges(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        for (e, &(a, _)) in self.edges.iter().enumerate() {
            out[a] = Some(e);
        }
        out
    }

    /// Incoming edges per node.
    pub fn in_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (e, &(_, b)) in self.edges.iter().enumerate() {
            inc[b].push(e);
        }
        inc
    }
}
