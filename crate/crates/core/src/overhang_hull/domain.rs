//! Envelope = model + support: geometric identification of model tets inside an
//! envelope mesh, hull clipping of lattice envelopes, and mesh merging.

use std::collections::HashMap;

use super::ConvexHull;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{component_labels, TetMesh};

/// Position tolerance for identifying nodes of different meshes.
pub const MATCH_TOLERANCE: f64 = 1e-6;

/// Spatial hash of node positions for tolerance matching.
struct PointIndex {
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl PointIndex {
    const CELL: f64 = 1e-4;

    fn key(p: &Point) -> [i64; 3] {
        [p.x, p.y, p.z].map(|c| (c / Self::CELL).floor() as i64)
    }

    fn new(points: &[Point]) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p)).or_default().push(i);
        }
        Self { cells }
    }

    /// Lowest-index point within `MATCH_TOLERANCE` of `p`.
    fn find(&self, points: &[Point], p: &Point) -> Option<usize> {
        let k = Self::key(p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &i in ids {
                            if (points[i] - p).norm() <= MATCH_TOLERANCE && best.is_none_or(|b| i < b) {
                                best = Some(i);
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Envelope tets split into those identified with model tets and the support rest.
#[derive(Debug, Clone)]
pub struct SupportDomain {
    pub envelope: TetMesh,
    /// Envelope tet of each model tet.
    pub model_tet_ids: Vec<usize>,
    /// Remaining envelope tets, ascending.
    pub support_tet_ids: Vec<usize>,
    /// Envelope node of each model node.
    pub node_map: Vec<usize>,
    /// (model boundary node, envelope node), ascending by model node.
    pub interface_map: Vec<(usize, usize)>,
}

impl SupportDomain {
    /// Support tets as a mesh of their own; also returns the envelope node of each
    /// support node.
    pub fn support_mesh(&self) -> Result<(TetMesh, Vec<usize>)> {
        self.envelope.submesh(&self.support_tet_ids)
    }

    /// (support node, model node) pairs for support nodes on the model boundary.
    pub fn support_interface(&self, support_envelope_ids: &[usize]) -> Vec<(usize, usize)> {
        let mut env_to_model = HashMap::with_capacity(self.interface_map.len());
        for &(m, e) in &self.interface_map {
            env_to_model.insert(e, m);
        }
        support_envelope_ids
            .iter()
            .enumerate()
            .filter_map(|(s, e)| env_to_model.get(e).map(|&m| (s, m)))
            .collect()
    }
}

/// Identifies every model tet with an envelope tet by node positions. Node order
/// of the envelope is irrelevant.
pub fn assemble_support_domain(model: &TetMesh, envelope: &TetMesh) -> Result<SupportDomain> {
    let index = PointIndex::new(envelope.nodes());
    let node_map: Vec<Option<usize>> = model
        .nodes()
        .iter()
        .map(|p| index.find(envelope.nodes(), p))
        .collect();
    let mut tet_lookup: HashMap<[usize; 4], usize> = HashMap::with_capacity(envelope.tet_count());
    for (t, tet) in envelope.tets().iter().enumerate() {
        let mut k = *tet;
        k.sort_unstable();
        tet_lookup.insert(k, t);
    }
    let mut is_model = vec![false; envelope.tet_count()];
    let mut model_tet_ids = Vec::with_capacity(model.tet_count());
    for (t, tet) in model.tets().iter().enumerate() {
        let mut key = [0usize; 4];
        for k in 0..4 {
            key[k] = node_map[tet[k]].ok_or(Error::Containment { tet: t })?;
        }
        key.sort_unstable();
        let e = *tet_lookup.get(&key).ok_or(Error::Containment { tet: t })?;
        if is_model[e] {
            return Err(Error::Containment { tet: t });
        }
        is_model[e] = true;
        model_tet_ids.push(e);
    }
    let support_tet_ids = (0..envelope.tet_count()).filter(|&t| !is_model[t]).collect();
    // every node is referenced by a tet, so all are matched by now
    let node_map: Vec<usize> = node_map.into_iter().map(|n| n.unwrap_or(usize::MAX)).collect();
    let interface_map = model.boundary_nodes().into_iter().map(|m| (m, node_map[m])).collect();
    Ok(SupportDomain {
        envelope: envelope.clone(),
        model_tet_ids,
        support_tet_ids,
        node_map,
        interface_map,
    })
}

/// Restricts a conforming envelope lattice to the tets whose centroid lies inside
/// the hull, always keeping the tets flagged in `keep`. Support pieces cut off from
/// every kept tet are discarded.
pub fn clip_to_hull(lattice: &TetMesh, hull: &ConvexHull, keep: &[bool]) -> Result<TetMesh> {
    let selected: Vec<usize> = (0..lattice.tet_count())
        .filter(|&t| keep[t] || hull.contains(&lattice.tet_centroid(t), 1e-9))
        .collect();
    let (clipped, _) = lattice.submesh(&selected)?;
    let (labels, count) = component_labels(&clipped);
    let mut anchored = vec![false; count];
    for (i, &t) in selected.iter().enumerate() {
        if keep[t] {
            anchored[labels[i]] = true;
        }
    }
    if anchored.iter().all(|&a| a) {
        return Ok(clipped);
    }
    let dropped = selected.iter().enumerate().filter(|(i, _)| !anchored[labels[*i]]).count();
    log::warn!("dropping {dropped} envelope tets not connected to the model");
    let kept: Vec<usize> = selected
        .iter()
        .enumerate()
        .filter(|(i, _)| anchored[labels[*i]])
        .map(|(_, &t)| t)
        .collect();
    Ok(lattice.submesh(&kept)?.0)
}

/// Union of two tet meshes, welding nodes that coincide within tolerance.
pub fn merge_meshes(a: &TetMesh, b: &TetMesh) -> Result<TetMesh> {
    let index = PointIndex::new(a.nodes());
    let mut nodes = a.nodes().to_vec();
    let remap: Vec<usize> = b
        .nodes()
        .iter()
        .map(|p| {
            index.find(a.nodes(), p).unwrap_or_else(|| {
                nodes.push(*p);
                nodes.len() - 1
            })
        })
        .collect();
    let mut tets = a.tets().to_vec();
    tets.extend(b.tets().iter().map(|t| t.map(|i| remap[i])));
    TetMesh::new(nodes, tets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::Fixture;

    #[test]
    fn self_envelope_has_no_support() {
        let m = crate::mesh::fixtures::make_fixture("box", &[]).unwrap();
        let d = assemble_support_domain(&m, &m).unwrap();
        assert!(d.support_tet_ids.is_empty());
        assert!(d.interface_map.iter().all(|&(a, b)| a == b));
    }

    #[test]
    fn padded_box_partitions_envelope() {
        let f = Fixture::new("box").unwrap().set("pad", 2.5).unwrap().build().unwrap();
        let d = assemble_support_domain(&f.model, &f.envelope).unwrap();
        assert_eq!(d.support_tet_ids.len(), f.envelope.tet_count() - f.model.tet_count());
    }

    #[test]
    fn missing_model_tet_is_named() {
        let f = Fixture::new("t_shape").unwrap().build().unwrap();
        let small = crate::mesh::fixtures::make_fixture("box", &[]).unwrap();
        match assemble_support_domain(&f.model, &small) {
            Err(Error::Containment { .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
