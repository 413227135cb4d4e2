//! Tetrahedral and triangle meshes.
//!
//! All coordinates are millimetres. A [`TetMesh`] is validated on construction:
//! indices are checked, negatively oriented tetrahedra are flipped and the oriented
//! boundary surface is extracted once.

pub mod fixtures;
pub mod io;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb, Point, Vector};

/// Volumes below this are treated as degenerate (mm^3).
pub const DEGENERATE_VOLUME: f64 = 1e-12;

/// Signed volume of the tetrahedron (a, b, c, d); positive when (b-a, c-a, d-a) is right-handed.
pub fn signed_volume(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

/// Outward faces of a positively oriented tet, as local corner indices.
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    nodes: Vec<Point>,
    tets: Vec<[usize; 4]>,
    boundary_faces: Vec<[usize; 3]>,
    boundary_owner: Vec<usize>,
}

impl TetMesh {
    /// Builds a mesh, flipping negatively oriented tets. Degenerate tets and faces
    /// shared by more than two tets are rejected.
    pub fn new(nodes: Vec<Point>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        for tet in &tets {
            for &i in tet {
                if i >= nodes.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: nodes.len(),
                    });
                }
            }
        }
        for (t, tet) in tets.iter_mut().enumerate() {
            let v = signed_volume(&nodes[tet[0]], &nodes[tet[1]], &nodes[tet[2]], &nodes[tet[3]]);
            if v.abs() < DEGENERATE_VOLUME {
                return Err(Error::DegenerateTet { tet: t, volume: v });
            }
            if v < 0.0 {
                tet.swap(2, 3);
            }
        }
        let (boundary_faces, boundary_owner) = find_boundary(&tets)?;
        Ok(Self {
            nodes,
            tets,
            boundary_faces,
            boundary_owner,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    /// Outward-oriented boundary triangles as node-index triples.
    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    /// Tet owning each boundary face.
    pub fn boundary_owner(&self) -> &[usize] {
        &self.boundary_owner
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|i| self.nodes[i])
    }

    pub fn tet_volume(&self, t: usize) -> Result<f64> {
        if t >= self.tets.len() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.tets.len(),
            });
        }
        let [a, b, c, d] = self.tet_points(t);
        Ok(signed_volume(&a, &b, &c, &d))
    }

    pub fn tet_centroid(&self, t: usize) -> Point {
        let p = self.tet_points(t);
        Point::from((p[0].coords + p[1].coords + p[2].coords + p[3].coords) / 4.0)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len())
            .map(|t| {
                let [a, b, c, d] = self.tet_points(t);
                signed_volume(&a, &b, &c, &d)
            })
            .sum()
    }

    /// Volume enclosed by the boundary surface (divergence theorem).
    pub fn boundary_volume(&self) -> f64 {
        self.boundary_faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.nodes[i].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Unit outward normal of boundary face `f`.
    pub fn boundary_normal(&self, f: usize) -> Vector {
        let [a, b, c] = self.boundary_faces[f].map(|i| self.nodes[i]);
        geom::triangle_normal(&a, &b, &c).normalize()
    }

    /// Sorted, deduplicated node indices on the boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_faces.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Boundary surface as a compact triangle mesh. Vertex `k` of the result is
    /// node `boundary_nodes()[k]`.
    pub fn extract_boundary(&self) -> TriMesh {
        let ids = self.boundary_nodes();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (k, &i) in ids.iter().enumerate() {
            remap[i] = k;
        }
        let vertices = ids.iter().map(|&i| self.nodes[i]).collect();
        let faces = self.boundary_faces.iter().map(|f| f.map(|i| remap[i])).collect();
        TriMesh::new(vertices, faces).expect("boundary indices are in range")
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.nodes)
    }

    pub fn translated(&self, offset: &Vector) -> TetMesh {
        TetMesh {
            nodes: self.nodes.iter().map(|p| p + offset).collect(),
            tets: self.tets.clone(),
            boundary_faces: self.boundary_faces.clone(),
            boundary_owner: self.boundary_owner.clone(),
        }
    }

    /// Number of connected components under face adjacency of tets.
    pub fn component_count(&self) -> usize {
        component_labels(self).1
    }

    /// Sub-mesh made of the given tets; returns the mesh and, per new node, its old index.
    pub fn submesh(&self, tet_ids: &[usize]) -> Result<(TetMesh, Vec<usize>)> {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut old_ids = Vec::new();
        let mut tets = Vec::with_capacity(tet_ids.len());
        for &t in tet_ids {
            let tet = self.tets[t].map(|i| {
                if remap[i] == usize::MAX {
                    remap[i] = old_ids.len();
                    old_ids.push(i);
                }
                remap[i]
            });
            tets.push(tet);
        }
        let nodes = old_ids.iter().map(|&i| self.nodes[i]).collect();
        Ok((TetMesh::new(nodes, tets)?, old_ids))
    }
}

/// Per-tet component label and the number of components.
pub(crate) fn component_labels(mesh: &TetMesh) -> (Vec<usize>, usize) {
    // tets sharing a node are considered connected
    let mut node_tets: Vec<Vec<usize>> = vec![Vec::new(); mesh.node_count()];
    for (t, tet) in mesh.tets().iter().enumerate() {
        for &i in tet {
            node_tets[i].push(t);
        }
    }
    let mut label = vec![usize::MAX; mesh.tet_count()];
    let mut count = 0;
    for seed in 0..mesh.tet_count() {
        if label[seed] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([seed]);
        label[seed] = count;
        while let Some(t) = queue.pop_front() {
            for &i in &mesh.tets()[t] {
                for &u in &node_tets[i] {
                    if label[u] == usize::MAX {
                        label[u] = count;
                        queue.push_back(u);
                    }
                }
            }
        }
        count += 1;
    }
    (label, count)
}

fn find_boundary(tets: &[[usize; 4]]) -> Result<(Vec<[usize; 3]>, Vec<usize>)> {
    let mut seen: HashMap<[usize; 3], (usize, usize, usize)> = HashMap::with_capacity(tets.len() * 2);
    for (t, tet) in tets.iter().enumerate() {
        for (k, lf) in TET_FACES.iter().enumerate() {
            let mut key = lf.map(|c| tet[c]);
            key.sort_unstable();
            let e = seen.entry(key).or_insert((0, t, k));
            e.0 += 1;
        }
    }
    let mut faces: Vec<(usize, usize, [usize; 3])> = Vec::new();
    for (key, (count, t, k)) in seen {
        match count {
            1 => faces.push((t, k, TET_FACES[k].map(|c| tets[t][c]))),
            2 => {}
            _ => return Err(Error::NonManifold { face: key, count }),
        }
    }
    faces.sort_unstable_by_key(|&(t, k, _)| (t, k));
    Ok((
        faces.iter().map(|f| f.2).collect(),
        faces.iter().map(|f| f.0).collect(),
    ))
}

/// Indexed triangle mesh with shared-edge face adjacency.
#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct TriMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    /// Neighbor across edge (faces[f][k], faces[f][(k+1)%3]).
    adjacency: Vec<[Option<usize>; 3]>,
    non_manifold_edges: usize,
}


impl TriMesh {
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for f in &faces {
            for &i in f {
                if i >= vertices.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: vertices.len(),
                    });
                }
            }
        }
        let mut by_edge: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push((fi, k));
            }
        }
        let mut adjacency = vec![[None; 3]; faces.len()];
        let mut non_manifold_edges = 0;
        for incident in by_edge.values() {
            match incident.as_slice() {
                [(f0, k0), (f1, k1)] => {
                    adjacency[*f0][*k0] = Some(*f1);
                    adjacency[*f1][*k1] = Some(*f0);
                }
                [_] => {}
                _ => non_manifold_edges += 1,
            }
        }
        Ok(Self {
            vertices,
            faces,
            adjacency,
            non_manifold_edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn adjacency(&self) -> &[[Option<usize>; 3]] {
        &self.adjacency
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn non_manifold_edges(&self) -> usize {
        self.non_manifold_edges
    }

    pub fn is_edge_manifold(&self) -> bool {
        self.non_manifold_edges == 0
    }

    pub fn face_points(&self, f: usize) -> [Point; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        geom::triangle_area(&a, &b, &c)
    }

    /// Unit normal following the winding (zero for degenerate faces).
    pub fn face_normal(&self, f: usize) -> Vector {
        let [a, b, c] = self.face_points(f);
        geom::triangle_normal(&a, &b, &c)
            .try_normalize(0.0)
            .unwrap_or_else(Vector::zeros)
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume; meaningful only for closed surfaces.
    pub fn enclosed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Directed boundary edges (following face winding) that have no neighbor.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                if self.adjacency[fi][k].is_none() {
                    out.push((f[k], f[(k + 1) % 3]));
                }
            }
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        self.non_manifold_edges == 0 && self.adjacency.iter().flatten().all(Option::is_some)
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// V - E + F over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &i in f {
                used[i] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Number of edge-connected face components.
    pub fn face_components(&self) -> usize {
        let mut seen = vec![false; self.faces.len()];
        let mut count = 0;
        for s in 0..self.faces.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(f) = stack.pop() {
                for n in self.adjacency[f].iter().flatten() {
                    if !seen[*n] {
                        seen[*n] = true;
                        stack.push(*n);
                    }
                }
            }
        }
        count
    }

    /// Faces reachable from `face` in at most `rings` edge-adjacency hops, `face` first.
    pub fn n_ring(&self, face: usize, rings: usize) -> Vec<usize> {
        let mut dist: HashMap<usize, usize> = HashMap::from([(face, 0)]);
        let mut out = vec![face];
        let mut queue = VecDeque::from([face]);
        while let Some(f) = queue.pop_front() {
            let d = dist[&f];
            if d == rings {
                continue;
            }
            for n in self.adjacency[f].iter().flatten() {
                if !dist.contains_key(n) {
                    dist.insert(*n, d + 1);
                    out.push(*n);
                    queue.push_back(*n);
                }
            }
        }
        out
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tet() -> TetMesh {
        TetMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_tet_volume_is_one_sixth() {
        assert!((unit_tet().tet_volume(0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn coplanar_points_have_zero_volume() {
        let v = signed_volume(
            &Point::new(0.0, 0.0, 0.0),
            &Point::new(1.0, 0.0, 0.0),
            &Point::new(0.0, 1.0, 0.0),
            &Point::new(1.0, 1.0, 0.0),
        );
        assert_eq!(v, 0.0);
        let err = TetMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2, 3]],
        );
        assert!(matches!(err, Err(Error::DegenerateTet { .. })));
    }

    #[test]
    fn tet_volume_index_out_of_range() {
        assert!(matches!(unit_tet().tet_volume(3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn inverted_tet_is_flipped() {
        let m = TetMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1, 3]],
        )
        .unwrap();
        assert!(m.tet_volume(0).unwrap() > 0.0);
    }

    #[test]
    fn single_tet_boundary_is_closed_and_outward() {
        let m = unit_tet();
        let b = m.extract_boundary();
        assert_eq!(b.faces().len(), 4);
        assert!(b.is_closed());
        assert_eq!(b.euler_characteristic(), 2);
        assert!((b.enclosed_volume() - 1.0 / 6.0).abs() < 1e-15);
        let c = m.tet_centroid(0);
        for f in 0..4 {
            let n = m.boundary_normal(f);
            let p = m.nodes()[m.boundary_faces()[f][0]];
            assert!(n.dot(&(p - c)) > 0.0);
        }
    }

    #[test]
    fn non_manifold_tets_are_rejected() {
        let nodes = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(0.0, 0.0, -1.0),
            Point::new(0.0, 0.0, 2.0),
        ];
        let r = TetMesh::new(nodes, vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]]);
        assert!(matches!(r, Err(Error::NonManifold { count: 3, .. })));
    }

    #[test]
    fn n_ring_grows_with_rings() {
        // strip of triangles
        let vertices: Vec<Point> = (0..6)
            .flat_map(|i| [Point::new(i as f64, 0.0, 0.0), Point::new(i as f64, 1.0, 0.0)])
            .collect();
        let mut faces = Vec::new();
        for i in 0..5 {
            let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
        let m = TriMesh::new(vertices, faces).unwrap();
        assert_eq!(m.n_ring(0, 0), vec![0]);
        assert_eq!(m.n_ring(0, 1).len(), 3);
        assert_eq!(m.n_ring(0, 3).len(), 5);
        assert_eq!(m.face_components(), 1);
        assert_eq!(m.boundary_edges().len(), 12);
    }
}
