//! Zero level set of the implicit solid by marching tetrahedra over a Kuhn-split
//! sampling lattice that encloses the solid with one cell of margin.

use std::collections::HashMap;

use super::ImplicitSolid;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::TriMesh;

const KUHN_PATHS: [[usize; 2]; 6] = [[1, 3], [1, 5], [2, 3], [2, 6], [4, 5], [4, 6]];

/// Triangulated boundary of `F >= 0`, wound outward. Linear interpolation of the
/// sampled field places vertices on lattice edges.
pub fn polygonize(solid: &ImplicitSolid, cell: f64) -> Result<TriMesh> {
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(Error::InvalidParameter(format!("cell size must be positive, got {cell}")));
    }
    if solid.is_empty() {
        return Ok(TriMesh::default());
    }
    let b = solid.bounds().inflated(cell);
    let n: [usize; 3] = [0, 1, 2].map(|k| ((b.max[k] - b.min[k]) / cell).ceil() as usize + 1);
    let total = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    if total > 50_000_000 {
        return Err(Error::InvalidParameter(format!("{total} lattice samples; increase the cell size")));
    }
    let id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;
    let pos = |i: usize, j: usize, k: usize| {
        Point::new(
            b.min.x + i as f64 * cell,
            b.min.y + j as f64 * cell,
            b.min.z + k as f64 * cell,
        )
    };
    let mut values = vec![0.0; total];
    let mut points = vec![Point::origin(); total];
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                let p = pos(i, j, k);
                points[id(i, j, k)] = p;
                // outside is "above": march on -F so faces point away from the solid
                values[id(i, j, k)] = -solid.field_value(&p);
            }
        }
    }

    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut vertex_on = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *edge_vertex.entry(key).or_insert_with(|| {
            let (p, q) = key;
            let t = values[p] / (values[p] - values[q]);
            vertices.push(points[p] + (points[q] - points[p]) * t);
            vertices.len() - 1
        })
    };
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let corner = |c: usize| id(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                let cvals: [f64; 8] = std::array::from_fn(|c| values[corner(c)]);
                if cvals.iter().all(|&v| v >= 0.0) || cvals.iter().all(|&v| v < 0.0) {
                    continue;
                }
                for [a, bb] in KUHN_PATHS {
                    let tet = [corner(0), corner(a), corner(bb), corner(7)];
                    let above: Vec<usize> = tet.iter().copied().filter(|&v| values[v] >= 0.0).collect();
                    let below: Vec<usize> = tet.iter().copied().filter(|&v| values[v] < 0.0).collect();
                    let tris: Vec<[usize; 3]> = match (above.len(), below.len()) {
                        (1, 3) | (3, 1) => {
                            let (lone, rest) = if above.len() == 1 { (above[0], &below) } else { (below[0], &above) };
                            vec![[
                                vertex_on(lone, rest[0], &mut vertices),
                                vertex_on(lone, rest[1], &mut vertices),
                                vertex_on(lone, rest[2], &mut vertices),
                            ]]
                        }
                        (2, 2) => {
                            let q = [
                                vertex_on(above[0], below[0], &mut vertices),
                                vertex_on(above[0], below[1], &mut vertices),
                                vertex_on(above[1], below[1], &mut vertices),
                                vertex_on(above[1], below[0], &mut vertices),
                            ];
                            vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
                        }
                        _ => Vec::new(),
                    };
                    // orient along the tet's gradient of -F (outward)
                    let tp = tet.map(|v| points[v]);
                    let grad = crate::fields::shape_gradients(&tp)
                        .map(|g| (0..4).map(|m| g[m] * values[tet[m]]).sum::<crate::geom::Vector>())
                        .unwrap_or_else(|_| crate::geom::Vector::zeros());
                    for t in tris {
                        let [p0, p1, p2] = t.map(|v| vertices[v]);
                        let nrm = (p1 - p0).cross(&(p2 - p0));
                        faces.push(if nrm.dot(&grad) < 0.0 { [t[0], t[2], t[1]] } else { t });
                    }
                }
            }
        }
    }
    TriMesh::new(vertices, faces)
}
