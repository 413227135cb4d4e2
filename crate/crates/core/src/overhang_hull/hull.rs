//! Incremental 3D convex hull with a scale-relative coplanarity tolerance, and
//! outward offsetting of its face planes.

use std::collections::{HashMap, VecDeque};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point, Vector};
use crate::mesh::{TetMesh, TriMesh};

/// Closed convex polytope with outward triangle faces and their planes.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    mesh: TriMesh,
    /// (unit normal, offset) with `n . x <= offset` inside.
    planes: Vec<(Vector, f64)>,
}

impl ConvexHull {
    fn from_mesh(mesh: TriMesh) -> Self {
        let planes = (0..mesh.faces().len())
            .map(|f| {
                let n = mesh.face_normal(f);
                (n, n.dot(&mesh.vertices()[mesh.faces()[f][0]].coords))
            })
            .collect();
        Self { mesh, planes }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn planes(&self) -> &[(Vector, f64)] {
        &self.planes
    }

    /// Largest plane excess; negative inside, and a lower bound of the true
    /// distance outside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.planes
            .iter()
            .map(|(n, d)| n.dot(&p.coords) - d)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    /// Pushes every face plane outward by `amount` and rebuilds the polytope.
    /// Each input point ends up at least `amount` inside every face plane.
    pub fn inflated(&self, amount: f64) -> Result<ConvexHull> {
        if amount < 0.0 || !amount.is_finite() {
            return Err(Error::InvalidParameter(format!("inflate must be non-negative, got {amount}")));
        }
        if amount == 0.0 {
            return Ok(self.clone());
        }
        // polar duality about an interior point: plane n.x = h maps to n / h
        let n_v = self.mesh.vertices().len() as f64;
        let c = Point::from(self.mesh.vertices().iter().map(|p| p.coords).sum::<Vector>() / n_v);
        let dual: Vec<Point> = self
            .planes
            .iter()
            .map(|(n, d)| Point::from(n / (d - n.dot(&c.coords) + amount)))
            .collect();
        let dual_hull = convex_hull(&dual)?;
        let primal: Vec<Point> = dual_hull
            .planes
            .iter()
            .map(|(m, k)| c + m / *k)
            .collect();
        convex_hull(&primal)
    }
}

/// Convex hull of model nodes and trajectory points, offset outward by `inflate`.
pub fn build_conservative_hull(model: &TetMesh, trajectories: &[Trajectory], inflate: f64) -> Result<ConvexHull> {
    let mut pts: Vec<Point> = model.nodes().to_vec();
    for t in trajectories {
        pts.extend_from_slice(&t.points);
    }
    convex_hull(&pts)?.inflated(inflate)
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vector,
    offset: f64,
    alive: bool,
}

fn make_face(pts: &[Point], v: [usize; 3]) -> Face {
    let [a, b, c] = v.map(|i| pts[i]);
    let n = (b - a).cross(&(c - a));
    let normal = n / n.norm();
    Face {
        v,
        normal,
        offset: normal.dot(&a.coords),
        alive: true,
    }
}

/// Incremental convex hull. Points within `1e-9 * diameter` of the current hull are
/// treated as inside, so coplanar facets stay triangulated by their first points.
pub fn convex_hull(points: &[Point]) -> Result<ConvexHull> {
    if points.len() < 4 {
        return Err(Error::Degenerate(format!("convex hull needs 4 points, got {}", points.len())));
    }
    let bb = Aabb::from_points(points);
    let scale = bb.extent().norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate("convex hull of coincident or non-finite points".into()));
    }
    let eps = 1e-9 * scale;

    // initial simplex from extreme points
    let i0 = (0..points.len())
        .min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))
        .unwrap();
    let i1 = farthest(points, |p| (p - points[i0]).norm());
    let axis = (points[i1] - points[i0]).normalize();
    let i2 = farthest(points, |p| {
        let d = p - points[i0];
        (d - axis * d.dot(&axis)).norm()
    });
    let pn = (points[i1] - points[i0]).cross(&(points[i2] - points[i0]));
    if pn.norm() <= eps * scale {
        return Err(Error::Degenerate("all hull input points are collinear".into()));
    }
    let pn = pn.normalize();
    let i3 = farthest(points, |p| (p - points[i0]).dot(&pn).abs());
    let h = (points[i3] - points[i0]).dot(&pn);
    if h.abs() <= eps {
        return Err(Error::Degenerate("all hull input points are coplanar".into()));
    }

    let mut faces: Vec<Face> = Vec::new();
    let mut edge_face: HashMap<(usize, usize), usize> = HashMap::new();
    let add = |faces: &mut Vec<Face>, edge_face: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
        let id = faces.len();
        faces.push(make_face(points, v));
        for k in 0..3 {
            edge_face.insert((v[k], v[(k + 1) % 3]), id);
        }
    };
    let base = if h > 0.0 { [i0, i2, i1] } else { [i0, i1, i2] };
    add(&mut faces, &mut edge_face, base);
    add(&mut faces, &mut edge_face, [base[1], base[0], i3]);
    add(&mut faces, &mut edge_face, [base[2], base[1], i3]);
    add(&mut faces, &mut edge_face, [base[0], base[2], i3]);

    let mut visible = Vec::new();
    let mut mark: Vec<bool> = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&pi) {
            continue;
        }
        let mut best = (eps, usize::MAX);
        for (fi, f) in faces.iter().enumerate() {
            if f.alive {
                let d = f.normal.dot(&p.coords) - f.offset;
                if d > best.0 {
                    best = (d, fi);
                }
            }
        }
        if best.1 == usize::MAX {
            continue;
        }
        // flood the visible region from the most visible face so it stays connected
        mark.resize(faces.len(), false);
        visible.clear();
        let mut queue = VecDeque::from([best.1]);
        mark[best.1] = true;
        while let Some(fi) = queue.pop_front() {
            visible.push(fi);
            let v = faces[fi].v;
            for k in 0..3 {
                let nb = edge_face[&(v[(k + 1) % 3], v[k])];
                if !mark[nb] && faces[nb].normal.dot(&p.coords) - faces[nb].offset > eps {
                    mark[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        let mut horizon = Vec::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                if !mark[edge_face[&(b, a)]] {
                    horizon.push((a, b));
                }
            }
        }
        for &fi in &visible {
            faces[fi].alive = false;
            mark[fi] = false;
            let v = faces[fi].v;
            for k in 0..3 {
                edge_face.remove(&(v[k], v[(k + 1) % 3]));
            }
        }
        for (a, b) in horizon {
            add(&mut faces, &mut edge_face, [a, b, pi]);
        }
    }

    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    let mut tris = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        tris.push(f.v.map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = vertices.len();
                vertices.push(points[i]);
            }
            remap[i]
        }));
    }
    Ok(ConvexHull::from_mesh(TriMesh::new(vertices, tris)?))
}

fn farthest(points: &[Point], key: impl Fn(&Point) -> f64) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, p) in points.iter().enumerate() {
        let k = key(p);
        if k > best.0 {
            best = (k, i);
        }
    }
    best.1
}
