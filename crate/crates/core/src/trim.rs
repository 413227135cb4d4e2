//! Slimming of support layers: every triangle is classified by how many of its
//! corners lie strictly inside the implicit solid and cut along `F = 0`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::implicit::ImplicitSolid;
use crate::mesh::TriMesh;
use crate::slicer::{Layer, LayerStack};

/// Field-evaluation budget of [`cut_edge`].
pub const CUT_MAX_EVALS: usize = 50;

/// Cap on the per-face split count of [`refine_surface`].
const MAX_REFINE: usize = 64;

/// Support layer restricted to the solid.
#[derive(Debug, Clone)]
pub struct TrimmedLayer {
    pub surface: TriMesh,
    pub index: usize,
    pub iso_value: f64,
    /// Face of the input layer each output face was cut from.
    pub source_faces: Vec<usize>,
    pub input_area: f64,
    pub input_faces: usize,
}

impl TrimmedLayer {
    pub fn area(&self) -> f64 {
        self.surface.area()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }
}

/// Number of strictly positive values; zero counts as outside.
pub fn classify_face(values: [f64; 3]) -> usize {
    values.iter().filter(|&&v| v > 0.0).count()
}

/// Point on `[p_a, p_b]` where the field vanishes, by Illinois-modified regula falsi
/// down to `|F| < 1e-6 C`. Falls back to linear interpolation of the end values
/// when the evaluation budget runs out.
pub fn cut_edge(solid: &ImplicitSolid, pa: &Point, fa: f64, pb: &Point, fb: f64) -> Result<Point> {
    if !(fa * fb < 0.0) {
        return Err(Error::SameSign(fa, fb));
    }
    let tol = 1e-6 * solid.iso();
    let at = |t: f64| pa + (pb - pa) * t;
    let (mut t0, mut f0, mut t1, mut f1) = (0.0, fa, 1.0, fb);
    let mut side = 0i8;
    for _ in 0..CUT_MAX_EVALS {
        let t = (t0 * f1 - t1 * f0) / (f1 - f0);
        let ft = solid.field_value(&at(t));
        if ft.abs() < tol {
            return Ok(at(t));
        }
        if (ft > 0.0) == (f0 > 0.0) {
            t0 = t;
            f0 = ft;
            if side == -1 {
                f1 *= 0.5;
            }
            side = -1;
        } else {
            t1 = t;
            f1 = ft;
            if side == 1 {
                f0 *= 0.5;
            }
            side = 1;
        }
    }
    log::debug!("edge cut did not converge; using linear interpolation");
    Ok(at(fa / (fa - fb)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    Original(usize),
    Cut(usize, usize),
}

/// Splits every face into `k x k` similar triangles, with `k` chosen so that no
/// edge is longer than `max_edge`. Points on shared edges are shared, so the result
/// stays conforming. Also returns the input face of every output face.
pub fn refine_surface(surface: &TriMesh, max_edge: f64) -> Result<(TriMesh, Vec<usize>)> {
    if !(max_edge > 0.0) {
        return Err(Error::InvalidParameter(format!("refinement edge length must be positive, got {max_edge}")));
    }
    let verts = surface.vertices();
    let longest = (0..surface.faces().len())
        .flat_map(|f| {
            let p = surface.face_points(f);
            (0..3).map(move |k| (p[(k + 1) % 3] - p[k]).norm())
        })
        .fold(0.0, f64::max);
    let k = ((longest / max_edge).ceil() as usize).clamp(1, MAX_REFINE);
    if k == 1 {
        return Ok((surface.clone(), (0..surface.faces().len()).collect()));
    }
    let mut out: Vec<Point> = verts.to_vec();
    let mut on_edge: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut faces = Vec::with_capacity(surface.faces().len() * k * k);
    let mut parent = Vec::with_capacity(faces.capacity());
    for (f, &[a, b, c]) in surface.faces().iter().enumerate() {
        let (pa, pb, pc) = (verts[a], verts[b], verts[c]);
        // lattice point a + i/k (b - a) + j/k (c - a)
        let mut ids = vec![usize::MAX; (k + 1) * (k + 1)];
        let mut edge_point = |u: usize, v: usize, step: usize, out: &mut Vec<Point>| -> usize {
            let key = if u < v { (u, v, step) } else { (v, u, k - step) };
            *on_edge.entry(key).or_insert_with(|| {
                out.push(verts[key.0] + (verts[key.1] - verts[key.0]) * (key.2 as f64 / k as f64));
                out.len() - 1
            })
        };
        for j in 0..=k {
            for i in 0..=k - j {
                let id = match (i, j) {
                    (0, 0) => a,
                    (i, 0) if i == k => b,
                    (0, j) if j == k => c,
                    (i, 0) => edge_point(a, b, i, &mut out),
                    (0, j) => edge_point(a, c, j, &mut out),
                    (i, j) if i + j == k => edge_point(b, c, j, &mut out),
                    (i, j) => {
                        out.push(pa + (pb - pa) * (i as f64 / k as f64) + (pc - pa) * (j as f64 / k as f64));
                        out.len() - 1
                    }
                };
                ids[j * (k + 1) + i] = id;
            }
        }
        let at = |i: usize, j: usize| ids[j * (k + 1) + i];
        for j in 0..k {
            for i in 0..k - j {
                faces.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
                parent.push(f);
                if i + j + 2 <= k {
                    faces.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                    parent.push(f);
                }
            }
        }
    }
    Ok((TriMesh::new(out, faces)?, parent))
}

/// Longest face edge [`trim_layer`] allows: the zero-level radius of the thinnest
/// strut, so that every strut cross-section contains layer vertices.
pub fn trim_edge_length(solid: &ImplicitSolid) -> Option<f64> {
    solid.thinnest_strut()
}

/// Cuts one layer against the solid, after refining it where the solid reaches it
/// so that struts thinner than the layer faces are not lost between vertices.
pub fn trim_layer(layer: &Layer, solid: &ImplicitSolid) -> Result<TrimmedLayer> {
    let refine = trim_edge_length(solid).filter(|_| solid.bounds().intersects(&layer.surface.bounds()));
    let Some(h) = refine else {
        return trim_surface(&layer.surface, solid, layer.index, layer.iso_value);
    };
    let (surface, parent) = refine_surface(&layer.surface, h)?;
    let mut t = trim_surface(&surface, solid, layer.index, layer.iso_value)?;
    for f in &mut t.source_faces {
        *f = parent[*f];
    }
    t.input_area = layer.surface.area();
    t.input_faces = layer.surface.faces().len();
    Ok(t)
}

/// Four-case trim of the faces as given.
pub fn trim_surface(surface: &TriMesh, solid: &ImplicitSolid, index: usize, iso_value: f64) -> Result<TrimmedLayer> {
    let verts = surface.vertices();
    let values: Vec<f64> = verts.iter().map(|p| solid.field_value(p)).collect();
    let mut ids: HashMap<VertexKey, usize> = HashMap::new();
    let mut out_vertices: Vec<Point> = Vec::new();
    let mut out_faces: Vec<[usize; 3]> = Vec::new();
    let mut source_faces = Vec::new();

    let mut vertex = |key: VertexKey, out_vertices: &mut Vec<Point>| -> Result<usize> {
        if let Some(&i) = ids.get(&key) {
            return Ok(i);
        }
        let p = match key {
            VertexKey::Original(v) => verts[v],
            VertexKey::Cut(a, b) => cut_edge(solid, &verts[a], values[a], &verts[b], values[b])?,
        };
        out_vertices.push(p);
        ids.insert(key, out_vertices.len() - 1);
        Ok(out_vertices.len() - 1)
    };
    // crossing from inside vertex `a` to outside vertex `b`; a zero end is its own cut
    let cut_key = |a: usize, b: usize| {
        if values[b] == 0.0 {
            VertexKey::Original(b)
        } else {
            VertexKey::Cut(a.min(b), a.max(b))
        }
    };

    for (f, face) in surface.faces().iter().enumerate() {
        let fv = face.map(|v| values[v]);
        let n = classify_face(fv);
        let tris: Vec<[VertexKey; 3]> = match n {
            0 => continue,
            3 => vec![face.map(VertexKey::Original)],
            1 => {
                let k = (0..3).find(|&k| fv[k] > 0.0).unwrap();
                let (a, b, c) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
                vec![[VertexKey::Original(a), cut_key(a, b), cut_key(a, c)]]
            }
            _ => {
                let k = (0..3).find(|&k| fv[k] <= 0.0).unwrap();
                let (c, a, b) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
                // quad a -> b -> x_bc -> x_ac, split along a diagonal from a cut
                // vertex to the positive corner it is not attached to
                let (ka, kb, xbc, xac) = (VertexKey::Original(a), VertexKey::Original(b), cut_key(b, c), cut_key(a, c));
                if a < b {
                    vec![[ka, kb, xac], [kb, xbc, xac]]
                } else {
                    vec![[ka, kb, xbc], [ka, xbc, xac]]
                }
            }
        };
        for t in tris {
            let tri = [
                vertex(t[0], &mut out_vertices)?,
                vertex(t[1], &mut out_vertices)?,
                vertex(t[2], &mut out_vertices)?,
            ];
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                continue;
            }
            out_faces.push(tri);
            source_faces.push(f);
        }
    }
    Ok(TrimmedLayer {
        surface: TriMesh::new(out_vertices, out_faces)?,
        index,
        iso_value,
        source_faces,
        input_area: surface.area(),
        input_faces: surface.faces().len(),
    })
}

/// Trims every support layer of the stack.
pub fn trim_stack(layers: &LayerStack, solid: &ImplicitSolid) -> Result<Vec<TrimmedLayer>> {
    layers.support_layers.iter().map(|l| trim_layer(l, solid)).collect()
}
