//! Curved layers as iso-surfaces of a per-node field, extracted by marching
//! tetrahedra. Model and support layers at the same iso-value share their
//! interface vertices bit for bit.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fields::{GradientOperator, ScalarField};
use crate::geom::{lex_less, Point, Vector};
use crate::mesh::{TetMesh, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Model,
    Support,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Model => "model",
            Domain::Support => "support",
        }
    }
}

/// Where a layer vertex comes from: the mesh edge `(a, b)`, ordered so that node `a`
/// is the lexicographically smaller position, and the parameter `t` along `a -> b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexSource {
    pub edge: (usize, usize),
    pub t: f64,
}

/// One iso-surface patch of a field over one domain.
#[derive(Debug, Clone)]
pub struct Layer {
    pub surface: TriMesh,
    pub iso_value: f64,
    pub index: usize,
    pub domain: Domain,
    pub vertex_sources: Vec<VertexSource>,
    /// Tet each face was cut from.
    pub face_tets: Vec<usize>,
    /// Field gradient of that tet; faces are wound so their normals follow it.
    pub face_gradients: Vec<Vector>,
}

impl Layer {
    fn empty(iso_value: f64, index: usize, domain: Domain) -> Self {
        Self {
            surface: TriMesh::default(),
            iso_value,
            index,
            domain,
            vertex_sources: Vec::new(),
            face_tets: Vec::new(),
            face_gradients: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }

    /// Unit growing direction of a face (normalized field gradient).
    pub fn face_direction(&self, f: usize) -> Vector {
        let g = self.face_gradients[f];
        let n = g.norm();
        if n > 0.0 {
            g / n
        } else {
            Vector::z()
        }
    }

    /// Volume of a layer of field spacing `spacing`: each face contributes its area
    /// times the local thickness `spacing / |grad G|`.
    pub fn slab_volume(&self, spacing: f64) -> f64 {
        (0..self.surface.faces().len())
            .map(|f| {
                let g = self.face_gradients[f].norm();
                if g > 0.0 {
                    self.surface.face_area(f) * spacing / g
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Compatible model and support layers over a shared iso-value list.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub iso_values: Vec<f64>,
    /// Spacing of the iso-values in field units.
    pub spacing: f64,
    pub model_layers: Vec<Layer>,
    pub support_layers: Vec<Layer>,
}

impl LayerStack {
    pub fn len(&self) -> usize {
        self.iso_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iso_values.is_empty()
    }
}

/// Midpoints of `n` equal slabs of `[min, max]`.
pub fn choose_iso_values(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if n == 0 {
        return Err(Error::InvalidParameter("layer count must be at least 1".into()));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("empty field range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / n as f64;
    Ok((0..n).map(|k| lo + (k as f64 + 0.5) * step).collect())
}

/// Extends an evenly spaced list with the same spacing until it covers `range`.
pub fn extend_iso_values(iso: &[f64], range: (f64, f64)) -> Vec<f64> {
    if iso.len() < 2 {
        return iso.to_vec();
    }
    let step = iso[1] - iso[0];
    let mut below = Vec::new();
    let mut k = 1;
    loop {
        let v = iso[0] - k as f64 * step;
        if v <= range.0 {
            break;
        }
        below.push(v);
        k += 1;
    }
    below.reverse();
    let last = *iso.last().unwrap();
    let mut out = below;
    out.extend_from_slice(iso);
    let mut k = 1;
    loop {
        let v = last + k as f64 * step;
        if v >= range.1 {
            break;
        }
        out.push(v);
        k += 1;
    }
    out
}

/// Iso-surface with per-vertex and per-face provenance.
#[derive(Debug, Clone, Default)]
pub struct IsoSurface {
    pub surface: TriMesh,
    pub vertex_sources: Vec<VertexSource>,
    pub face_tets: Vec<usize>,
    pub face_gradients: Vec<Vector>,
}

/// Number of triangles a tet contributes at `iso`; node values equal to `iso` count
/// as above.
pub fn tet_case_count(values: [f64; 4], iso: f64) -> usize {
    match values.iter().filter(|&&v| v >= iso).count() {
        1 | 3 => 1,
        2 => 2,
        _ => 0,
    }
}

pub fn extract_iso_surface(mesh: &TetMesh, field: &ScalarField, iso: f64) -> Result<TriMesh> {
    let op = GradientOperator::new(mesh)?;
    Ok(extract_with_sources(mesh, &op, field, iso)?.surface)
}

/// Marching tetrahedra with vertices shared per mesh edge.
pub fn extract_with_sources(mesh: &TetMesh, op: &GradientOperator, field: &ScalarField, iso: f64) -> Result<IsoSurface> {
    if field.len() != mesh.node_count() {
        return Err(Error::InvalidParameter(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.node_count()
        )));
    }
    let g = field.values();
    let nodes = mesh.nodes();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut sources: Vec<VertexSource> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_tets = Vec::new();
    let mut face_gradients = Vec::new();

    let mut vertex_on = |a: usize, b: usize, vertices: &mut Vec<Point>, sources: &mut Vec<VertexSource>| -> usize {
        let key = (a.min(b), a.max(b));
        *edge_vertex.entry(key).or_insert_with(|| {
            // interpolate from the lexicographically smaller endpoint so every mesh
            // sharing this edge produces the same bits
            let (p, q) = if lex_less(&nodes[key.1], &nodes[key.0]) {
                (key.1, key.0)
            } else {
                (key.0, key.1)
            };
            let t = (iso - g[p]) / (g[q] - g[p]);
            let x = nodes[p] + (nodes[q] - nodes[p]) * t;
            vertices.push(x);
            sources.push(VertexSource { edge: (p, q), t });
            vertices.len() - 1
        })
    };

    for (t, tet) in mesh.tets().iter().enumerate() {
        let above: Vec<usize> = tet.iter().copied().filter(|&n| g[n] >= iso).collect();
        let below: Vec<usize> = tet.iter().copied().filter(|&n| g[n] < iso).collect();
        let grad = op.gradient(mesh, g, t);
        let mut emit = |tri: [usize; 3], vertices: &Vec<Point>| {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = (b - a).cross(&(c - a));
            let tri = if n.dot(&grad) < 0.0 { [tri[0], tri[2], tri[1]] } else { tri };
            faces.push(tri);
            face_tets.push(t);
            face_gradients.push(grad);
        };
        match (above.len(), below.len()) {
            (1, 3) | (3, 1) => {
                let (lone, rest) = if above.len() == 1 { (above[0], &below) } else { (below[0], &above) };
                let tri = [
                    vertex_on(lone, rest[0], &mut vertices, &mut sources),
                    vertex_on(lone, rest[1], &mut vertices, &mut sources),
                    vertex_on(lone, rest[2], &mut vertices, &mut sources),
                ];
                emit(tri, &vertices);
            }
            (2, 2) => {
                let q = [
                    vertex_on(above[0], below[0], &mut vertices, &mut sources),
                    vertex_on(above[0], below[1], &mut vertices, &mut sources),
                    vertex_on(above[1], below[1], &mut vertices, &mut sources),
                    vertex_on(above[1], below[0], &mut vertices, &mut sources),
                ];
                emit([q[0], q[1], q[2]], &vertices);
                emit([q[0], q[2], q[3]], &vertices);
            }
            _ => {}
        }
    }
    Ok(IsoSurface {
        surface: TriMesh::new(vertices, faces)?,
        vertex_sources: sources,
        face_tets,
        face_gradients,
    })
}

/// Inputs of [`slice_compatible`].
pub struct SliceInput<'a> {
    pub model: &'a TetMesh,
    pub model_field: &'a ScalarField,
    pub support: &'a TetMesh,
    pub support_field: &'a ScalarField,
    /// Shared node id of each model node (e.g. its envelope node).
    pub model_ids: &'a [usize],
    /// Shared node id of each support node.
    pub support_ids: &'a [usize],
}

/// Slices both domains at every iso-value and checks that their shared edges carry
/// identical field values and vertices.
pub fn slice_compatible(input: &SliceInput<'_>, iso_values: &[f64]) -> Result<LayerStack> {
    if iso_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("iso-values must be strictly increasing".into()));
    }
    check_shared_values(input)?;
    let model_op = GradientOperator::new(input.model)?;
    let support_op = GradientOperator::new(input.support)?;
    let mut model_layers = Vec::with_capacity(iso_values.len());
    let mut support_layers = Vec::with_capacity(iso_values.len());
    for (i, &iso) in iso_values.iter().enumerate() {
        let m = layer_from(extract_with_sources(input.model, &model_op, input.model_field, iso)?, iso, i, Domain::Model);
        let s = if input.support.tet_count() == 0 {
            Layer::empty(iso, i, Domain::Support)
        } else {
            layer_from(
                extract_with_sources(input.support, &support_op, input.support_field, iso)?,
                iso,
                i,
                Domain::Support,
            )
        };
        check_layer_pair(input, &m, &s, i)?;
        model_layers.push(m);
        support_layers.push(s);
    }
    let spacing = if iso_values.len() >= 2 { iso_values[1] - iso_values[0] } else { 0.0 };
    Ok(LayerStack {
        iso_values: iso_values.to_vec(),
        spacing,
        model_layers,
        support_layers,
    })
}

fn layer_from(iso: IsoSurface, iso_value: f64, index: usize, domain: Domain) -> Layer {
    Layer {
        surface: iso.surface,
        iso_value,
        index,
        domain,
        vertex_sources: iso.vertex_sources,
        face_tets: iso.face_tets,
        face_gradients: iso.face_gradients,
    }
}

fn check_shared_values(input: &SliceInput<'_>) -> Result<()> {
    let mut model_value: HashMap<usize, (usize, f64)> = HashMap::with_capacity(input.model_ids.len());
    for (m, &id) in input.model_ids.iter().enumerate() {
        model_value.insert(id, (m, input.model_field.values()[m]));
    }
    for (s, id) in input.support_ids.iter().enumerate() {
        if let Some(&(_, v)) = model_value.get(id) {
            let w = input.support_field.values()[s];
            if (v - w).abs() > 1e-9 {
                return Err(Error::Compatibility {
                    layer: 0,
                    node: s,
                    message: format!("model value {v} vs support value {w}"),
                });
            }
        }
    }
    Ok(())
}

/// Vertices of `layer` keyed by the shared ids of their edge endpoints.
pub fn shared_edge_vertices(layer: &Layer, ids: &[usize]) -> HashMap<(usize, usize), Point> {
    layer
        .vertex_sources
        .iter()
        .zip(layer.surface.vertices())
        .map(|(s, p)| {
            let (a, b) = (ids[s.edge.0], ids[s.edge.1]);
            ((a.min(b), a.max(b)), *p)
        })
        .collect()
}

fn check_layer_pair(input: &SliceInput<'_>, model: &Layer, support: &Layer, index: usize) -> Result<()> {
    if model.is_empty() || support.is_empty() {
        return Ok(());
    }
    let mv = shared_edge_vertices(model, input.model_ids);
    for (s_idx, (src, p)) in support.vertex_sources.iter().zip(support.surface.vertices()).enumerate() {
        let (a, b) = (input.support_ids[src.edge.0], input.support_ids[src.edge.1]);
        if let Some(q) = mv.get(&(a.min(b), a.max(b))) {
            if (p - q).norm() > 1e-9 {
                return Err(Error::Compatibility {
                    layer: index,
                    node: src.edge.0,
                    message: format!("support vertex {s_idx} is {:e} mm off its model twin", (p - q).norm()),
                });
            }
        }
    }
    Ok(())
}
