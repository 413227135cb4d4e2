//! Governing scalar fields on tet meshes: per-element gradients, least-squares fitting
//! against a target direction field, and extrapolation into the support domain.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::linalg::{conjugate_gradient, CsrMatrix};
use crate::mesh::{TetMesh, DEGENERATE_VOLUME};

/// Relative residual the normal equations are solved to.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// One value per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("field value at node {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (min, max); (inf, -inf) when empty.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

/// One unit direction per tet.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    vectors: Vec<Vector>,
}

impl VectorField {
    /// Normalizes each vector. Zero or non-finite vectors become +z with a warning.
    pub fn from_raw(raw: Vec<Vector>) -> Self {
        let mut replaced = 0usize;
        let vectors = raw
            .into_iter()
            .map(|v| {
                let n = v.norm();
                if n > 1e-300 && n.is_finite() {
                    v / n
                } else {
                    replaced += 1;
                    Vector::z()
                }
            })
            .collect();
        if replaced > 0 {
            log::warn!("{replaced} zero-length target vectors replaced by (0,0,1)");
        }
        Self { vectors }
    }

    pub fn uniform(v: Vector, count: usize) -> Self {
        Self::from_raw(vec![v; count])
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Gradients of the four barycentric hat functions of a tet.
///
/// Node i gets `s_i (p_{i+1} - p_{i+3}) x (p_{i+1} - p_{i+2}) / 6v` with indices mod 4.
/// The cyclic form needs `s_i = (-1)^i` (0-based): the cyclic relabelling of an
/// odd-length cycle flips the orientation on every other node.
pub fn shape_gradients(p: &[Point; 4]) -> Result<[Vector; 4]> {
    let v = crate::mesh::signed_volume(&p[0], &p[1], &p[2], &p[3]);
    if v.abs() < DEGENERATE_VOLUME {
        return Err(Error::DegenerateTet { tet: usize::MAX, volume: v });
    }
    let mut out = [Vector::zeros(); 4];
    for (i, g) in out.iter_mut().enumerate() {
        let a = p[(i + 1) % 4];
        let b = p[(i + 2) % 4];
        let c = p[(i + 3) % 4];
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *g = sign * (a - c).cross(&(a - b)) / (6.0 * v);
    }
    Ok(out)
}

/// Shape-function gradients of every tet, cached for repeated gradient evaluation.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    grads: Vec<[Vector; 4]>,
    volumes: Vec<f64>,
}

impl GradientOperator {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        let mut grads = Vec::with_capacity(mesh.tet_count());
        let mut volumes = Vec::with_capacity(mesh.tet_count());
        for t in 0..mesh.tet_count() {
            let g = shape_gradients(&mesh.tet_points(t)).map_err(|_| Error::DegenerateTet {
                tet: t,
                volume: mesh.tet_volume(t).unwrap_or(0.0),
            })?;
            grads.push(g);
            volumes.push(mesh.tet_volume(t)?);
        }
        Ok(Self { grads, volumes })
    }

    pub fn tet_count(&self) -> usize {
        self.grads.len()
    }

    pub fn gradient(&self, mesh: &TetMesh, values: &[f64], t: usize) -> Vector {
        let tet = mesh.tets()[t];
        (0..4).map(|k| self.grads[t][k] * values[tet[k]]).sum()
    }

    pub fn shape(&self, t: usize) -> &[Vector; 4] {
        &self.grads[t]
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.volumes[t]
    }
}

/// Constant gradient of the linear interpolant of `field` over tet `t`.
pub fn element_gradient(mesh: &TetMesh, field: &ScalarField, t: usize) -> Result<Vector> {
    if t >= mesh.tet_count() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: mesh.tet_count(),
        });
    }
    let g = shape_gradients(&mesh.tet_points(t)).map_err(|_| Error::DegenerateTet {
        tet: t,
        volume: mesh.tet_volume(t).unwrap_or(0.0),
    })?;
    let tet = mesh.tets()[t];
    Ok((0..4).map(|k| g[k] * field.values()[tet[k]]).sum())
}

/// Per-element weights of the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight by tet volume, i.e. the L2 norm of the gradient mismatch.
    Volume,
}

impl Weighting {
    fn weight(self, op: &GradientOperator, t: usize) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::Volume => op.volume(t),
        }
    }
}

/// `sum_e w_e |grad_e g - v_e|^2`.
pub fn objective(mesh: &TetMesh, values: &[f64], target: &VectorField, weighting: Weighting) -> Result<f64> {
    let op = GradientOperator::new(mesh)?;
    Ok((0..mesh.tet_count())
        .map(|t| weighting.weight(&op, t) * (op.gradient(mesh, values, t) - target.vectors()[t]).norm_squared())
        .sum())
}

/// Gradient of [`objective`] with respect to the node values.
pub fn objective_gradient(
    mesh: &TetMesh,
    values: &[f64],
    target: &VectorField,
    weighting: Weighting,
) -> Result<Vec<f64>> {
    let op = GradientOperator::new(mesh)?;
    let mut out = vec![0.0; mesh.node_count()];
    for t in 0..mesh.tet_count() {
        let r = op.gradient(mesh, values, t) - target.vectors()[t];
        let w = 2.0 * weighting.weight(&op, t);
        for (k, &n) in mesh.tets()[t].iter().enumerate() {
            out[n] += w * op.shape(t)[k].dot(&r);
        }
    }
    Ok(out)
}

/// Least-squares fit of a field whose element gradients match `target`, with one
/// node pinned to remove the constant null space.
pub fn fit_field(mesh: &TetMesh, target: &VectorField, anchor: (usize, f64)) -> Result<ScalarField> {
    fit_constrained(mesh, target, &[anchor], Weighting::Uniform)
}

/// Least-squares fit with an arbitrary set of hard node constraints. Each connected
/// component must contain at least one constrained node.
pub fn fit_constrained(
    mesh: &TetMesh,
    target: &VectorField,
    fixed: &[(usize, f64)],
    weighting: Weighting,
) -> Result<ScalarField> {
    let n = mesh.node_count();
    if target.len() != mesh.tet_count() {
        return Err(Error::InvalidParameter(format!(
            "target has {} vectors for {} tets",
            target.len(),
            mesh.tet_count()
        )));
    }
    if fixed.is_empty() {
        return Err(Error::InvalidParameter("at least one anchor node is required".into()));
    }
    let mut value = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(node, v) in fixed {
        if node >= n {
            return Err(Error::IndexOutOfRange { index: node, len: n });
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("anchor value at node {node} is not finite")));
        }
        is_fixed[node] = true;
        value[node] = v;
    }
    let (labels, count) = crate::mesh::component_labels(mesh);
    if count > 1 {
        let mut anchored = vec![false; count];
        for t in 0..mesh.tet_count() {
            if mesh.tets()[t].iter().any(|&v| is_fixed[v]) {
                anchored[labels[t]] = true;
            }
        }
        if anchored.iter().any(|a| !a) {
            return Err(Error::Disconnected(count));
        }
    }

    let op = GradientOperator::new(mesh)?;
    let mut free_id = vec![usize::MAX; n];
    let mut free_nodes = Vec::new();
    for v in 0..n {
        if !is_fixed[v] {
            free_id[v] = free_nodes.len();
            free_nodes.push(v);
        }
    }
    let m = free_nodes.len();
    let mut triplets = Vec::with_capacity(16 * mesh.tet_count());
    let mut rhs = vec![0.0; m];
    for t in 0..mesh.tet_count() {
        let w = weighting.weight(&op, t);
        let tet = mesh.tets()[t];
        let g = op.shape(t);
        let v = target.vectors()[t];
        for a in 0..4 {
            let ia = free_id[tet[a]];
            if ia == usize::MAX {
                continue;
            }
            rhs[ia] += w * g[a].dot(&v);
            for b in 0..4 {
                let k = w * g[a].dot(&g[b]);
                let ib = free_id[tet[b]];
                if ib == usize::MAX {
                    rhs[ia] -= k * value[tet[b]];
                } else {
                    triplets.push((ia, ib, k));
                }
            }
        }
    }
    if m > 0 {
        let a = CsrMatrix::from_triplets(m, triplets);
        let mean = fixed.iter().map(|f| f.1).sum::<f64>() / fixed.len() as f64;
        let mut x = vec![mean; m];
        conjugate_gradient(&a, &rhs, &mut x, SOLVE_TOLERANCE, 20 * m + 2000)?;
        for (i, &node) in free_nodes.iter().enumerate() {
            value[node] = x[i];
        }
    }
    ScalarField::new(value)
}

/// Height field and its normalized element gradients.
pub fn field_from_height(mesh: &TetMesh) -> Result<(ScalarField, VectorField)> {
    let field = ScalarField::new(mesh.nodes().iter().map(|p| p.z).collect())?;
    let op = GradientOperator::new(mesh)?;
    let dirs = VectorField::from_raw(
        (0..mesh.tet_count())
            .map(|t| op.gradient(mesh, field.values(), t))
            .collect(),
    );
    Ok((field, dirs))
}

/// Normalized element gradients of `field`.
pub fn direction_field(mesh: &TetMesh, field: &ScalarField) -> Result<VectorField> {
    let op = GradientOperator::new(mesh)?;
    Ok(VectorField::from_raw(
        (0..mesh.tet_count())
            .map(|t| op.gradient(mesh, field.values(), t))
            .collect(),
    ))
}

/// Coordinate tolerance for matching support and model interface nodes.
pub const INTERFACE_TOLERANCE: f64 = 1e-6;

/// Extends the model field into the support mesh.
///
/// `interface` pairs (support node, model node). Support nodes on the interface take
/// the model values exactly; each support element targets the normalized model
/// gradient of the nearest (by centroid) model element owning a boundary face.
pub fn extrapolate_field(
    model: &TetMesh,
    model_field: &ScalarField,
    support: &TetMesh,
    interface: &[(usize, usize)],
) -> Result<ScalarField> {
    if interface.is_empty() {
        return Err(Error::InvalidParameter("empty interface map".into()));
    }
    if support.tet_count() == 0 {
        return ScalarField::new(vec![0.0; support.node_count()]);
    }
    let mut fixed = Vec::with_capacity(interface.len());
    for &(s, m) in interface {
        if s >= support.node_count() {
            return Err(Error::IndexOutOfRange {
                index: s,
                len: support.node_count(),
            });
        }
        if m >= model.node_count() {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: model.node_count(),
            });
        }
        let d = (support.nodes()[s] - model.nodes()[m]).norm();
        if d > INTERFACE_TOLERANCE {
            return Err(Error::Interface {
                node: s,
                message: format!("support and model positions differ by {d:e} mm"),
            });
        }
        fixed.push((s, model_field.values()[m]));
    }

    let model_op = GradientOperator::new(model)?;
    let mut seen = HashMap::new();
    let mut sources: Vec<(Point, Vector)> = Vec::new();
    for &t in model.boundary_owner() {
        if seen.insert(t, ()).is_none() {
            sources.push((model.tet_centroid(t), model_op.gradient(model, model_field.values(), t)));
        }
    }
    let target = VectorField::from_raw(
        (0..support.tet_count())
            .map(|t| {
                let c = support.tet_centroid(t);
                let mut best = (f64::INFINITY, Vector::z());
                for (p, g) in &sources {
                    let d = (p - c).norm_squared();
                    if d < best.0 {
                        best = (d, *g);
                    }
                }
                best.1
            })
            .collect(),
    );
    fit_constrained(support, &target, &fixed, Weighting::Uniform)
}
