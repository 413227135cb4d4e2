//! Convolution surface around the skeleton: every edge contributes the integral of
//! the quartic kernel `f(d) = (1 - d^2/R^2)^2` along its length, weighted by `r_j`.
//! The solid is `F(p) = -C + sum_j F_j(p) >= 0`.

mod polygonize;

pub use polygonize::polygonize;

use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point};
use crate::skeleton::SkeletonGraph;

/// Edges shorter than this carry no measurable field.
pub const MIN_EDGE_LENGTH: f64 = 1e-9;

/// Closed-form convolution of the quartic kernel along the segment `p1 p2` with
/// respect to arc length.
///
/// With `a` the axial coordinate of `p` along the edge, `h` its distance to the
/// edge line and `rho^2 = R^2 - h^2`, the kernel along the line is
/// `(rho^2 - u^2)^2 / R^4` for `u = s - a`, whose primitive is
/// `(rho^4 u - 2/3 rho^2 u^3 + u^5 / 5) / R^4`. It is evaluated between the clamped
/// limits `max(-a, -rho)` and `min(l - a, rho)`.
///
/// The often quoted form `(r/15R^4)(3 l^4 s^5 - 15 a l^2 s^4 + 20 a^2 s^3)` in the
/// segment parameter only carries the top-order terms of this expansion.
pub fn edge_field(p: &Point, p1: &Point, p2: &Point, weight: f64, support: f64) -> Result<f64> {
    let axis = p2 - p1;
    let l = axis.norm();
    if l <= MIN_EDGE_LENGTH {
        return Err(Error::Degenerate(format!("skeleton edge of length {l:e}")));
    }
    Ok(edge_field_unchecked(p, p1, &(axis / l), l, weight, support))
}

fn edge_field_unchecked(p: &Point, p1: &Point, dir: &crate::geom::Vector, l: f64, weight: f64, support: f64) -> f64 {
    let w = p - p1;
    let a = w.dot(dir);
    let h = w.cross(dir).norm();
    if h >= support {
        return 0.0;
    }
    let rho2 = (support - h) * (support + h);
    let rho = rho2.sqrt();
    let u1 = (-a).max(-rho);
    let u2 = (l - a).min(rho);
    if u2 <= u1 {
        return 0.0;
    }
    // factored difference of the primitive avoids cancellation between the limits
    let s2 = u2 * u2 + u2 * u1 + u1 * u1;
    let s4 = u2.powi(4) + u2.powi(3) * u1 + u2 * u2 * u1 * u1 + u2 * u1.powi(3) + u1.powi(4);
    let r4 = support.powi(4);
    weight * (u2 - u1) * (rho2 * rho2 - 2.0 / 3.0 * rho2 * s2 + s4 / 5.0) / r4
}

/// Field of an infinite straight strut of weight `weight` at lateral distance `h`.
pub fn strut_field(weight: f64, support: f64, h: f64) -> f64 {
    if h >= support {
        return 0.0;
    }
    let rho2 = (support - h) * (support + h);
    weight * 16.0 / 15.0 * rho2.powf(2.5) / support.powi(4)
}

/// Zero-level radius of an infinite strut for iso-value `iso`; `None` when the strut
/// never reaches the iso-value.
pub fn strut_radius(weight: f64, support: f64, iso: f64) -> Option<f64> {
    let peak = strut_field(weight, support, 0.0);
    if !(iso > 0.0) || iso > peak {
        return None;
    }
    let rho2 = (15.0 * iso * support.powi(4) / (16.0 * weight)).powf(0.4);
    Some((support * support - rho2).max(0.0).sqrt())
}

/// Iso-value that gives an infinite strut of weight `r_leaf` the radius `target`.
pub fn calibrate_iso(r_leaf: f64, support: f64, target: f64) -> Result<f64> {
    if !(r_leaf > 0.0) || !(support > 0.0) {
        return Err(Error::InvalidParameter("strut weight and support must be positive".into()));
    }
    if !(target > 0.0) || target >= support {
        return Err(Error::InvalidParameter(format!(
            "target radius {target} mm unreachable with kernel support {support} mm"
        )));
    }
    Ok(strut_field(r_leaf, support, target))
}

/// Edge weights from branch counts: `r_leaf * sqrt(count of the upper node)`, so the
/// squared weights add up at every junction.
pub fn assign_radii(graph: &SkeletonGraph, r_leaf: f64) -> Vec<f64> {
    graph
        .edges
        .iter()
        .map(|&(a, _)| r_leaf * (graph.nodes[a].branch_count as f64).sqrt())
        .collect()
}

/// Weighted segments of the solid: every skeleton edge, plus a ghost segment of
/// length `support` continuing each edge past a leaf or root. Without the ghosts
/// the field at a free end is about half the infinite-strut value and the zero
/// level stops short of the end node by several millimetres.
pub fn skeleton_segments(graph: &SkeletonGraph, weights: &[f64], support: f64) -> Vec<(Point, Point, f64)> {
    let mut has_in = vec![false; graph.nodes.len()];
    let mut has_out = vec![false; graph.nodes.len()];
    for &(a, b) in &graph.edges {
        has_out[a] = true;
        has_in[b] = true;
    }
    let mut segs = Vec::with_capacity(graph.edges.len() + 8);
    for (&(a, b), &w) in graph.edges.iter().zip(weights) {
        let (pa, pb) = (graph.nodes[a].position, graph.nodes[b].position);
        segs.push((pa, pb, w));
    }
    for (&(a, b), &w) in graph.edges.iter().zip(weights) {
        let (pa, pb) = (graph.nodes[a].position, graph.nodes[b].position);
        let Some(dir) = (pb - pa).try_normalize(MIN_EDGE_LENGTH) else { continue };
        if !has_in[a] {
            segs.push((pa - dir * support, pa, w));
        }
        if !has_out[b] {
            segs.push((pb, pb + dir * support, w));
        }
    }
    segs
}

#[derive(Debug, Clone)]
struct Segment {
    p1: Point,
    dir: crate::geom::Vector,
    len: f64,
    weight: f64,
}

/// Implicit solid `F(p) >= 0` around weighted skeleton edges.
#[derive(Debug, Clone)]
pub struct ImplicitSolid {
    segments: Vec<Segment>,
    support: f64,
    iso: f64,
    index: Bvh,
    bounds: Aabb,
}

impl ImplicitSolid {
    /// Solid of [`skeleton_segments`]. Edges shorter than [`MIN_EDGE_LENGTH`] are
    /// ignored.
    pub fn new(graph: &SkeletonGraph, weights: &[f64], support: f64, iso: f64) -> Result<Self> {
        if weights.len() != graph.edges.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} edges",
                weights.len(),
                graph.edges.len()
            )));
        }
        Self::from_segments(&skeleton_segments(graph, weights, support), support, iso)
    }

    pub fn from_segments(segs: &[(Point, Point, f64)], support: f64, iso: f64) -> Result<Self> {
        if !(support > 0.0) || !(iso > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel support {support} and iso-value {iso} must be positive"
            )));
        }
        let mut segments = Vec::with_capacity(segs.len());
        for &(p1, p2, weight) in segs {
            if !(weight > 0.0) {
                return Err(Error::InvalidParameter(format!("edge weight {weight} must be positive")));
            }
            let len = (p2 - p1).norm();
            if len <= MIN_EDGE_LENGTH {
                continue;
            }
            segments.push(Segment {
                p1,
                dir: (p2 - p1) / len,
                len,
                weight,
            });
        }
        let boxes: Vec<Aabb> = segments
            .iter()
            .map(|s| Aabb::from_points(&[s.p1, s.p1 + s.dir * s.len]).inflated(support))
            .collect();
        let bounds = boxes.iter().fold(Aabb::empty(), |acc, b| acc.join(b));
        Ok(Self {
            index: Bvh::build(&boxes),
            segments,
            support,
            iso,
            bounds,
        })
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn iso(&self) -> f64 {
        self.iso
    }

    pub fn edge_count(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Zero-level radius of the lightest strut, if it reaches the iso-value at all.
    pub fn thinnest_strut(&self) -> Option<f64> {
        let w = self.segments.iter().map(|s| s.weight).fold(f64::INFINITY, f64::min);
        if w.is_finite() {
            strut_radius(w, self.support, self.iso)
        } else {
            None
        }
    }

    /// Box outside of which the field is exactly `-C`.
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn segment_field(&self, s: &Segment, p: &Point) -> f64 {
        edge_field_unchecked(p, &s.p1, &s.dir, s.len, s.weight, self.support)
    }

    pub fn field_value(&self, p: &Point) -> f64 {
        let mut ids = Vec::new();
        self.index.for_each_containing(p, |i| ids.push(i));
        // fixed summation order keeps the value independent of tree layout
        ids.sort_unstable();
        -self.iso + ids.iter().map(|&i| self.segment_field(&self.segments[i], p)).sum::<f64>()
    }

    /// Same value without the spatial index.
    pub fn field_value_brute_force(&self, p: &Point) -> f64 {
        -self.iso + self.segments.iter().map(|s| self.segment_field(s, p)).sum::<f64>()
    }

    /// Bound on `|grad F|`: the kernel slope peaks at `8 / (3 sqrt 3 R)`, integrated
    /// over at most `2R` of each edge.
    pub fn lipschitz_bound(&self) -> f64 {
        let max_w = self.segments.iter().map(|s| s.weight).fold(0.0, f64::max);
        let slope = 8.0 / (3.0 * 3f64.sqrt() * self.support);
        self.segments.len() as f64 * max_w * slope * 2.0 * self.support
    }
}
