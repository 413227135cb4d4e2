//! Slow, index-free reference computations for the curvsup tests.
//!
//! Everything here works on plain `[f64; 3]` points and re-derives its answer
//! with a different algorithm than the library: quadrature instead of closed
//! forms, exhaustive scans instead of bounding volume hierarchies, explicit
//! depth-first recounts instead of incremental bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P3 = [f64; 3];

/// An oracle answer together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// Name of the independent algorithm.
    pub method: &'static str,
    /// Error estimate or acceptance slack of `value`.
    pub tolerance: f64,
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

/// Determinant of the matrix with rows `r0, r1, r2`, by cofactor expansion.
pub fn det3(r0: P3, r1: P3, r2: P3) -> f64 {
    r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
}

/// Signed tetrahedron volume `det[b-a, c-a, d-a] / 6`.
pub fn det3_tet_volume(a: P3, b: P3, c: P3, d: P3) -> f64 {
    det3(sub(b, a), sub(c, a), sub(d, a)) / 6.0
}

/// Gradient of the linear interpolant of `values` over the tet, by Cramer's rule on
/// `(p_i - p_0) . g = v_i - v_0`.
pub fn cramer_gradient(p: [P3; 4], values: [f64; 4]) -> P3 {
    let rows = [sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0])];
    let rhs = [values[1] - values[0], values[2] - values[0], values[3] - values[0]];
    let d = det3(rows[0], rows[1], rows[2]);
    let column = |k: usize| {
        let mut m = rows;
        for (i, row) in m.iter_mut().enumerate() {
            row[k] = rhs[i];
        }
        det3(m[0], m[1], m[2]) / d
    };
    [column(0), column(1), column(2)]
}

/// Volume enclosed by a closed, outward-wound triangle soup as a sum of signed
/// origin cones.
pub fn divergence_volume(triangles: &[[P3; 3]]) -> f64 {
    triangles.iter().map(|t| dot(t[0], cross(t[1], t[2]))).sum::<f64>() / 6.0
}

pub fn triangle_area(t: &[P3; 3]) -> f64 {
    0.5 * norm(cross(sub(t[1], t[0]), sub(t[2], t[0])))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Nodes per panel of the composite rule.
const PANEL_ORDER: usize = 8;

/// Composite Gauss-Legendre integral of `f` over the pieces between consecutive
/// `breaks`, using about `n_nodes` nodes in total spread by piece length.
fn composite(f: &impl Fn(f64) -> f64, breaks: &[f64], n_nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let total = breaks[breaks.len() - 1] - breaks[0];
    let panels_total = (n_nodes / PANEL_ORDER).max(1);
    let mut sum = 0.0;
    for piece in breaks.windows(2) {
        let len = piece[1] - piece[0];
        if len <= 0.0 {
            continue;
        }
        let panels = ((panels_total as f64 * len / total).round() as usize).max(1);
        let h = len / panels as f64;
        for k in 0..panels {
            let (lo, hi) = (piece[0] + k as f64 * h, piece[0] + (k + 1) as f64 * h);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            sum += half * x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>();
        }
    }
    sum
}

/// Convolution of the quartic kernel `(1 - d^2/R^2)^2` (zero beyond `R`) along the
/// segment `p1 p2` with respect to arc length, scaled by `weight`.
///
/// The segment is split where it crosses the support sphere around `p`, so each
/// piece has a polynomial integrand. The result is compared against a run with
/// twice the nodes and the difference reported as tolerance.
pub fn quadrature_edge_field(p: P3, p1: P3, p2: P3, weight: f64, support: f64, n_nodes: usize) -> OracleResult {
    assert!(n_nodes >= 64, "quadrature needs at least 64 nodes");
    let axis = sub(p2, p1);
    let l = norm(axis);
    let u = scale(axis, 1.0 / l);
    let r2 = support * support;
    let f = |s: f64| {
        let q = add(p1, scale(u, s));
        let d = sub(p, q);
        let t = 1.0 - dot(d, d) / r2;
        if dot(d, d) < r2 {
            weight * t * t
        } else {
            0.0
        }
    };
    let w = sub(p, p1);
    let a = dot(w, u);
    let disc = a * a - (dot(w, w) - r2);
    let mut breaks = vec![0.0, l];
    if disc > 0.0 {
        for s in [a - disc.sqrt(), a + disc.sqrt()] {
            if s > 0.0 && s < l {
                breaks.push(s);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let coarse = composite(&f, &breaks, n_nodes);
    let fine = composite(&f, &breaks, 2 * n_nodes);
    OracleResult {
        value: fine,
        method: "composite Gauss-Legendre, split at the support sphere",
        tolerance: (fine - coarse).abs(),
    }
}

/// Distance from `p` to the segment `a b`.
pub fn point_segment_distance(p: P3, a: P3, b: P3) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm(sub(p, add(a, scale(ab, t))))
}

/// Field `-iso + sum of edge convolutions` with every edge integrated numerically.
/// Edges farther than the support from `p` are skipped.
pub fn brute_field(p: P3, segments: &[(P3, P3, f64)], support: f64, iso: f64) -> f64 {
    -iso + segments
        .iter()
        .filter(|(a, b, _)| norm(sub(*b, *a)) > 1e-9 && point_segment_distance(p, *a, *b) < support)
        .map(|&(a, b, w)| quadrature_edge_field(p, a, b, w, support, 64).value)
        .sum::<f64>()
}

/// Zero of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> OracleResult {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on the bracket");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    OracleResult { value: 0.5 * (lo + hi), method: "bisection", tolerance: hi - lo }
}

/// Ray hit of one triangle by intersecting the supporting plane and testing the
/// point against the three edge half-planes; `slack` is relative to the edge
/// lengths.
pub fn ray_plane_hit(origin: P3, dir: P3, tri: &[P3; 3], slack: f64) -> Option<f64> {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let denom = dot(n, dir);
    if denom.abs() <= 1e-14 * norm(n) * norm(dir) {
        return None;
    }
    let t = dot(n, sub(tri[0], origin)) / denom;
    let q = add(origin, scale(dir, t));
    let nn = dot(n, n);
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let edge_fn = dot(cross(sub(b, a), sub(q, a)), n);
        if edge_fn < -slack * nn {
            return None;
        }
    }
    Some(t)
}

/// Nearest hit with `t > t_min` over all triangles; ties go to the lower index.
pub fn brute_first_hit(origin: P3, dir: P3, triangles: &[[P3; 3]], t_min: f64, slack: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, tri) in triangles.iter().enumerate() {
        if let Some(t) = ray_plane_hit(origin, dir, tri, slack) {
            if t > t_min && best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
    }
    best
}

/// Nearest hit over several layers: `(layer, face, t)`.
pub fn brute_ray_layers(origin: P3, dir: P3, layers: &[Vec<[P3; 3]>], t_min: f64, slack: f64) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (l, tris) in layers.iter().enumerate() {
        if let Some((f, t)) = brute_first_hit(origin, dir, tris, t_min, slack) {
            if best.is_none_or(|(_, _, bt)| t < bt) {
                best = Some((l, f, t));
            }
        }
    }
    best
}

/// Largest signed distance of any point to the planes of an outward-wound convex
/// polytope; non-positive means every point is contained.
pub fn brute_hull_containment(points: &[P3], hull: &[[P3; 3]]) -> OracleResult {
    let mut worst = f64::NEG_INFINITY;
    for p in points {
        let d = hull
            .iter()
            .map(|t| {
                let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
                dot(n, sub(*p, t[0])) / norm(n)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(d);
    }
    OracleResult { value: worst, method: "exhaustive point-plane scan", tolerance: 0.0 }
}

/// Smallest distance from `p` to the boundary of a convex polytope it lies in.
pub fn brute_depth_in_hull(p: P3, hull: &[[P3; 3]]) -> f64 {
    hull.iter()
        .map(|t| {
            let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
            -dot(n, sub(p, t[0])) / norm(n)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Leaves above every node of a forest with edges `(upper, lower)`, counted by an
/// explicit depth-first walk up from each node. Nodes without incoming edges are
/// leaves and count one.
pub fn dfs_recount(node_count: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let mut uppers = vec![Vec::new(); node_count];
    for &(a, b) in edges {
        uppers[b].push(a);
    }
    (0..node_count)
        .map(|start| {
            let mut count = 0;
            let mut seen = vec![false; node_count];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if std::mem::replace(&mut seen[n], true) {
                    continue;
                }
                if uppers[n].is_empty() {
                    count += 1;
                }
                stack.extend(&uppers[n]);
            }
            count
        })
        .collect()
}

/// Per-face trim outcome: corners strictly inside and the number of output
/// triangles (`0, 1, 2, 1` for `0..=3` inside corners).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimClass {
    pub inside: usize,
    pub out_faces: usize,
}

/// Classifies every face by evaluating `field` at each corner of each face afresh.
pub fn brute_trim(faces: &[[P3; 3]], field: impl Fn(P3) -> f64) -> Vec<TrimClass> {
    faces
        .iter()
        .map(|t| {
            let inside = t.iter().filter(|&&p| field(p) > 0.0).count();
            TrimClass { inside, out_faces: [0, 1, 2, 1][inside] }
        })
        .collect()
}

/// Boundary faces of a tet mesh, wound outward, found by sorting all tet faces and
/// keeping the unpaired ones. Returns `(sorted key, outward triangle, owner tet)`.
pub fn brute_boundary_faces(nodes: &[P3], tets: &[[usize; 4]]) -> Vec<([usize; 3], [usize; 3], usize)> {
    let mut all: Vec<([usize; 3], [usize; 3], usize)> = Vec::with_capacity(tets.len() * 4);
    for (t, tet) in tets.iter().enumerate() {
        for skip in 0..4 {
            let mut tri = [0; 3];
            let mut k = 0;
            for (i, &v) in tet.iter().enumerate() {
                if i != skip {
                    tri[k] = v;
                    k += 1;
                }
            }
            let apex = nodes[tet[skip]];
            let [a, b, c] = tri.map(|v| nodes[v]);
            if dot(cross(sub(b, a), sub(c, a)), sub(apex, a)) > 0.0 {
                tri.swap(1, 2);
            }
            let mut key = tri;
            key.sort_unstable();
            all.push((key, tri, t));
        }
    }
    all.sort_by_key(|e| e.0);
    let mut out = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        if j - i == 1 {
            out.push(all[i]);
        }
        i = j;
    }
    out
}

/// Sorted vertex keys of every boundary face with `n . d + sin(alpha) <= 0`, where
/// `d` is the direction of the owning tet.
pub fn exhaustive_overhang_scan(nodes: &[P3], tets: &[[usize; 4]], tet_dirs: &[P3], alpha_deg: f64) -> Vec<[usize; 3]> {
    let s = alpha_deg.to_radians().sin();
    let mut out: Vec<[usize; 3]> = brute_boundary_faces(nodes, tets)
        .into_iter()
        .filter(|(_, tri, owner)| {
            let [a, b, c] = tri.map(|v| nodes[v]);
            let n = cross(sub(b, a), sub(c, a));
            dot(scale(n, 1.0 / norm(n)), tet_dirs[*owner]) + s <= 0.0
        })
        .map(|(key, _, _)| key)
        .collect();
    out.sort_unstable();
    out
}

/// Area of the part of a triangle soup where `inside` holds, from `samples`
/// area-weighted uniform samples. The tolerance is three standard errors.
pub fn monte_carlo_area(triangles: &[[P3; 3]], inside: impl Fn(P3) -> bool, samples: usize, seed: u64) -> OracleResult {
    let areas: Vec<f64> = triangles.iter().map(triangle_area).collect();
    let total: f64 = areas.iter().sum();
    if samples == 0 || total == 0.0 {
        return OracleResult { value: 0.0, method: "Monte-Carlo area sampling", tolerance: 0.0 };
    }
    let mut cumulative = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.gen::<f64>() * total;
        let f = cumulative.partition_point(|&c| c < x).min(triangles.len() - 1);
        let (mut r1, mut r2): (f64, f64) = (rng.gen(), rng.gen());
        if r1 + r2 > 1.0 {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        let t = triangles[f];
        let p = add(t[0], add(scale(sub(t[1], t[0]), r1), scale(sub(t[2], t[0]), r2)));
        if inside(p) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let stderr = (frac * (1.0 - frac) / samples as f64).sqrt();
    OracleResult {
        value: frac * total,
        method: "Monte-Carlo area sampling",
        tolerance: 3.0 * stderr * total,
    }
}

/// Distance from `p` to the closed triangle `t`, by projecting onto the plane and
/// falling back to the three edges.
pub fn point_triangle_distance(p: P3, t: &[P3; 3]) -> f64 {
    let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
    let nn = dot(n, n);
    if nn > 0.0 {
        let q = sub(p, scale(n, dot(sub(p, t[0]), n) / nn));
        let inside = (0..3).all(|k| dot(cross(sub(t[(k + 1) % 3], t[k]), sub(q, t[k])), n) >= 0.0);
        if inside {
            return norm(sub(p, q));
        }
    }
    (0..3)
        .map(|k| point_segment_distance(p, t[k], t[(k + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

/// One-sided Hausdorff distance from the points to the triangle soup.
pub fn directed_hausdorff(points: &[P3], triangles: &[[P3; 3]]) -> f64 {
    points
        .iter()
        .map(|&p| triangles.iter().map(|t| point_triangle_distance(p, t)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Area of the horizontal section `z = const` of a tet mesh, from uniform samples
/// in the bounding rectangle of the crossing tets tested by barycentric signs.
pub fn monte_carlo_section_area(nodes: &[P3], tets: &[[usize; 4]], z: f64, samples: usize, seed: u64) -> OracleResult {
    let crossing: Vec<[P3; 4]> = tets
        .iter()
        .map(|t| t.map(|v| nodes[v]))
        .filter(|p| {
            let lo = p.iter().map(|q| q[2]).fold(f64::INFINITY, f64::min);
            let hi = p.iter().map(|q| q[2]).fold(f64::NEG_INFINITY, f64::max);
            lo <= z && z <= hi
        })
        .collect();
    if crossing.is_empty() {
        return OracleResult { value: 0.0, method: "Monte-Carlo section sampling", tolerance: 0.0 };
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in crossing.iter().flatten() {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let inside_tet = |p: &[P3; 4], q: P3| {
        let v = det3_tet_volume(p[0], p[1], p[2], p[3]);
        let parts = [
            det3_tet_volume(q, p[1], p[2], p[3]),
            det3_tet_volume(p[0], q, p[2], p[3]),
            det3_tet_volume(p[0], p[1], q, p[3]),
            det3_tet_volume(p[0], p[1], p[2], q),
        ];
        parts.iter().all(|&w| w * v.signum() >= -1e-12 * v.abs())
    };
    // bucket the tets on a coarse grid so each sample only tests its neighbours
    const G: usize = 64;
    let cell = |v: f64, lo: f64, hi: f64| (((v - lo) / (hi - lo).max(1e-300)) * G as f64).clamp(0.0, (G - 1) as f64) as usize;
    let mut buckets = vec![Vec::new(); G * G];
    for (i, p) in crossing.iter().enumerate() {
        let bx = p.iter().map(|q| q[0]).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
        let by = p.iter().map(|q| q[1]).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
        for j in cell(by.0, y0, y1)..=cell(by.1, y0, y1) {
            for k in cell(bx.0, x0, x1)..=cell(bx.1, x0, x1) {
                buckets[j * G + k].push(i);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let q = [x0 + (x1 - x0) * rng.gen::<f64>(), y0 + (y1 - y0) * rng.gen::<f64>(), z];
        let b = &buckets[cell(q[1], y0, y1) * G + cell(q[0], x0, x1)];
        if b.iter().any(|&i| inside_tet(&crossing[i], q)) {
            hits += 1;
        }
    }
    let box_area = (x1 - x0) * (y1 - y0);
    let frac = hits as f64 / samples as f64;
    OracleResult {
        value: frac * box_area,
        method: "Monte-Carlo section sampling",
        tolerance: 3.0 * (frac * (1.0 - frac) / samples as f64).sqrt() * box_area,
    }
}
