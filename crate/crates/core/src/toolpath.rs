//! Contour-parallel toolpaths on layer patches and the waypoint program format.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::mesh::TriMesh;
use crate::slicer::Layer;
use crate::trim::TrimmedLayer;

/// Layer surface with the unit printing direction of every face.
#[derive(Debug, Clone, Default)]
pub struct LayerPatch {
    pub surface: TriMesh,
    pub face_dirs: Vec<Vector>,
}

impl LayerPatch {
    pub fn new(surface: TriMesh, face_dirs: Vec<Vector>) -> Result<Self> {
        if face_dirs.len() != surface.faces().len() {
            return Err(Error::InvalidParameter(format!(
                "{} face directions for {} faces",
                face_dirs.len(),
                surface.faces().len()
            )));
        }
        let face_dirs = face_dirs
            .into_iter()
            .map(|d| d.try_normalize(0.0).unwrap_or_else(Vector::z))
            .collect();
        Ok(Self { surface, face_dirs })
    }

    pub fn from_layer(layer: &Layer) -> Self {
        let dirs = (0..layer.surface.faces().len()).map(|f| layer.face_direction(f)).collect();
        Self {
            surface: layer.surface.clone(),
            face_dirs: dirs,
        }
    }

    /// `source` is the untrimmed layer the trimmed faces were cut from.
    pub fn from_trimmed(trimmed: &TrimmedLayer, source: &Layer) -> Self {
        let dirs = trimmed.source_faces.iter().map(|&f| source.face_direction(f)).collect();
        Self {
            surface: trimmed.surface.clone(),
            face_dirs: dirs,
        }
    }

    /// Patch whose faces all point along their own normals.
    pub fn from_surface(surface: TriMesh) -> Self {
        let dirs = (0..surface.faces().len())
            .map(|f| {
                let n = surface.face_normal(f);
                if n == Vector::zeros() {
                    Vector::z()
                } else {
                    n
                }
            })
            .collect();
        Self { surface, face_dirs: dirs }
    }
}

/// Polyline on a layer with a unit orientation per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<Point>,
    pub normals: Vec<Vector>,
    pub closed: bool,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Path length including the closing segment of closed loops.
    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let mut l: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && n > 1 {
            l += (self.points[0] - self.points[n - 1]).norm();
        }
        l
    }

    /// Inserts evenly spaced points so no segment exceeds `max_len`.
    pub fn subdivided(&self, max_len: f64) -> Contour {
        if !(max_len > 0.0) || self.points.len() < 2 {
            return self.clone();
        }
        let n = self.points.len();
        let segs = if self.closed { n } else { n - 1 };
        let mut out = Contour {
            points: Vec::new(),
            normals: Vec::new(),
            closed: self.closed,
        };
        for i in 0..segs {
            let (a, b) = (self.points[i], self.points[(i + 1) % n]);
            let k = ((b - a).norm() / max_len).ceil().max(1.0) as usize;
            for s in 0..k {
                out.points.push(a + (b - a) * (s as f64 / k as f64));
                out.normals.push(self.normals[i]);
            }
        }
        if !self.closed {
            out.points.push(self.points[n - 1]);
            out.normals.push(self.normals[n - 1]);
        }
        out
    }

    fn reversed(&self) -> Contour {
        let mut c = self.clone();
        c.points.reverse();
        c.normals.reverse();
        c
    }

    fn vector_area(&self) -> Vector {
        let n = self.points.len();
        (0..n)
            .map(|i| self.points[i].coords.cross(&self.points[(i + 1) % n].coords))
            .sum::<Vector>()
            * 0.5
    }
}

/// Boundary loops of every patch, counter-clockwise about the mean printing
/// direction along the loop.
pub fn boundary_contours(patch: &LayerPatch) -> Vec<Contour> {
    let mesh = &patch.surface;
    // directed boundary edge -> owning face
    let mut next: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            if mesh.adjacency()[fi][k].is_none() {
                next.entry(f[k]).or_default().push((f[(k + 1) % 3], fi));
            }
        }
    }
    let mut out = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut contour = Contour {
            points: Vec::new(),
            normals: Vec::new(),
            closed: true,
        };
        let mut v = start;
        while let Some(outgoing) = next.get_mut(&v) {
            let (w, f) = outgoing.remove(0);
            if outgoing.is_empty() {
                next.remove(&v);
            }
            contour.points.push(mesh.vertices()[v]);
            contour.normals.push(patch.face_dirs[f]);
            v = w;
            if v == start {
                break;
            }
        }
        contour.closed = v == start;
        if contour.points.len() >= 2 {
            out.push(orient_ccw(contour));
        }
    }
    out
}

fn orient_ccw(c: Contour) -> Contour {
    if !c.closed {
        return c;
    }
    let up: Vector = c.normals.iter().sum();
    if c.vector_area().dot(&up) < 0.0 {
        c.reversed()
    } else {
        c
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Distance of every vertex to the patch boundary. Sources are propagated along
/// shortest edge paths and the distance is the straight-line distance to the
/// propagated source, which removes most of the zig-zag bias of pure edge-path
/// lengths. Vertices of patches without boundary get `INFINITY`.
pub fn boundary_distance(mesh: &TriMesh) -> Vec<f64> {
    let n = mesh.vertices().len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if !nbrs[a].contains(&b) {
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut source = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for (a, _) in mesh.boundary_edges() {
        if source[a] == usize::MAX {
            dist[a] = 0.0;
            source[a] = a;
            heap.push(Entry(0.0, a));
        }
    }
    let verts = mesh.vertices();
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        let s = verts[source[u]];
        for &w in &nbrs[u] {
            let cand = (verts[w] - s).norm();
            if cand < dist[w] {
                dist[w] = cand;
                source[w] = source[u];
                heap.push(Entry(cand, w));
            }
        }
    }
    dist
}

/// Level curves of the boundary distance at `spacing, 2 spacing, ...`, extracted
/// by linear interpolation inside each face. The larger-distance side lies to the
/// left, so loops run the same way as the boundary they are offset from.
pub fn offset_contours(patch: &LayerPatch, spacing: f64) -> Result<Vec<Contour>> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidParameter(format!("contour spacing must be positive, got {spacing}")));
    }
    let mesh = &patch.surface;
    let dist = boundary_distance(mesh);
    let max = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut k = 1;
    while (k as f64) * spacing < max {
        out.extend(level_curves(patch, &dist, k as f64 * spacing));
        k += 1;
    }
    Ok(out)
}

fn level_curves(patch: &LayerPatch, dist: &[f64], level: f64) -> Vec<Contour> {
    let mesh = &patch.surface;
    let verts = mesh.vertices();
    let mut point_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut on_edge = |a: usize, b: usize, points: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *point_of.entry(key).or_insert_with(|| {
            let (p, q) = key;
            let t = (level - dist[p]) / (dist[q] - dist[p]);
            points.push(verts[p] + (verts[q] - verts[p]) * t);
            points.len() - 1
        })
    };
    // start point -> (end point, face)
    let mut segs: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    let mut has_incoming = Vec::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        if f.iter().any(|&v| !dist[v].is_finite()) {
            continue;
        }
        // orientation follows the winding, so the larger-distance corner is on the left
        let up = f.map(|v| dist[v] >= level);
        let n_up = up.iter().filter(|&&u| u).count();
        if n_up == 0 || n_up == 3 {
            continue;
        }
        let lone = (0..3).find(|&k| up[k] == (n_up == 1)).unwrap();
        let (a, b, c) = (f[lone], f[(lone + 1) % 3], f[(lone + 2) % 3]);
        let (xab, xac) = (on_edge(a, b, &mut points), on_edge(a, c, &mut points));
        let (s, e) = if n_up == 1 { (xab, xac) } else { (xac, xab) };
        segs.entry(s).or_default().push((e, fi));
        if has_incoming.len() < points.len() {
            has_incoming.resize(points.len(), false);
        }
        has_incoming[e] = true;
    }
    has_incoming.resize(points.len(), false);

    let mut out = Vec::new();
    // open chains first, from points nothing leads into
    let open_starts: Vec<usize> = segs.keys().copied().filter(|&s| !has_incoming[s]).collect();
    for start in open_starts {
        out.push(follow(&mut segs, start, &points, &patch.face_dirs));
    }
    while let Some((&start, _)) = segs.iter().next() {
        out.push(follow(&mut segs, start, &points, &patch.face_dirs));
    }
    out.retain(|c| c.points.len() >= 2);
    out
}

fn follow(segs: &mut BTreeMap<usize, Vec<(usize, usize)>>, start: usize, points: &[Point], dirs: &[Vector]) -> Contour {
    let mut c = Contour {
        points: Vec::new(),
        normals: Vec::new(),
        closed: false,
    };
    let mut v = start;
    let mut last_face = None;
    while let Some(outgoing) = segs.get_mut(&v) {
        let (w, f) = outgoing.remove(0);
        if outgoing.is_empty() {
            segs.remove(&v);
        }
        c.points.push(points[v]);
        c.normals.push(dirs[f]);
        last_face = Some(f);
        v = w;
        if v == start {
            c.closed = true;
            break;
        }
    }
    if !c.closed {
        if let Some(f) = last_face {
            c.points.push(points[v]);
            c.normals.push(dirs[f]);
        }
    }
    c
}

/// Boundary loops followed by the offset loops of one patch.
pub fn layer_contours(patch: &LayerPatch, spacing: f64, max_segment: f64) -> Result<Vec<Contour>> {
    let mut all = boundary_contours(patch);
    all.extend(offset_contours(patch, spacing)?);
    Ok(all.into_iter().map(|c| c.subdivided(max_segment)).collect())
}

/// One machine record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Point,
    pub normal: Vector,
    /// Extruded volume (mm^3) of the segment ending here.
    pub e: f64,
    pub travel: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaypointProgram {
    /// Header lines without their leading `#`.
    pub header: Vec<String>,
    pub waypoints: Vec<Waypoint>,
}

impl WaypointProgram {
    pub fn total_extrusion(&self) -> f64 {
        self.waypoints.iter().map(|w| w.e).sum()
    }
}

/// Bead cross-section of the volumetric extrusion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrusion {
    pub width: f64,
    pub thickness: f64,
}

impl Default for Extrusion {
    fn default() -> Self {
        Self {
            width: 0.8,
            thickness: 0.2,
        }
    }
}

/// Orders loops layer by layer (input order is bottom-up) and within a layer by
/// greedy nearest start point; open paths may be reversed. Every loop starts with
/// a travel move and closed loops repeat their first point at the end.
pub fn emit_waypoints(layers: &[Vec<Contour>], ext: Extrusion) -> WaypointProgram {
    let mut program = WaypointProgram {
        header: vec![
            " curvsup waypoints".to_string(),
            " columns: x y z nx ny nz e travel".to_string(),
            format!(
                " e = segment length * width * thickness (mm^3); width {} thickness {}",
                ext.width, ext.thickness
            ),
        ],
        waypoints: Vec::new(),
    };
    let area = ext.width * ext.thickness;
    let mut here: Option<Point> = None;
    for layer in layers {
        let mut left: Vec<&Contour> = layer.iter().filter(|c| !c.is_empty()).collect();
        while !left.is_empty() {
            let (pick, flip) = match here {
                None => (0, false),
                Some(h) => {
                    let mut best = (f64::INFINITY, 0, false);
                    for (i, c) in left.iter().enumerate() {
                        let d0 = (c.points[0] - h).norm();
                        if d0 < best.0 {
                            best = (d0, i, false);
                        }
                        if !c.closed {
                            let d1 = (c.points[c.len() - 1] - h).norm();
                            if d1 < best.0 {
                                best = (d1, i, true);
                            }
                        }
                    }
                    (best.1, best.2)
                }
            };
            let c = left.remove(pick);
            let c = if flip { c.reversed() } else { c.clone() };
            let mut prev = c.points[0];
            program.waypoints.push(Waypoint {
                position: prev,
                normal: c.normals[0],
                e: 0.0,
                travel: true,
            });
            let mut order: Vec<usize> = (1..c.len()).collect();
            if c.closed {
                order.push(0);
            }
            for i in order {
                let p = c.points[i];
                program.waypoints.push(Waypoint {
                    position: p,
                    normal: c.normals[i],
                    e: (p - prev).norm() * area,
                    travel: false,
                });
                prev = p;
            }
            here = Some(prev);
        }
    }
    program
}

pub fn format_waypoints(program: &WaypointProgram) -> String {
    let mut s = String::new();
    for h in &program.header {
        let _ = writeln!(s, "#{h}");
    }
    for w in &program.waypoints {
        let _ = writeln!(
            s,
            "{:.4} {:.4} {:.4} {:.6} {:.6} {:.6} {:.6} {}",
            w.position.x,
            w.position.y,
            w.position.z,
            w.normal.x,
            w.normal.y,
            w.normal.z,
            w.e,
            u8::from(w.travel)
        );
    }
    s
}

pub fn parse_waypoints(text: &str, name: &str) -> Result<WaypointProgram> {
    let mut program = WaypointProgram::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if let Some(h) = line.strip_prefix('#') {
            program.header.push(h.to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 8 {
            return Err(Error::parse(name, ln, format!("expected 8 fields, found {}", tok.len())));
        }
        let mut v = [0.0; 7];
        for k in 0..7 {
            v[k] = tok[k]
                .parse()
                .map_err(|_| Error::parse(name, ln, format!("bad number '{}'", tok[k])))?;
        }
        let travel = match tok[7] {
            "0" => false,
            "1" => true,
            t => return Err(Error::parse(name, ln, format!("travel flag must be 0 or 1, found '{t}'"))),
        };
        if v[6] < 0.0 {
            return Err(Error::parse(name, ln, "negative extrusion"));
        }
        program.waypoints.push(Waypoint {
            position: Point::new(v[0], v[1], v[2]),
            normal: Vector::new(v[3], v[4], v[5]),
            e: v[6],
            travel,
        });
    }
    Ok(program)
}

pub fn save_waypoints(path: &Path, program: &WaypointProgram) -> Result<()> {
    std::fs::write(path, format_waypoints(program))?;
    Ok(())
}

pub fn load_waypoints(path: &Path) -> Result<WaypointProgram> {
    let text = std::fs::read_to_string(path)?;
    parse_waypoints(&text, &path.display().to_string())
}
