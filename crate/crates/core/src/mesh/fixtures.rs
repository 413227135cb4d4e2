//! Procedural desk-scale test models.
//!
//! Every fixture is a structured hexahedral lattice whose cells are split into
//! tetrahedra. Model cells are a masked subset of the lattice and the paired
//! envelope uses all cells, so model tets appear verbatim inside the envelope.
//! Output is deterministic in the parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::TetMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureKind {
    Box,
    Dome,
    BridgeSlab,
    TShape,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 4] = [FixtureKind::Box, FixtureKind::Dome, FixtureKind::BridgeSlab, FixtureKind::TShape];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Box => "box",
            FixtureKind::Dome => "dome",
            FixtureKind::BridgeSlab => "bridge_slab",
            FixtureKind::TShape => "t_shape",
        }
    }

    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            FixtureKind::Box => &[
                ("lx", 10.0),
                ("ly", 10.0),
                ("lz", 10.0),
                ("pad", 0.0),
                ("cell", 2.5),
                ("split", 6.0),
            ],
            FixtureKind::Dome => &[
                ("radius", 20.0),
                ("rise", 12.0),
                ("thickness", 3.0),
                ("wall", 3.0),
                ("cell", 5.0),
            ],
            FixtureKind::BridgeSlab => &[
                ("span", 30.0),
                ("pillar_width", 5.0),
                ("depth", 15.0),
                ("clearance", 15.0),
                ("slab_thickness", 5.0),
                ("cell", 5.0),
                ("split", 6.0),
            ],
            FixtureKind::TShape => &[
                ("stem_width", 10.0),
                ("depth", 20.0),
                ("stem_height", 30.0),
                ("cantilever", 30.0),
                ("bar_thickness", 5.0),
                ("cell", 7.5),
                ("split", 6.0),
            ],
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

/// How each hexahedral cell is cut into tets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSplit {
    /// Four corner tets plus a central one; conforming through global corner parity.
    Five,
    /// Kuhn split along the main diagonal; conforming on any column-mapped lattice.
    Six,
}

/// A named fixture with dimensioned parameters (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    kind: FixtureKind,
    params: BTreeMap<&'static str, f64>,
}

/// Model mesh and an envelope lattice that contains it tet for tet.
#[derive(Debug, Clone)]
pub struct FixtureMeshes {
    pub model: TetMesh,
    pub envelope: TetMesh,
}

impl Fixture {
    pub fn new(name: &str) -> Result<Self> {
        let kind: FixtureKind = name.parse()?;
        Ok(Self {
            kind,
            params: kind.defaults().iter().copied().collect(),
        })
    }

    pub fn kind(&self) -> FixtureKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<&'static str, f64> {
        &self.params
    }

    pub fn set(mut self, key: &str, value: f64) -> Result<Self> {
        let slot = self
            .params
            .iter_mut()
            .find(|(k, _)| **k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::InvalidParameter(format!("fixture {} has no parameter `{key}`", self.kind)))?;
        *slot = value;
        Ok(self)
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    fn validate(&self) -> Result<()> {
        for (k, v) in &self.params {
            let ok = match *k {
                "pad" => *v >= 0.0,
                "split" => *v == 5.0 || *v == 6.0,
                _ => *v > 0.0,
            };
            if !ok || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{}: `{k}` = {v}", self.kind)));
            }
        }
        if self.kind == FixtureKind::Dome && self.param("rise") <= 0.0 {
            return Err(Error::InvalidParameter("dome rise must be positive".into()));
        }
        Ok(())
    }

    fn split(&self) -> CellSplit {
        match self.params.get("split") {
            Some(v) if *v == 5.0 => CellSplit::Five,
            _ => CellSplit::Six,
        }
    }

    pub fn build(&self) -> Result<FixtureMeshes> {
        self.validate()?;
        let cell = self.param("cell");
        let p = |k: &str| self.param(k);
        match self.kind {
            FixtureKind::Box => {
                let pad = p("pad");
                let grid = SegmentedGrid::new(
                    [&[pad, p("lx"), pad], &[pad, p("ly"), pad], &[p("lz"), pad]],
                    cell,
                );
                grid.build(self.split(), |s| s[0] == 1 && s[1] == 1 && s[2] == 0)
            }
            FixtureKind::TShape => {
                let grid = SegmentedGrid::new(
                    [
                        &[p("cantilever"), p("stem_width"), p("cantilever")],
                        &[p("depth")],
                        &[p("stem_height"), p("bar_thickness")],
                    ],
                    cell,
                );
                grid.build(self.split(), |s| s[2] == 1 || s[0] == 1)
            }
            FixtureKind::BridgeSlab => {
                let grid = SegmentedGrid::new(
                    [
                        &[p("pillar_width"), p("span"), p("pillar_width")],
                        &[p("depth")],
                        &[p("clearance"), p("slab_thickness")],
                    ],
                    cell,
                );
                grid.build(self.split(), |s| s[2] == 1 || s[0] != 1)
            }
            FixtureKind::Dome => self.build_dome(),
        }
    }

    /// Vaulted shell over a square footprint standing on a one-cell perimeter wall.
    /// The lower shell surface is `wall + rise * cos(pi x / 2r) * cos(pi y / 2r)`.
    fn build_dome(&self) -> Result<FixtureMeshes> {
        let r = self.param("radius");
        let rise = self.param("rise");
        let thick = self.param("thickness");
        let wall = self.param("wall");
        let cell = self.param("cell");
        let n_xy = ((2.0 * r / cell).round() as usize).max(4);
        let n_below = (((wall + rise) / cell).round() as usize).max(2);
        let n_shell = ((thick / cell).round() as usize).max(1);
        let coord = |i: usize| -r + 2.0 * r * i as f64 / n_xy as f64;
        let bottom = |x: f64, y: f64| {
            let c = (std::f64::consts::FRAC_PI_2 * x / r).cos() * (std::f64::consts::FRAC_PI_2 * y / r).cos();
            wall + rise * c.max(0.0)
        };
        let pos = |i: usize, j: usize, k: usize| {
            let (x, y) = (coord(i), coord(j));
            let zb = bottom(x, y);
            let z = if k <= n_below {
                zb * k as f64 / n_below as f64
            } else {
                zb + thick * (k - n_below) as f64 / n_shell as f64
            };
            Point::new(x, y, z)
        };
        let dims = [n_xy, n_xy, n_below + n_shell];
        let model = |i: usize, j: usize, k: usize| {
            let rim = i == 0 || j == 0 || i + 1 == n_xy || j + 1 == n_xy;
            k >= n_below || rim
        };
        let model_mesh = build_lattice(dims, &pos, model, CellSplit::Six)?;
        let envelope = build_lattice(dims, &pos, |_, _, _| true, CellSplit::Six)?;
        Ok(FixtureMeshes {
            model: model_mesh,
            envelope,
        })
    }
}

/// Model mesh of a named fixture with parameter overrides.
pub fn make_fixture(name: &str, params: &[(&str, f64)]) -> Result<TetMesh> {
    let mut f = Fixture::new(name)?;
    for &(k, v) in params {
        f = f.set(k, v)?;
    }
    Ok(f.build()?.model)
}

/// Axis-aligned lattice whose axes are concatenations of segments, each subdivided
/// into cells no larger than the requested size.
struct SegmentedGrid {
    coords: [Vec<f64>; 3],
    segment_of_cell: [Vec<usize>; 3],
}

impl SegmentedGrid {
    fn new(axes: [&[f64]; 3], cell: f64) -> Self {
        let mut coords: [Vec<f64>; 3] = Default::default();
        let mut segment_of_cell: [Vec<usize>; 3] = Default::default();
        for a in 0..3 {
            let mut c = vec![0.0];
            let mut start = 0.0;
            for (s, &len) in axes[a].iter().enumerate() {
                if len <= 0.0 {
                    continue;
                }
                let n = ((len / cell).round() as usize).max(1);
                for i in 1..=n {
                    c.push(start + len * i as f64 / n as f64);
                    segment_of_cell[a].push(s);
                }
                start += len;
            }
            coords[a] = c;
        }
        // centre x and y on the origin, keep z >= 0
        for axis in coords.iter_mut().take(2) {
            let half = axis.last().copied().unwrap_or(0.0) / 2.0;
            for v in axis.iter_mut() {
                *v -= half;
            }
        }
        Self {
            coords,
            segment_of_cell,
        }
    }

    fn build(&self, split: CellSplit, model: impl Fn([usize; 3]) -> bool) -> Result<FixtureMeshes> {
        let dims = [0, 1, 2].map(|a| self.segment_of_cell[a].len());
        let pos = |i: usize, j: usize, k: usize| Point::new(self.coords[0][i], self.coords[1][j], self.coords[2][k]);
        let seg = |i: usize, j: usize, k: usize| {
            [self.segment_of_cell[0][i], self.segment_of_cell[1][j], self.segment_of_cell[2][k]]
        };
        let model_mesh = build_lattice(dims, &pos, |i, j, k| model(seg(i, j, k)), split)?;
        let envelope = build_lattice(dims, &pos, |_, _, _| true, split)?;
        Ok(FixtureMeshes {
            model: model_mesh,
            envelope,
        })
    }
}

/// Tetrahedralizes the active cells of an `n[0] x n[1] x n[2]` lattice. Nodes are
/// numbered in lattice order after dropping unused ones.
fn build_lattice(
    n: [usize; 3],
    pos: &impl Fn(usize, usize, usize) -> Point,
    active: impl Fn(usize, usize, usize) -> bool,
    split: CellSplit,
) -> Result<TetMesh> {
    let lattice_id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;
    let mut raw_tets: Vec<[usize; 4]> = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if !active(i, j, k) {
                    continue;
                }
                let corner = |c: usize| {
                    let (a, b, d) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                    lattice_id(i + a, j + b, k + d)
                };
                match split {
                    CellSplit::Six => {
                        const PATHS: [[usize; 2]; 6] = [[1, 3], [1, 5], [2, 3], [2, 6], [4, 5], [4, 6]];
                        for [a, b] in PATHS {
                            raw_tets.push([corner(0), corner(a), corner(b), corner(7)]);
                        }
                    }
                    CellSplit::Five => {
                        let parity = |c: usize| (i + j + k + (c & 1) + ((c >> 1) & 1) + ((c >> 2) & 1)) % 2;
                        let even: Vec<usize> = (0..8).filter(|&c| parity(c) == 0).collect();
                        raw_tets.push([corner(even[0]), corner(even[1]), corner(even[2]), corner(even[3])]);
                        for c in (0..8).filter(|&c| parity(c) == 1) {
                            let nb = [c ^ 1, c ^ 2, c ^ 4];
                            raw_tets.push([corner(c), corner(nb[0]), corner(nb[1]), corner(nb[2])]);
                        }
                    }
                }
            }
        }
    }
    let total = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    let mut used = vec![false; total];
    for t in &raw_tets {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; total];
    let mut nodes = Vec::new();
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                let id = lattice_id(i, j, k);
                if used[id] {
                    remap[id] = nodes.len();
                    nodes.push(pos(i, j, k));
                }
            }
        }
    }
    let tets = raw_tets.into_iter().map(|t| t.map(|v| remap[v])).collect();
    TetMesh::new(nodes, tets)
}
