//! ASCII interchange formats: TetGen `.node`/`.ele`, per-node `.field`, per-element
//! `.vfield`, Wavefront OBJ and TetGen `.poly`.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! save/load cycle reproduces coordinates bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::mesh::{TetMesh, TriMesh};

/// Meaningful lines of a TetGen-style file: comments stripped, blanks skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = l.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, name: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(name, line, format!("cannot parse `{tok}`")))
}

/// Parses `.node` text; returns points and the detected index base (0 or 1).
pub fn parse_node(text: &str, name: &str) -> Result<(Vec<Point>, usize)> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "empty node file"))?;
    let count: usize = parse_num(header[0], name, hline)?;
    if header.len() > 1 && header[1] != "3" {
        return Err(Error::parse(name, hline, "only 3D node files are supported"));
    }
    let mut points = Vec::with_capacity(count);
    let mut base = 0;
    for (line, tok) in lines {
        if tok.len() < 4 {
            return Err(Error::parse(name, line, "expected `index x y z`"));
        }
        let idx: usize = parse_num(tok[0], name, line)?;
        if points.is_empty() {
            if idx > 1 {
                return Err(Error::parse(name, line, "first node index must be 0 or 1"));
            }
            base = idx;
        }
        if idx != points.len() + base {
            return Err(Error::parse(name, line, format!("node index {idx} out of sequence")));
        }
        if points.len() == count {
            return Err(Error::parse(name, line, format!("more than the declared {count} nodes")));
        }
        points.push(Point::new(
            parse_num(tok[1], name, line)?,
            parse_num(tok[2], name, line)?,
            parse_num(tok[3], name, line)?,
        ));
    }
    if points.len() != count {
        return Err(Error::parse(
            name,
            hline,
            format!("declared {count} nodes, found {}", points.len()),
        ));
    }
    Ok((points, base))
}

/// Parses `.ele` text using the node file's index base.
pub fn parse_ele(text: &str, name: &str, base: usize, node_count: usize) -> Result<Vec<[usize; 4]>> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "empty element file"))?;
    let count: usize = parse_num(header[0], name, hline)?;
    if header.len() > 1 && header[1] != "4" {
        return Err(Error::parse(name, hline, "only linear tetrahedra (4 nodes) are supported"));
    }
    let mut tets = Vec::with_capacity(count);
    for (line, tok) in lines {
        if tok.len() < 5 {
            return Err(Error::parse(name, line, "expected `index n1 n2 n3 n4`"));
        }
        if tets.len() == count {
            return Err(Error::parse(name, line, format!("more than the declared {count} elements")));
        }
        let mut tet = [0usize; 4];
        for k in 0..4 {
            let raw: usize = parse_num(tok[k + 1], name, line)?;
            if raw < base || raw - base >= node_count {
                return Err(Error::parse(
                    name,
                    line,
                    format!("node index {raw} out of range ({node_count} nodes)"),
                ));
            }
            tet[k] = raw - base;
        }
        tets.push(tet);
    }
    if tets.len() != count {
        return Err(Error::parse(
            name,
            hline,
            format!("declared {count} elements, found {}", tets.len()),
        ));
    }
    Ok(tets)
}

/// `(stem.node, stem.ele)` for a path given with or without either extension.
pub fn tet_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("node") | Some("ele") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("node"), with("ele"))
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

pub fn load_tet_mesh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let (node_path, ele_path) = tet_paths(path.as_ref());
    let (points, base) = parse_node(&read(&node_path)?, &node_path.display().to_string())?;
    let tets = parse_ele(
        &read(&ele_path)?,
        &ele_path.display().to_string(),
        base,
        points.len(),
    )?;
    TetMesh::new(points, tets)
}

pub fn format_node(mesh: &TetMesh) -> String {
    let mut s = format!("{} 3 0 0\n", mesh.node_count());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i + 1, p.x, p.y, p.z);
    }
    s
}

pub fn format_ele(mesh: &TetMesh) -> String {
    let mut s = format!("{} 4 0\n", mesh.tet_count());
    for (i, t) in mesh.tets().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    s
}

pub fn save_tet_mesh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    let (node_path, ele_path) = tet_paths(path.as_ref());
    fs::write(node_path, format_node(mesh))?;
    fs::write(ele_path, format_ele(mesh))?;
    Ok(())
}

pub fn save_scalars(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        let _ = writeln!(s, "{v}");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn load_scalars(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    data_lines(&read(path)?)
        .map(|(line, tok)| parse_num(tok[0], &name, line))
        .collect()
}

pub fn save_vectors(values: &[Vector], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 60);
    for v in values {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<Vec<Vector>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    data_lines(&read(path)?)
        .map(|(line, tok)| {
            if tok.len() < 3 {
                return Err(Error::parse(&name, line, "expected `x y z`"));
            }
            Ok(Vector::new(
                parse_num(tok[0], &name, line)?,
                parse_num(tok[1], &name, line)?,
                parse_num(tok[2], &name, line)?,
            ))
        })
        .collect()
}

pub fn format_obj(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_obj(mesh))?;
    Ok(())
}

/// Reads `v` and triangular `f` records; everything else is ignored.
pub fn parse_obj(text: &str, name: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.first() {
            Some(&"v") if tok.len() >= 4 => vertices.push(Point::new(
                parse_num(tok[1], name, line)?,
                parse_num(tok[2], name, line)?,
                parse_num(tok[3], name, line)?,
            )),
            Some(&"f") => {
                if tok.len() != 4 {
                    return Err(Error::parse(name, line, "only triangular faces are supported"));
                }
                let mut f = [0usize; 3];
                for k in 0..3 {
                    let idx = tok[k + 1].split('/').next().unwrap_or("");
                    let raw: usize = parse_num(idx, name, line)?;
                    if raw == 0 || raw > vertices.len() {
                        return Err(Error::parse(name, line, format!("vertex index {raw} out of range")));
                    }
                    f[k] = raw - 1;
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    parse_obj(&read(path)?, &path.display().to_string())
}

/// TetGen piecewise-linear complex: the outer hull plus constraint surfaces
/// (e.g. the model boundary) and hole seed points.
pub fn format_poly(outer: &TriMesh, constraints: &[&TriMesh], holes: &[Point]) -> String {
    let mut s = String::new();
    let total_nodes: usize = outer.vertices().len() + constraints.iter().map(|m| m.vertices().len()).sum::<usize>();
    let total_faces: usize = outer.faces().len() + constraints.iter().map(|m| m.faces().len()).sum::<usize>();
    let _ = writeln!(s, "# part 1: nodes\n{total_nodes} 3 0 0");
    let mut idx = 1;
    for m in std::iter::once(outer).chain(constraints.iter().copied()) {
        for p in m.vertices() {
            let _ = writeln!(s, "{idx} {} {} {}", p.x, p.y, p.z);
            idx += 1;
        }
    }
    let _ = writeln!(s, "# part 2: facets\n{total_faces} 0");
    let mut offset = 1;
    for m in std::iter::once(outer).chain(constraints.iter().copied()) {
        for f in m.faces() {
            let _ = writeln!(s, "1\n3 {} {} {}", f[0] + offset, f[1] + offset, f[2] + offset);
        }
        offset += m.vertices().len();
    }
    let _ = writeln!(s, "# part 3: holes\n{}", holes.len());
    for (i, h) in holes.iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i + 1, h.x, h.y, h.z);
    }
    let _ = writeln!(s, "# part 4: regions\n0");
    s
}
