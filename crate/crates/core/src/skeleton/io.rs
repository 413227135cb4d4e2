//! `.skel` text format: `v x y z layer count` lines followed by `e i j` lines
//! (0-based node indices).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{NodeKind, SkeletonGraph, SkeletonNode};
use crate::error::{Error, Result};
use crate::geom::Point;

pub fn format_skel(g: &SkeletonGraph) -> String {
    let mut s = String::new();
    for n in &g.nodes {
        let p = n.position;
        let _ = writeln!(s, "v {} {} {} {} {}", p.x, p.y, p.z, n.layer, n.branch_count);
    }
    for &(a, b) in &g.edges {
        let _ = writeln!(s, "e {a} {b}");
    }
    s
}

pub fn save_skel(g: &SkeletonGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_skel(g))?;
    Ok(())
}

pub fn load_skel(path: impl AsRef<Path>) -> Result<SkeletonGraph> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    parse_skel(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn parse_skel(text: &str, name: &str) -> Result<SkeletonGraph> {
    let mut g = SkeletonGraph::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "v" if tok.len() == 6 => {
                let f = |k: usize| {
                    tok[k]
                        .parse::<f64>()
                        .map_err(|_| Error::parse(name, ln, format!("bad coordinate `{}`", tok[k])))
                };
                let layer = tok[4]
                    .parse::<i64>()
                    .map_err(|_| Error::parse(name, ln, format!("bad layer `{}`", tok[4])))?;
                let count = tok[5]
                    .parse::<u64>()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| Error::parse(name, ln, format!("bad branch count `{}`", tok[5])))?;
                if !g.edges.is_empty() {
                    return Err(Error::parse(name, ln, "vertex after edge records"));
                }
                g.nodes.push(SkeletonNode {
                    position: Point::new(f(1)?, f(2)?, f(3)?),
                    layer,
                    branch_count: count,
                    kind: NodeKind::Internal,
                    down_dir: None,
                    field_value: None,
                });
            }
            "e" if tok.len() == 3 => {
                let idx = |k: usize| {
                    tok[k]
                        .parse::<usize>()
                        .ok()
                        .filter(|&v| v < g.nodes.len())
                        .ok_or_else(|| Error::parse(name, ln, format!("edge endpoint `{}` out of range", tok[k])))
                };
                let e = (idx(1)?, idx(2)?);
                g.edges.push(e);
            }
            _ => return Err(Error::parse(name, ln, format!("unrecognized record `{line}`"))),
        }
    }
    g.classify();
    Ok(g)
}
