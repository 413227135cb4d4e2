//! Overhang faces under spatially varying printing directions, descent trajectories
//! from overhang vertices to the platform, the convex envelope around model and
//! trajectories, and the split of an envelope mesh into model and support tets.

mod domain;
mod hull;

pub use domain::{assemble_support_domain, clip_to_hull, merge_meshes, SupportDomain};
pub use hull::{build_conservative_hull, convex_hull, ConvexHull};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geom::{rotate_toward, Point, Vector};
use crate::mesh::TetMesh;

/// Boundary faces violating the self-support cone and their corner nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverhangSet {
    /// Indices into the model's boundary faces, ascending.
    pub faces: Vec<usize>,
    /// Node indices of those faces, ascending and deduplicated.
    pub vertices: Vec<usize>,
}

impl OverhangSet {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

pub(crate) fn check_alpha(alpha_deg: f64) -> Result<()> {
    if !(0.0..90.0).contains(&alpha_deg) {
        return Err(Error::InvalidParameter(format!(
            "self-support angle must lie in [0, 90) degrees, got {alpha_deg}"
        )));
    }
    Ok(())
}

/// A face is an overhang when `n_f . d_p + sin(alpha) <= 0`, with `d_p` the direction
/// of the tet owning the face.
pub fn is_overhang(normal: &Vector, dir: &Vector, alpha_deg: f64) -> bool {
    normal.dot(dir) + alpha_deg.to_radians().sin() <= 0.0
}

pub fn detect_overhangs(mesh: &TetMesh, dirs: &VectorField, alpha_deg: f64) -> Result<OverhangSet> {
    check_alpha(alpha_deg)?;
    if dirs.len() != mesh.tet_count() {
        return Err(Error::InvalidParameter(format!(
            "{} directions for {} tets",
            dirs.len(),
            mesh.tet_count()
        )));
    }
    let mut set = OverhangSet::default();
    for (f, &owner) in mesh.boundary_owner().iter().enumerate() {
        if is_overhang(&mesh.boundary_normal(f), &dirs.vectors()[owner], alpha_deg) {
            set.faces.push(f);
            set.vertices.extend(mesh.boundary_faces()[f]);
        }
    }
    set.vertices.sort_unstable();
    set.vertices.dedup();
    Ok(set)
}

/// Drops overhang faces lying flat on the platform; they are carried by the bed.
pub fn exclude_platform_faces(mesh: &TetMesh, set: &OverhangSet, platform_z: f64) -> OverhangSet {
    let tol = 1e-6;
    let mut out = OverhangSet::default();
    for &f in &set.faces {
        let face = mesh.boundary_faces()[f];
        if face.iter().all(|&v| mesh.nodes()[v].z <= platform_z + tol) {
            continue;
        }
        out.faces.push(f);
        out.vertices.extend(face);
    }
    out.vertices.sort_unstable();
    out.vertices.dedup();
    out
}

/// Direction of each overhang vertex: that of the owner of its lowest-index overhang face.
pub fn vertex_directions(mesh: &TetMesh, overhangs: &OverhangSet, dirs: &VectorField) -> Vec<(usize, Vector)> {
    let mut first: std::collections::BTreeMap<usize, Vector> = std::collections::BTreeMap::new();
    for &f in &overhangs.faces {
        let d = dirs.vectors()[mesh.boundary_owner()[f]];
        for v in mesh.boundary_faces()[f] {
            first.entry(v).or_insert(d);
        }
    }
    first.into_iter().collect()
}

/// Polyline descending from an overhang vertex to the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
}

/// Descent parameters of [`trace_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub alpha_deg: f64,
    pub step: f64,
    /// Per-step turn as a fraction of alpha.
    pub turn_fraction: f64,
    pub platform_z: f64,
}

impl DescentConfig {
    pub fn new(alpha_deg: f64, step: f64) -> Self {
        Self {
            alpha_deg,
            step,
            turn_fraction: 1.0 / 20.0,
            platform_z: 0.0,
        }
    }
}

const MAX_TRAJECTORY_STEPS: usize = 1_000_000;

/// Moves from `start` along `-d_p` in steps of `cfg.step`, turning the direction
/// toward straight down by `alpha * turn_fraction` per step, until the next step
/// would pass below the platform.
pub fn trace_trajectory(start: &Point, d_p: &Vector, cfg: &DescentConfig) -> Result<Trajectory> {
    if !(cfg.step > 0.0) || !cfg.step.is_finite() {
        return Err(Error::InvalidParameter(format!("trajectory step must be positive, got {}", cfg.step)));
    }
    if !(cfg.turn_fraction > 0.0) {
        return Err(Error::InvalidParameter("turn fraction must be positive".into()));
    }
    check_alpha(cfg.alpha_deg)?;
    if start.z < cfg.platform_z {
        return Err(Error::InvalidParameter(format!(
            "trajectory start z = {} lies below the platform",
            start.z
        )));
    }
    if d_p.norm() == 0.0 {
        return Err(Error::Degenerate("zero printing direction".into()));
    }
    let down = -Vector::z();
    let turn = cfg.alpha_deg.to_radians() * cfg.turn_fraction;
    let mut u = -d_p.normalize();
    let mut p = *start;
    let mut points = vec![p];
    for _ in 0..MAX_TRAJECTORY_STEPS {
        let next = p + u * cfg.step;
        if next.z < cfg.platform_z {
            return Ok(Trajectory { points });
        }
        p = next;
        points.push(p);
        if u != down {
            // alpha = 0 never turns; fall straight down instead of looping forever
            u = if turn > 0.0 { rotate_toward(&u, &down, turn) } else { down };
        }
    }
    Err(Error::Degenerate("trajectory did not reach the platform".into()))
}

/// One trajectory per overhang vertex.
pub fn overhang_trajectories(
    mesh: &TetMesh,
    overhangs: &OverhangSet,
    dirs: &VectorField,
    cfg: &DescentConfig,
) -> Result<Vec<Trajectory>> {
    vertex_directions(mesh, overhangs, dirs)
        .into_iter()
        .map(|(v, d)| trace_trajectory(&mesh.nodes()[v], &d, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::angle_between;

    #[test]
    fn cone_condition_hand_cases() {
        assert!(is_overhang(&-Vector::z(), &Vector::z(), 45.0));
        assert!(!is_overhang(&Vector::z(), &Vector::z(), 45.0));
        assert!(is_overhang(&Vector::x(), &Vector::z(), 0.0));
    }

    #[test]
    fn alpha_range_is_checked() {
        assert!(check_alpha(90.0).is_err());
        assert!(check_alpha(-1.0).is_err());
        assert!(check_alpha(0.0).is_ok());
    }

    #[test]
    fn vertical_trajectory() {
        let t = trace_trajectory(&Point::new(0.0, 0.0, 10.0), &Vector::z(), &DescentConfig::new(45.0, 1.0)).unwrap();
        assert_eq!(t.points.len(), 11);
        assert!(t.points.last().unwrap().z.abs() < 1e-12);
    }

    #[test]
    fn horizontal_start_turns_down_in_forty_steps() {
        let cfg = DescentConfig::new(45.0, 0.1);
        let t = trace_trajectory(&Point::new(0.0, 0.0, 50.0), &Vector::x(), &cfg).unwrap();
        let dirs: Vec<Vector> = t.points.windows(2).map(|w| (w[1] - w[0]).normalize()).collect();
        assert!((dirs[0] + Vector::x()).norm() < 1e-12);
        let first_down = dirs.iter().position(|d| (d + Vector::z()).norm() < 1e-9).unwrap();
        assert_eq!(first_down, 40);
        for w in dirs.windows(2) {
            assert!(angle_between(&w[0], &w[1]) <= 45f64.to_radians() / 20.0 + 1e-9);
        }
    }

    #[test]
    fn start_below_platform_fails() {
        assert!(trace_trajectory(&Point::new(0.0, 0.0, -1.0), &Vector::z(), &DescentConfig::new(45.0, 1.0)).is_err());
    }
}
