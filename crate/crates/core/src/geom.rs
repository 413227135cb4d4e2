//! Small geometric primitives shared by the mesh, slicing and tracing code.

use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn join(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflated(&self, amount: f64) -> Aabb {
        let d = Vector::repeat(amount);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector {
        self.max - self.min
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Slab test; returns the parametric entry distance if the ray meets the box before `t_max`.
    pub fn ray_entry(&self, origin: &Point, inv_dir: &Vector, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray runs inside the slab plane.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Ray/triangle intersection (Moller-Trumbore). Edges are inclusive up to a small
/// barycentric slack so rays through shared edges do not leak between triangles.
pub fn ray_triangle(origin: &Point, dir: &Vector, a: &Point, b: &Point, c: &Point) -> Option<f64> {
    ray_triangle_slack(origin, dir, a, b, c, 1e-10)
}

/// [`ray_triangle`] with an explicit barycentric slack.
pub fn ray_triangle_slack(origin: &Point, dir: &Vector, a: &Point, b: &Point, c: &Point, slack: f64) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(-slack..=1.0 + slack).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -slack || u + v > 1.0 + slack {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unnormalized (twice the area) triangle normal following the winding.
pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vector {
    (b - a).cross(&(c - a))
}

/// Angle between two vectors in radians, robust near 0 and pi.
pub fn angle_between(a: &Vector, b: &Vector) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rotate `from` toward `to` by `angle` radians inside the plane they span.
/// Returns `to` normalized when the remaining angle is not larger than `angle`.
pub fn rotate_toward(from: &Vector, to: &Vector, angle: f64) -> Vector {
    let f = from.normalize();
    let t = to.normalize();
    let total = angle_between(&f, &t);
    if total <= angle {
        return t;
    }
    let mut axis = f.cross(&t);
    if axis.norm() < 1e-15 {
        // antiparallel: any perpendicular axis spans a valid plane
        let helper = if f.x.abs() < 0.9 { Vector::x() } else { Vector::y() };
        axis = f.cross(&helper);
    }
    let axis = axis.normalize();
    let (s, c) = angle.sin_cos();
    // Rodrigues; axis is perpendicular to f so the last term vanishes.
    (f * c + axis.cross(&f) * s).normalize()
}

/// Lexicographic comparison of points, used to canonicalize edge interpolation.
pub fn lex_less(a: &Point, b: &Point) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_triangle_interior() {
        let t = ray_triangle(
            &Point::new(0.2, 0.2, 1.0),
            &Vector::new(0.0, 0.0, -1.0),
            &Point::origin(),
            &Point::new(1.0, 0.0, 0.0),
            &Point::new(0.0, 1.0, 0.0),
        );
        assert!((t.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_misses_outside_and_parallel() {
        let a = Point::origin();
        let b = Point::new(1.0, 0.0, 0.0);
        let c = Point::new(0.0, 1.0, 0.0);
        assert!(ray_triangle(&Point::new(0.8, 0.8, 1.0), &-Vector::z(), &a, &b, &c).is_none());
        assert!(ray_triangle(&Point::new(0.1, 0.1, 1.0), &Vector::x(), &a, &b, &c).is_none());
    }

    #[test]
    fn rotate_toward_clamps_and_snaps() {
        let from = Vector::x();
        let to = -Vector::z();
        let r = rotate_toward(&from, &to, 30f64.to_radians());
        assert!((angle_between(&from, &r) - 30f64.to_radians()).abs() < 1e-12);
        assert!((angle_between(&r, &to) - 60f64.to_radians()).abs() < 1e-12);
        assert_eq!(rotate_toward(&from, &to, 2.0), to);
    }

    #[test]
    fn aabb_ray_entry() {
        let b = Aabb {
            min: Point::new(0.0, 0.0, 0.0),
            max: Point::new(1.0, 1.0, 1.0),
        };
        let d = Vector::new(0.0, 0.0, -1.0);
        let inv = d.map(|x| 1.0 / x);
        assert_eq!(b.ray_entry(&Point::new(0.5, 0.5, 3.0), &inv, 10.0), Some(2.0));
        assert_eq!(b.ray_entry(&Point::new(1.5, 0.5, 3.0), &inv, 10.0), None);
        assert_eq!(b.ray_entry(&Point::new(0.5, 0.5, 3.0), &inv, 1.0), None);
    }
}
