//! Single-triangle primitives in linear RGB space.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::color::{IlluminantAxis, LinearColor};
use crate::error::{Error, Result};

/// Triangles with area at or below this are treated as segments.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Self;
    #[inline]
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// A triangle of a structure: `v0` and `v1` are the illuminant axis
/// endpoints, `v2` the colored vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle3 {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
}

/// Affine weights of a point with respect to a [`Triangle3`]. Weights may be
/// negative for points outside the triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barycentric {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Barycentric {
    pub const fn new(w0: f64, w1: f64, w2: f64) -> Self {
        Self { w0, w1, w2 }
    }

    pub fn sum(self) -> f64 {
        self.w0 + self.w1 + self.w2
    }
}

/// Which Voronoi feature of the triangle holds the closest point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    Vertex(u8),
    Edge(u8, u8),
    Face,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub distance: f64,
    pub feature: Feature,
}

impl Triangle3 {
    pub const fn new(v0: Vec3, v1: Vec3, v2: Vec3) -> Self {
        Self { v0, v1, v2 }
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.v1 - self.v0).cross(self.v2 - self.v0).norm()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= DEGENERATE_AREA
    }

    pub fn vertex(&self, i: u8) -> Vec3 {
        match i {
            0 => self.v0,
            1 => self.v1,
            _ => self.v2,
        }
    }

    pub fn closest_point(&self, p: Vec3) -> ClosestPoint {
        let (point, feature) =
            if self.is_degenerate() { self.closest_on_longest_edge(p) } else { self.closest_voronoi(p) };
        ClosestPoint { point, distance: (p - point).norm(), feature }
    }

    /// Squared distance to the closed triangle.
    #[inline]
    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let q =
            if self.is_degenerate() { self.closest_on_longest_edge(p).0 } else { self.closest_voronoi(p).0 };
        (p - q).norm_squared()
    }

    // Vertex/edge/face region case analysis.
    #[inline]
    pub(crate) fn closest_voronoi(&self, p: Vec3) -> (Vec3, Feature) {
        let (a, b, c) = (self.v0, self.v1, self.v2);
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(ap);
        let d2 = ac.dot(ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return (a, Feature::Vertex(0));
        }

        let bp = p - b;
        let d3 = ab.dot(bp);
        let d4 = ac.dot(bp);
        if d3 >= 0.0 && d4 <= d3 {
            return (b, Feature::Vertex(1));
        }

        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return (a + ab * v, Feature::Edge(0, 1));
        }

        let cp = p - c;
        let d5 = ab.dot(cp);
        let d6 = ac.dot(cp);
        if d6 >= 0.0 && d5 <= d6 {
            return (c, Feature::Vertex(2));
        }

        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return (a + ac * w, Feature::Edge(0, 2));
        }

        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return (b + (c - b) * w, Feature::Edge(1, 2));
        }

        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        (a + ab * v + ac * w, Feature::Face)
    }

    pub(crate) fn closest_on_longest_edge(&self, p: Vec3) -> (Vec3, Feature) {
        let edges = [(0u8, 1u8), (1, 2), (0, 2)];
        let (i, j) = edges
            .into_iter()
            .max_by(|&(a0, a1), &(b0, b1)| {
                let la = (self.vertex(a1) - self.vertex(a0)).norm_squared();
                let lb = (self.vertex(b1) - self.vertex(b0)).norm_squared();
                la.total_cmp(&lb)
            })
            .expect("three edges");
        let (s, e) = (self.vertex(i), self.vertex(j));
        let d = e - s;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return (s, Feature::Vertex(i));
        }
        let t = ((p - s).dot(d) / len2).clamp(0.0, 1.0);
        let feature = if t == 0.0 {
            Feature::Vertex(i)
        } else if t == 1.0 {
            Feature::Vertex(j)
        } else {
            Feature::Edge(i, j)
        };
        (s + d * t, feature)
    }

    /// Affine weights of the projection of `p` onto the triangle's plane.
    pub fn barycentric_of(&self, p: Vec3) -> Result<Barycentric> {
        let area = self.area();
        if area <= DEGENERATE_AREA {
            return Err(Error::DegenerateTriangle { area });
        }
        let e0 = self.v1 - self.v0;
        let e1 = self.v2 - self.v0;
        let d = p - self.v0;
        let d00 = e0.dot(e0);
        let d01 = e0.dot(e1);
        let d11 = e1.dot(e1);
        let d20 = d.dot(e0);
        let d21 = d.dot(e1);
        let denom = d00 * d11 - d01 * d01;
        let w1 = (d11 * d20 - d01 * d21) / denom;
        let w2 = (d00 * d21 - d01 * d20) / denom;
        Ok(Barycentric::new(1.0 - w1 - w2, w1, w2))
    }

    pub fn apply_barycentric(&self, b: Barycentric) -> Result<Vec3> {
        let sum = b.sum();
        if sum.is_nan() || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::WeightSum { sum });
        }
        Ok(self.v0 * b.w0 + self.v1 * b.w1 + self.v2 * b.w2)
    }

    /// Orthogonal projection of `p` onto the triangle's supporting plane.
    pub fn project_to_plane(&self, p: Vec3) -> Vec3 {
        let n = (self.v1 - self.v0).cross(self.v2 - self.v0);
        let n2 = n.norm_squared();
        if n2 == 0.0 {
            return p;
        }
        p - n * ((p - self.v0).dot(n) / n2)
    }
}

pub fn closest_point(t: &Triangle3, p: Vec3) -> ClosestPoint {
    t.closest_point(p)
}

pub fn barycentric_of(t: &Triangle3, p: Vec3) -> Result<Barycentric> {
    t.barycentric_of(p)
}

pub fn apply_barycentric(t: &Triangle3, b: Barycentric) -> Result<Vec3> {
    t.apply_barycentric(b)
}

/// Rigidly rotates `p` about the axis line by `delta` radians
/// (counter-clockwise looking down from `b` towards `a`).
pub fn rotate_about_axis(p: Vec3, axis: &IlluminantAxis, delta: f64) -> Vec3 {
    let u = axis.direction();
    let d = p - axis.origin();
    let parallel = u * d.dot(u);
    let perp = d - parallel;
    let (sin, cos) = delta.sin_cos();
    axis.origin() + parallel + perp * cos + u.cross(perp) * sin
}

pub fn rotate_color(c: LinearColor, axis: &IlluminantAxis, delta: f64) -> LinearColor {
    rotate_about_axis(c.into(), axis, delta).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::wrap_angle;
    use crate::testkit::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn example_triangle() -> Triangle3 {
        Triangle3::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.5))
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn closest_point_examples() {
        let t = example_triangle();
        let on = t.closest_point(Vec3::new(0.5, 0.0, 0.5));
        assert!(on.distance < 1e-15);
        assert!(close(on.point, Vec3::new(0.5, 0.0, 0.5), 1e-15));

        let above = t.closest_point(Vec3::new(0.5, 0.3, 0.5));
        assert!(close(above.point, Vec3::new(0.5, 0.0, 0.5), 1e-12));
        assert!((above.distance - 0.3).abs() < 1e-12);
        let grid = oracle::closest_point_grid(&t, Vec3::new(0.5, 0.3, 0.5), 2000);
        assert!((grid.distance - 0.3).abs() < 1e-6);

        let beyond = t.closest_point(Vec3::new(2.0, 0.0, 0.5));
        assert_eq!(beyond.feature, Feature::Vertex(2));
        assert!(close(beyond.point, Vec3::new(1.0, 0.0, 0.5), 1e-15));
        assert!((beyond.distance - 1.0).abs() < 1e-15);
        let grid = oracle::closest_point_grid(&t, Vec3::new(2.0, 0.0, 0.5), 2000);
        assert!((grid.distance - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_triangle_uses_longest_edge() {
        let t = Triangle3::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), Vec3::new(0.5, 0.5, 0.5));
        assert!(t.is_degenerate());
        let c = t.closest_point(Vec3::new(1.0, 0.0, 0.0));
        assert!(close(c.point, Vec3::new(1.0, 1.0, 1.0) / 3.0, 1e-12));
        assert!(t.barycentric_of(Vec3::ZERO).is_err());
    }

    #[test]
    fn barycentric_examples() {
        let t = example_triangle();
        let b = t.barycentric_of(t.v2).unwrap();
        assert!((b.w0).abs() < 1e-15 && (b.w1).abs() < 1e-15 && (b.w2 - 1.0).abs() < 1e-15);
        let mid = t.barycentric_of((t.v0 + t.v1) * 0.5).unwrap();
        assert!((mid.w0 - 0.5).abs() < 1e-15 && (mid.w1 - 0.5).abs() < 1e-15 && mid.w2.abs() < 1e-15);

        // Beyond edge v0v2, off-plane.
        let p = Vec3::new(1.0, 0.4, 0.0);
        let b = t.barycentric_of(p).unwrap();
        assert!(b.w1 < 0.0);
        assert!((b.sum() - 1.0).abs() < 1e-12);
        let back = t.apply_barycentric(b).unwrap();
        assert!(close(back, t.project_to_plane(p), 1e-9));
    }

    #[test]
    fn apply_barycentric_examples() {
        let t = example_triangle();
        assert_eq!(t.apply_barycentric(Barycentric::new(1.0, 0.0, 0.0)).unwrap(), t.v0);
        let third = 1.0 / 3.0;
        let centroid = t.apply_barycentric(Barycentric::new(third, third, third)).unwrap();
        assert!(close(centroid, (t.v0 + t.v1 + t.v2) / 3.0, 1e-15));
        assert!(matches!(t.apply_barycentric(Barycentric::new(0.5, 0.5, 0.5)), Err(Error::WeightSum { .. })));
    }

    #[test]
    fn rotation_examples() {
        let axis = IlluminantAxis::gray();
        let p = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(rotate_about_axis(p, &axis, 0.0), p);
        let q = rotate_about_axis(p, &axis, 2.0 * PI / 3.0);
        let expected = oracle::rodrigues(p, Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), 2.0 * PI / 3.0);
        assert!(close(expected, Vec3::new(0.0, 1.0, 0.0), 1e-12));
        assert!(close(q, expected, 1e-12));
        assert!(close(rotate_about_axis(p, &axis, 2.0 * PI), p, 1e-9));
    }

    #[test]
    fn zero_distance_iff_inside_against_grid() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 200 {
            let t = oracle::random_triangle(&mut rng);
            let p = if rng.gen_bool(0.5) {
                // In-plane sample, possibly outside.
                let (s, u): (f64, f64) = (rng.gen_range(-0.3..1.0), rng.gen_range(-0.3..1.0));
                t.v0 + (t.v1 - t.v0) * s + (t.v2 - t.v0) * u
            } else {
                oracle::random_point(&mut rng)
            };
            let got = t.closest_point(p);
            let grid = oracle::closest_point_grid(&t, p, 300);
            assert!(got.distance <= grid.distance + 1e-12);
            assert_eq!(got.distance < 1e-9, grid.inside, "p={p:?} t={t:?}");
            checked += 1;
        }
    }

    fn vec_strategy() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-1.0..2.0f64).prop_map(|[x, y, z]| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn distance_bounded_by_vertices(a in vec_strategy(), b in vec_strategy(), c in vec_strategy(), p in vec_strategy()) {
            let t = Triangle3::new(a, b, c);
            let d = t.closest_point(p).distance;
            let nearest_vertex = (p - a).norm().min((p - b).norm()).min((p - c).norm());
            prop_assert!(d <= nearest_vertex + 1e-12);
        }

        #[test]
        fn barycentric_weights_sum_to_one(a in vec_strategy(), b in vec_strategy(), c in vec_strategy(), p in vec_strategy()) {
            let t = Triangle3::new(a, b, c);
            prop_assume!(t.area() > 1e-3);
            let w = t.barycentric_of(p).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-9);
            let back = t.apply_barycentric(w).unwrap();
            prop_assert!((back - t.project_to_plane(p)).norm() < 1e-9);
        }

        #[test]
        fn rotation_preserves_radius_and_height(
            p in vec_strategy(),
            delta in -7.0f64..7.0,
        ) {
            let axis = IlluminantAxis::new(
                LinearColor::new(0.05, 0.0, 0.1),
                LinearColor::new(1.0, 0.9, 0.95),
            ).unwrap();
            let before = axis.to_cylindrical(p.into());
            prop_assume!(before.r > 1e-3);
            let after = axis.to_cylindrical(rotate_about_axis(p, &axis, delta).into());
            prop_assert!((after.r - before.r).abs() < 1e-9);
            prop_assert!((after.h - before.h).abs() < 1e-9);
            prop_assert!(wrap_angle(after.theta - before.theta - delta).abs() < 1e-9);
        }
    }
}
