//! The triangular structure: an illuminant axis shared by `k` triangles,
//! each closed by a colored vertex.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{IlluminantAxis, LinearColor, RADIAL_EPS};
use crate::error::{Error, Result};
use crate::geometry::{Triangle3, Vec3};

/// Minimum angular separation between two triangles.
pub const ANGLE_SEPARATION: f64 = 1e-6;

/// Squared distances closer than this are ties during assignment, so colors
/// on the shared axis land on the lowest index regardless of rounding.
const TIE_EPS_SQ: f64 = 1e-24;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoTriangles,
    NonFinite,
    DegenerateAxis,
    VertexOnAxis { index: usize },
    CoincidentAngles { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTriangles => write!(f, "no triangles"),
            Violation::NonFinite => write!(f, "non-finite coordinate"),
            Violation::DegenerateAxis => write!(f, "degenerate illuminant axis"),
            Violation::VertexOnAxis { index } => {
                write!(f, "colored vertex on illuminant axis (vertex {index})")
            }
            Violation::CoincidentAngles { first, second } => {
                write!(f, "coincident triangle angles (vertices {first} and {second})")
            }
        }
    }
}

impl Serialize for Violation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// On-disk form of a structure, in linear RGB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub axis: AxisFile,
    pub colored: Vec<LinearColor>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisFile {
    pub a: LinearColor,
    pub b: LinearColor,
}

/// Lists every invariant the parts of a structure break.
pub fn validate(raw: &StructureFile) -> Vec<Violation> {
    let mut violations = Vec::new();
    if raw.colored.is_empty() {
        violations.push(Violation::NoTriangles);
    }
    let finite =
        raw.axis.a.is_finite() && raw.axis.b.is_finite() && raw.colored.iter().all(|c| c.is_finite());
    if !finite {
        violations.push(Violation::NonFinite);
        return violations;
    }
    let Ok(axis) = IlluminantAxis::new(raw.axis.a, raw.axis.b) else {
        violations.push(Violation::DegenerateAxis);
        return violations;
    };
    let mut angles = Vec::with_capacity(raw.colored.len());
    for (index, &c) in raw.colored.iter().enumerate() {
        let cc = axis.to_cylindrical(c);
        if cc.r < RADIAL_EPS {
            violations.push(Violation::VertexOnAxis { index });
        } else {
            angles.push((index, cc.theta));
        }
    }
    for (n, &(first, a)) in angles.iter().enumerate() {
        for &(second, b) in &angles[n + 1..] {
            if angular_distance(a, b) < ANGLE_SEPARATION {
                violations.push(Violation::CoincidentAngles { first, second });
            }
        }
    }
    violations
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// An illuminant axis and `k ≥ 1` colored vertices, kept sorted by their
/// angle about the axis.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularStructure {
    axis: IlluminantAxis,
    colored: Vec<LinearColor>,
    angles: Vec<f64>,
    triangles: Vec<Triangle3>,
}

impl TriangularStructure {
    /// Builds a structure, sorting the colored vertices by angle.
    pub fn new(axis: IlluminantAxis, colored: Vec<LinearColor>) -> Result<Self> {
        let raw = StructureFile { axis: AxisFile { a: axis.a(), b: axis.b() }, colored };
        let violations = validate(&raw);
        if !violations.is_empty() {
            return Err(Error::InvalidStructure(violations));
        }
        let mut keyed: Vec<(f64, LinearColor)> =
            raw.colored.into_iter().map(|c| (axis.to_cylindrical(c).theta, c)).collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
        let (angles, colored): (Vec<_>, Vec<_>) = keyed.into_iter().unzip();
        let triangles =
            colored.iter().map(|&c| Triangle3::new(axis.origin(), axis.end(), c.into())).collect();
        Ok(Self { axis, colored, angles, triangles })
    }

    /// `k` vertices at angles `2πi/k` from the reference direction, at
    /// radius 0.5 and mid height.
    pub fn uniform(axis: IlluminantAxis, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidStructure(vec![Violation::NoTriangles]));
        }
        let angles: Vec<f64> = (0..k).map(|i| TAU * i as f64 / k as f64).collect();
        Self::from_angles(axis, &angles)
    }

    /// Vertices at the given angles (radians), radius 0.5 and mid height.
    pub fn from_angles(axis: IlluminantAxis, angles: &[f64]) -> Result<Self> {
        let colored = angles
            .iter()
            .map(|&theta| axis.from_cylindrical(crate::color::CylindricalCoord::new(theta, 0.5, 0.5)))
            .collect();
        Self::new(axis, colored)
    }

    pub fn from_file_model(raw: StructureFile) -> Result<Self> {
        let violations = validate(&raw);
        if !violations.is_empty() {
            return Err(Error::InvalidStructure(violations));
        }
        let axis = IlluminantAxis::new(raw.axis.a, raw.axis.b)?;
        Self::new(axis, raw.colored)
    }

    pub fn to_file_model(&self) -> StructureFile {
        StructureFile { axis: AxisFile { a: self.axis.a(), b: self.axis.b() }, colored: self.colored.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StructureFile = serde_json::from_str(text)
            .map_err(|e| Error::Format { what: "structure file", reason: e.to_string() })?;
        Self::from_file_model(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_model()).expect("structure serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn axis(&self) -> &IlluminantAxis {
        &self.axis
    }

    pub fn k(&self) -> usize {
        self.colored.len()
    }

    pub fn colored(&self) -> &[LinearColor] {
        &self.colored
    }

    /// Angle of each colored vertex, ascending.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn triangles(&self) -> &[Triangle3] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> &Triangle3 {
        &self.triangles[i]
    }

    pub fn nearest_triangle(&self, c: LinearColor) -> usize {
        nearest_of(&self.triangles, c.into())
    }

    pub fn sector_of(&self, theta: f64) -> Sector {
        sector_of(theta, self)
    }
}

pub(crate) fn nearest_of(triangles: &[Triangle3], p: Vec3) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, t) in triangles.iter().enumerate() {
        let d2 = t.distance_squared(p);
        if d2 < best_d2 - TIE_EPS_SQ {
            best = i;
            best_d2 = d2;
        }
    }
    best
}

/// Index of the nearest triangle for every pixel, in pixel order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    indices: Vec<u32>,
}

impl Assignment {
    pub fn new(indices: Vec<u32>, k: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= k) {
            return Err(Error::Format {
                what: "assignment",
                reason: format!("index {bad} out of range for {k} triangles"),
            });
        }
        Ok(Self { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, pixel: usize) -> usize {
        self.indices[pixel] as usize
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Number of pixels assigned to each of `k` triangles.
    pub fn cluster_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; k];
        for &i in &self.indices {
            sizes[i as usize] += 1;
        }
        sizes
    }
}

/// Maps each color to its nearest triangle (bounded triangle distance, ties to
/// the lowest index).
pub fn assign(cloud: &[LinearColor], s: &TriangularStructure) -> Assignment {
    Assignment { indices: assign_triangles(cloud, s.triangles()) }
}

pub(crate) fn assign_triangles(cloud: &[LinearColor], triangles: &[Triangle3]) -> Vec<u32> {
    let mut out = vec![0u32; cloud.len()];
    out.par_chunks_mut(CHUNK).zip(cloud.par_chunks(CHUNK)).for_each(|(dst, src)| {
        for (d, &c) in dst.iter_mut().zip(src) {
            *d = nearest_of(triangles, c.into()) as u32;
        }
    });
    out
}

/// The angular wedge holding a color: triangles `i` and `j` (next
/// counter-clockwise) and the normalized position `alpha ∈ [0, 1)` between
/// them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub i: usize,
    pub j: usize,
    pub alpha: f64,
}

pub fn sector_of(theta: f64, s: &TriangularStructure) -> Sector {
    let angles = s.angles();
    let k = angles.len();
    if k < 2 {
        return Sector { i: 0, j: 0, alpha: 0.0 };
    }
    let (i, span) = sector_start(angles, theta);
    let j = (i + 1) % k;
    let offset = (theta - angles[i]).rem_euclid(TAU);
    let alpha = (offset / span).min(1.0 - f64::EPSILON);
    Sector { i, j, alpha }
}

/// The bracketing triangle at or clockwise of `theta`, and the angular span
/// of its sector (`2π` for a single triangle).
pub(crate) fn sector_start(angles: &[f64], theta: f64) -> (usize, f64) {
    let k = angles.len();
    if k < 2 {
        return (0, TAU);
    }
    let p = angles.partition_point(|&a| a <= theta);
    let i = if p == 0 { k - 1 } else { p - 1 };
    let j = (i + 1) % k;
    let span = (angles[j] - angles[i]).rem_euclid(TAU);
    (i, if span == 0.0 { TAU } else { span })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::CylindricalCoord;
    use crate::testkit::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn structure_at(degrees: &[f64]) -> TriangularStructure {
        let angles: Vec<f64> = degrees.iter().map(|&d| deg(d)).collect();
        TriangularStructure::from_angles(IlluminantAxis::gray(), &angles).unwrap()
    }

    #[test]
    fn vertices_sorted_by_angle() {
        let s = structure_at(&[170.0, -20.0, 60.0]);
        let a = s.angles();
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!((a[0] - deg(-20.0)).abs() < 1e-12);
    }

    #[test]
    fn validate_examples() {
        let axis = AxisFile { a: LinearColor::BLACK, b: LinearColor::WHITE };
        let empty = StructureFile { axis, colored: vec![] };
        assert_eq!(validate(&empty), vec![Violation::NoTriangles]);
        assert_eq!(Violation::NoTriangles.to_string(), "no triangles");

        let on_axis = StructureFile { axis, colored: vec![LinearColor::new(0.4, 0.4, 0.4)] };
        let v = validate(&on_axis);
        assert_eq!(v, vec![Violation::VertexOnAxis { index: 0 }]);
        assert!(v[0].to_string().starts_with("colored vertex on illuminant axis"));

        let red = LinearColor::new(1.0, 0.0, 0.0);
        let coincident = StructureFile { axis, colored: vec![red, LinearColor::new(0.5, 0.0, 0.0)] };
        let v = validate(&coincident);
        assert_eq!(v, vec![Violation::CoincidentAngles { first: 0, second: 1 }]);
        assert!(v[0].to_string().starts_with("coincident triangle angles"));

        let bad_axis = StructureFile {
            axis: AxisFile { a: LinearColor::WHITE, b: LinearColor::WHITE },
            colored: vec![red],
        };
        assert_eq!(validate(&bad_axis), vec![Violation::DegenerateAxis]);
        assert!(matches!(TriangularStructure::from_file_model(empty), Err(Error::InvalidStructure(_))));
    }

    #[test]
    fn json_round_trip_and_format() {
        let s = structure_at(&[0.0, 100.0, 230.0]);
        let text = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["axis"]["a"], serde_json::json!([0.0, 0.0, 0.0]));
        assert_eq!(v["colored"].as_array().unwrap().len(), 3);
        assert_eq!(TriangularStructure::from_json(&text).unwrap(), s);

        let invalid = r#"{"axis": {"a": [0,0,0], "b": [1,1,1]}, "colored": [[0.2,0.2,0.2]]}"#;
        let err = TriangularStructure::from_json(invalid).unwrap_err();
        assert!(err.to_string().contains("colored vertex on illuminant axis"));
        assert!(TriangularStructure::from_json("{").is_err());
    }

    #[test]
    fn assign_examples() {
        let s = structure_at(&[0.0, 120.0, 240.0]);
        let axis = s.axis();
        let on_second = axis.from_cylindrical(CylindricalCoord::new(s.angles()[2], 0.3, 0.4));
        let axis_point = LinearColor::new(0.5, 0.5, 0.5);
        let asg = assign(&[on_second, axis_point, axis.a(), axis.b()], &s);
        assert_eq!(asg.indices(), &[2, 0, 0, 0]);
    }

    #[test]
    fn assign_matches_grid_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let s = structure_at(&[10.0, 95.0, 200.0, 300.0]);
        let cloud: Vec<LinearColor> =
            (0..300).map(|_| LinearColor::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let asg = assign(&cloud, &s);
        for (n, &c) in cloud.iter().enumerate() {
            let dists: Vec<f64> =
                s.triangles().iter().map(|t| oracle::closest_point_grid(t, c.into(), 400).distance).collect();
            let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(dists[asg.get(n)] <= best + 1e-6, "pixel {n}: {dists:?} chose {}", asg.get(n));
        }
    }

    #[test]
    fn sector_examples() {
        let s = structure_at(&[0.0, 120.0]);
        let on = sector_of(s.angles()[1], &s);
        assert_eq!((on.i, on.j), (1, 0));
        assert_eq!(on.alpha, 0.0);

        let mid = sector_of(deg(60.0), &s);
        assert_eq!((mid.i, mid.j), (0, 1));
        assert!((mid.alpha - 0.5).abs() < 1e-12);

        // Explicit arithmetic: the wrap sector spans 360 - 120 = 240 degrees
        // and 180 sits 60 degrees into it.
        let wrap = sector_of(deg(180.0), &s);
        assert_eq!((wrap.i, wrap.j), (1, 0));
        assert!((wrap.alpha - 60.0 / 240.0).abs() < 1e-12);

        let below = sector_of(deg(-90.0), &s);
        assert_eq!((below.i, below.j), (1, 0));
        assert!((below.alpha - 150.0 / 240.0).abs() < 1e-12);

        let single = structure_at(&[45.0]);
        assert_eq!(sector_of(1.0, &single), Sector { i: 0, j: 0, alpha: 0.0 });
    }

    #[test]
    fn sector_alpha_wraps_through_zero_at_triangle_angles() {
        let s = structure_at(&[-150.0, -10.0, 75.0]);
        for (n, &a) in s.angles().iter().enumerate() {
            let left = sector_of(a - 1e-9, &s);
            let at = sector_of(a, &s);
            assert!(left.alpha > 1.0 - 1e-6);
            assert_eq!(left.j, n);
            assert_eq!(at.i, n);
            assert_eq!(at.alpha, 0.0);
        }
    }

    proptest! {
        #[test]
        fn sectors_bracket_theta(
            mut degs in prop::collection::btree_set(-179i32..=180, 2..6),
            theta in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let degs: Vec<f64> = std::mem::take(&mut degs).into_iter().map(f64::from).collect();
            let s = structure_at(&degs);
            let sec = sector_of(theta, &s);
            let a = s.angles();
            let off = (theta - a[sec.i]).rem_euclid(TAU);
            let span = (a[sec.j] - a[sec.i]).rem_euclid(TAU);
            prop_assert!(off <= span + 1e-12);
            prop_assert!((0.0..1.0).contains(&sec.alpha));
        }

        #[test]
        fn assign_is_permutation_equivariant(
            colors in prop::collection::vec(prop::array::uniform3(0.0..1.0f64), 1..64),
            rot in 0usize..64,
        ) {
            let s = structure_at(&[0.0, 130.0, 250.0]);
            let cloud: Vec<LinearColor> = colors.into_iter().map(LinearColor::from).collect();
            let base = assign(&cloud, &s);
            let n = cloud.len();
            let shifted: Vec<LinearColor> = (0..n).map(|i| cloud[(i + rot) % n]).collect();
            let moved = assign(&shifted, &s);
            for i in 0..n {
                prop_assert_eq!(moved.get(i), base.get((i + rot) % n));
            }
        }
    }
}
