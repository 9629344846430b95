//! Recoloring and structural filtering.
//!
//! Recoloring moves structure vertices and transports every color along: the
//! color is projected at constant `(r, h)` onto the two triangles bracketing
//! its angle, each projection keeps its barycentric weights while its triangle
//! moves, and the two moved projections are blended in cylindrical
//! coordinates with the color's original angular position in the sector.
//! Filtering then scales each color's offset from its triangle.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{CylindricalCoord, IlluminantAxis, LinearColor, RADIAL_EPS};
use crate::error::{Error, Result};
use crate::geometry::{Triangle3, Vec3};
use crate::structure::{sector_start, Assignment, AxisFile, TriangularStructure, Violation};

pub const MAX_FILTER_SCALE: f64 = 8.0;

const CHUNK: usize = 4096;

/// Declarative edit: new positions for some colored vertices (by index in the
/// fitted structure), an optional new axis, and a filter scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EditScript {
    pub vertex_moves: BTreeMap<usize, LinearColor>,
    pub axis_move: Option<AxisFile>,
    pub filter_scale: f64,
}

impl Default for EditScript {
    fn default() -> Self {
        Self { vertex_moves: BTreeMap::new(), axis_move: None, filter_scale: 1.0 }
    }
}

impl EditScript {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with_scale(filter_scale: f64) -> Self {
        Self { filter_scale, ..Self::default() }
    }

    /// Moves every colored vertex of `s` by the same rotation about its axis.
    pub fn uniform_rotation(s: &TriangularStructure, delta: f64) -> Self {
        let vertex_moves = s
            .colored()
            .iter()
            .enumerate()
            .map(|(i, &c)| (i, crate::geometry::rotate_color(c, s.axis(), delta)))
            .collect();
        Self { vertex_moves, ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format { what: "edit script", reason: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("edit script serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Every reason this script cannot be applied to `before`.
    pub fn validate(&self, before: &TriangularStructure) -> Vec<String> {
        let mut problems = Vec::new();
        let k = before.k();
        if !(0.0..=MAX_FILTER_SCALE).contains(&self.filter_scale) {
            problems.push(format!("filter_scale {} outside [0, {MAX_FILTER_SCALE}]", self.filter_scale));
        }
        for (&i, c) in &self.vertex_moves {
            if i >= k {
                problems.push(format!("vertex index {i} out of range for {k} triangles"));
            }
            if !c.is_finite() {
                problems.push(format!("vertex {i}: {}", Violation::NonFinite));
            }
        }
        let axis = match self.axis_move {
            None => *before.axis(),
            Some(m) => match IlluminantAxis::new(m.a, m.b) {
                Ok(axis) => axis,
                Err(_) => {
                    problems.push(Violation::DegenerateAxis.to_string());
                    return problems;
                }
            },
        };
        for i in 0..k {
            let c = self.vertex_moves.get(&i).copied().unwrap_or(before.colored()[i]);
            if c.is_finite() && axis.to_cylindrical(c).r < RADIAL_EPS {
                problems.push(Violation::VertexOnAxis { index: i }.to_string());
            }
        }
        problems
    }
}

/// A structure before and after an edit. `after_colored[i]` is where
/// `before.colored()[i]` moved; the after vertices are not re-sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct EditedStructure {
    pub before: TriangularStructure,
    pub after_axis: IlluminantAxis,
    pub after_colored: Vec<LinearColor>,
}

impl EditedStructure {
    pub fn new(before: TriangularStructure, script: &EditScript) -> Result<Self> {
        let problems = script.validate(&before);
        if !problems.is_empty() {
            return Err(Error::InvalidEdit(problems));
        }
        let after_axis = match script.axis_move {
            Some(m) => IlluminantAxis::new(m.a, m.b)?,
            None => *before.axis(),
        };
        let after_colored = (0..before.k())
            .map(|i| script.vertex_moves.get(&i).copied().unwrap_or(before.colored()[i]))
            .collect();
        Ok(Self { before, after_axis, after_colored })
    }

    pub fn identity(before: TriangularStructure) -> Self {
        Self { after_axis: *before.axis(), after_colored: before.colored().to_vec(), before }
    }

    pub fn after_triangle(&self, i: usize) -> Triangle3 {
        Triangle3::new(self.after_axis.a().into(), self.after_axis.b().into(), self.after_colored[i].into())
    }
}

#[derive(Clone, Copy, Debug)]
struct TrianglePlan {
    radius: f64,
    height: f64,
    after_vertex: Vec3,
    after: Triangle3,
    degenerate: bool,
    fixed: Option<FixedProjection>,
}

// With the axis unchanged, the moved projection of (r, h) sits at a constant
// angle, radius `r * gain` and height `h + r * lift`.
#[derive(Clone, Copy, Debug)]
struct FixedProjection {
    theta: f64,
    gain: f64,
    lift: f64,
}

/// An [`EditedStructure`] and filter scale, prepared for per-pixel use.
#[derive(Clone, Debug)]
pub struct EditPlan {
    before_axis: IlluminantAxis,
    after_axis: IlluminantAxis,
    angles: Vec<f64>,
    spans: Vec<f64>,
    /// Turn across each sector when both bounding projections have a fixed
    /// angle.
    turns: Vec<Option<f64>>,
    triangles: Vec<TrianglePlan>,
    scale: f64,
}

impl EditPlan {
    pub fn new(es: &EditedStructure, filter_scale: f64) -> Result<Self> {
        if !(filter_scale >= 0.0 && filter_scale.is_finite()) {
            return Err(Error::InvalidEdit(vec![format!(
                "filter_scale {filter_scale} must be finite and non-negative"
            )]));
        }
        let before = &es.before;
        let triangles = (0..before.k())
            .map(|i| {
                let cc = before.axis().to_cylindrical(before.colored()[i]);
                let after_vertex: Vec3 = es.after_colored[i].into();
                let after = es.after_triangle(i);
                let fixed = (es.after_axis == *before.axis()).then(|| {
                    let axis = &es.after_axis;
                    let g = (after_vertex - axis.origin() - (axis.end() - axis.origin()) * cc.h) / cc.r;
                    let gc = axis.cylindrical_of(axis.origin() + g);
                    FixedProjection { theta: gc.theta, gain: gc.r, lift: gc.h }
                });
                TrianglePlan {
                    radius: cc.r,
                    height: cc.h,
                    after_vertex,
                    after,
                    degenerate: after.is_degenerate(),
                    fixed,
                }
            })
            .collect::<Vec<TrianglePlan>>();
        let k = before.k();
        let spans: Vec<f64> = (0..k).map(|i| sector_start(before.angles(), before.angles()[i]).1).collect();
        let turns = (0..k)
            .map(|i| {
                let (a, b) = (triangles[i].fixed?, triangles[(i + 1) % k].fixed?);
                Some(closest_turn(b.theta - a.theta, spans[i]))
            })
            .collect();
        Ok(Self {
            before_axis: *before.axis(),
            after_axis: es.after_axis,
            angles: before.angles().to_vec(),
            spans,
            turns,
            triangles,
            scale: filter_scale,
        })
    }

    pub fn filter_scale(&self) -> f64 {
        self.scale
    }

    // Barycentric weights of the point at (r, h) in triangle i's half-plane,
    // re-applied to the moved triangle.
    #[inline]
    fn transport(&self, i: usize, r: f64, h: f64) -> Vec3 {
        let t = &self.triangles[i];
        let w2 = r / t.radius;
        let w1 = h - w2 * t.height;
        let w0 = 1.0 - w1 - w2;
        t.after.v0 * w0 + t.after.v1 * w1 + t.after_vertex * w2
    }

    // Cylindrical coordinates of the moved projection through triangle i, and
    // whether its angle is the triangle's fixed one.
    #[inline]
    fn projection(&self, i: usize, cc: CylindricalCoord) -> (CylindricalCoord, bool) {
        if let Some(f) = self.triangles[i].fixed {
            let r = cc.r * f.gain;
            if r >= RADIAL_EPS {
                return (CylindricalCoord::new(f.theta, r, cc.h + cc.r * f.lift), true);
            }
        }
        (self.after_axis.cylindrical_of(self.transport(i, cc.r, cc.h)), false)
    }

    pub fn recolor(&self, c: LinearColor) -> LinearColor {
        self.recolor_vec(c.into()).into()
    }

    #[inline]
    fn recolor_vec(&self, p: Vec3) -> Vec3 {
        let cc = self.before_axis.cylindrical_of(p);
        if cc.r < RADIAL_EPS {
            let residual = p - self.before_axis.lerp(cc.h);
            return self.after_axis.lerp(cc.h) + residual;
        }
        let k = self.angles.len();
        // Angles all lie in (-π, π], so one wrap is enough. Written without
        // branches: pixel angles are often in no particular order.
        let below = self.angles.iter().filter(|&&a| a <= cc.theta).count();
        let i = if below == 0 { k - 1 } else { below - 1 };
        let j = if i + 1 == k { 0 } else { i + 1 };
        let offset = cc.theta - self.angles[i];
        let offset = offset + if offset < 0.0 { TAU } else { 0.0 };
        let alpha = offset / self.spans[i];

        let (first, fixed_first) = self.projection(i, cc);
        let (second, fixed_second) = self.projection(j, cc);
        let turn = match self.turns[i] {
            Some(t) if fixed_first && fixed_second => t,
            _ => closest_turn(second.theta - first.theta, self.spans[i]),
        };

        let blended = CylindricalCoord::new(
            first.theta + alpha * turn,
            first.r + alpha * (second.r - first.r),
            first.h + alpha * (second.h - first.h),
        );
        self.after_axis.point_at(blended)
    }

    #[inline]
    fn filter_vec(&self, p: Vec3, idx: usize) -> Vec3 {
        if self.scale == 1.0 {
            return p;
        }
        let t = &self.triangles[idx];
        let q =
            if t.degenerate { t.after.closest_on_longest_edge(p).0 } else { t.after.closest_voronoi(p).0 };
        q + (p - q) * self.scale
    }

    /// Recolor then filter against the moved triangle `idx`, without gamut
    /// clamping.
    #[inline]
    pub fn transform(&self, c: LinearColor, idx: usize) -> LinearColor {
        self.filter_vec(self.recolor_vec(c.into()), idx).into()
    }

    #[inline]
    pub fn apply(&self, c: LinearColor, idx: usize) -> LinearColor {
        let out = self.transform(c, idx);
        LinearColor::new(out.r.clamp(0.0, 1.0), out.g.clamp(0.0, 1.0), out.b.clamp(0.0, 1.0))
    }

    fn check(&self, image: &[LinearColor], asg: &Assignment) -> Result<()> {
        if asg.len() != image.len() {
            return Err(Error::LengthMismatch { expected: image.len(), actual: asg.len() });
        }
        Ok(())
    }

    /// Clamped edit of every pixel, split over the rayon pool.
    pub fn apply_all(&self, image: &[LinearColor], asg: &Assignment) -> Result<Vec<LinearColor>> {
        self.check(image, asg)?;
        let mut out = vec![LinearColor::BLACK; image.len()];
        out.par_chunks_mut(CHUNK)
            .zip(image.par_chunks(CHUNK).zip(asg.indices().par_chunks(CHUNK)))
            .for_each(|(dst, (src, idx))| self.apply_chunk(dst, src, idx));
        Ok(out)
    }

    /// Same as [`EditPlan::apply_all`] on the calling thread only.
    pub fn apply_all_serial(&self, image: &[LinearColor], asg: &Assignment) -> Result<Vec<LinearColor>> {
        self.check(image, asg)?;
        let mut out = vec![LinearColor::BLACK; image.len()];
        self.apply_chunk(&mut out, image, asg.indices());
        Ok(out)
    }

    #[inline]
    fn apply_chunk(&self, dst: &mut [LinearColor], src: &[LinearColor], idx: &[u32]) {
        for ((d, &c), &i) in dst.iter_mut().zip(src).zip(idx) {
            *d = self.apply(c, i as usize);
        }
    }

    pub fn transform_all(&self, image: &[LinearColor], asg: &Assignment) -> Result<Vec<LinearColor>> {
        self.check(image, asg)?;
        Ok(image
            .par_iter()
            .zip(asg.indices().par_iter())
            .map(|(&c, &i)| self.transform(c, i as usize))
            .collect())
    }
}

// The representative of `turn` modulo a full circle nearest the original
// sector span.
#[inline]
fn closest_turn(turn: f64, span: f64) -> f64 {
    turn + TAU * ((span - turn) / TAU).round()
}

pub fn recolor_point(c: LinearColor, es: &EditedStructure) -> LinearColor {
    EditPlan::new(es, 1.0).expect("unit scale is valid").recolor(c)
}

/// Scales the offset of `c` from its closest point on triangle `idx` of `s`.
pub fn filter_point(c: LinearColor, s: &TriangularStructure, idx: usize, scale: f64) -> LinearColor {
    let p = Vec3::from(c);
    let q = s.triangle(idx).closest_point(p).point;
    (q + (p - q) * scale).into()
}

/// Per-channel clamp onto the `[0, 1]³` gamut boundary.
pub fn clamp_gamut(c: LinearColor) -> Result<LinearColor> {
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(LinearColor::new(c.r.clamp(0.0, 1.0), c.g.clamp(0.0, 1.0), c.b.clamp(0.0, 1.0)))
}

/// Recolors, filters (against the moved triangles, keeping each pixel's
/// original assignment) and clamps every pixel.
pub fn apply_edit(
    image: &[LinearColor],
    asg: &Assignment,
    es: &EditedStructure,
    filter_scale: f64,
) -> Result<Vec<LinearColor>> {
    EditPlan::new(es, filter_scale)?.apply_all(image, asg)
}
