//! Color representations: 8-bit sRGB at the I/O boundary, linear RGB for all
//! math, and cylindrical coordinates about an illuminant axis.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Colors closer than this to the illuminant axis have no meaningful angle.
pub const RADIAL_EPS: f64 = 1e-6;

/// Minimum length of an illuminant axis.
pub const AXIS_EPS: f64 = 1e-9;

const REFERENCE_FALLBACK_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SrgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl SrgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

/// A color in linear RGB. Channels are nominally in `[0, 1]` but may leave
/// that range while an edit is in flight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct LinearColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl LinearColor {
    pub const BLACK: Self = Self::new(0.0, 0.0, 0.0);
    pub const WHITE: Self = Self::new(1.0, 1.0, 1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn channels(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn in_gamut(self) -> bool {
        self.channels().iter().all(|c| (0.0..=1.0).contains(c))
    }

    /// Component-wise product, e.g. a surface color lit by a light color.
    pub fn modulate(self, other: Self) -> Self {
        Self::new(self.r * other.r, self.g * other.g, self.b * other.b)
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.r - other.r).abs().max((self.g - other.g).abs()).max((self.b - other.b).abs())
    }
}

impl From<[f64; 3]> for LinearColor {
    fn from([r, g, b]: [f64; 3]) -> Self {
        Self::new(r, g, b)
    }
}

impl From<LinearColor> for [f64; 3] {
    fn from(c: LinearColor) -> Self {
        c.channels()
    }
}

impl From<Vec3> for LinearColor {
    #[inline]
    fn from(v: Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

impl From<LinearColor> for Vec3 {
    #[inline]
    fn from(c: LinearColor) -> Self {
        Vec3::new(c.r, c.g, c.b)
    }
}

fn decode_channel(code: u8) -> f64 {
    let c = f64::from(code) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn decode_table() -> &'static [f64; 256] {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; 256];
        for (code, slot) in table.iter_mut().enumerate() {
            *slot = decode_channel(code as u8);
        }
        table
    })
}

fn encode_channel(l: f64) -> u8 {
    let c = if l <= 0.003_130_8 { 12.92 * l } else { 1.055 * l.powf(1.0 / 2.4) - 0.055 };
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn srgb_to_linear(c: SrgbColor) -> LinearColor {
    let table = decode_table();
    LinearColor::new(table[c.r as usize], table[c.g as usize], table[c.b as usize])
}

/// Encodes a linear color to 8-bit sRGB. Channels must already be in
/// `[0, 1]`; see [`crate::editing::clamp_gamut`].
pub fn linear_to_srgb(c: LinearColor) -> Result<SrgbColor> {
    let channels = c.channels();
    for (channel, &value) in channels.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfGamut { channel, value });
        }
    }
    Ok(SrgbColor::new(encode_channel(c.r), encode_channel(c.g), encode_channel(c.b)))
}

/// `(theta, r, h)` of a color about an [`IlluminantAxis`].
///
/// `h` is normalized by the axis length so the axis spans `h ∈ [0, 1]`; `r`
/// is in absolute linear-RGB units.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CylindricalCoord {
    pub theta: f64,
    pub r: f64,
    pub h: f64,
}

impl CylindricalCoord {
    pub const fn new(theta: f64, r: f64, h: f64) -> Self {
        Self { theta, r, h }
    }
}

/// Maps any angle to the canonical range `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// The edge shared by every triangle of a structure, from the dark endpoint
/// `a` to the light endpoint `b`, with a fixed orthonormal frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlluminantAxis {
    a: Vec3,
    b: Vec3,
    dir: Vec3,
    length: f64,
    e0: Vec3,
    w: Vec3,
}

impl IlluminantAxis {
    pub fn new(a: LinearColor, b: LinearColor) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite);
        }
        let (a, b) = (Vec3::from(a), Vec3::from(b));
        let span = b - a;
        let length = span.norm();
        if length.is_nan() || length <= AXIS_EPS {
            return Err(Error::DegenerateAxis { length });
        }
        let dir = span / length;
        let reject = |v: Vec3| v - dir * v.dot(dir);
        let mut e0 = reject(Vec3::new(1.0, 0.0, 0.0));
        if e0.norm() < REFERENCE_FALLBACK_EPS {
            e0 = reject(Vec3::new(0.0, 1.0, 0.0));
        }
        let e0 = e0.normalized();
        let w = dir.cross(e0);
        Ok(Self { a, b, dir, length, e0, w })
    }

    /// Black to white.
    pub fn gray() -> Self {
        Self::new(LinearColor::BLACK, LinearColor::WHITE).expect("gray axis is valid")
    }

    pub fn a(&self) -> LinearColor {
        self.a.into()
    }

    pub fn b(&self) -> LinearColor {
        self.b.into()
    }

    pub(crate) fn origin(&self) -> Vec3 {
        self.a
    }

    pub(crate) fn end(&self) -> Vec3 {
        self.b
    }

    pub fn direction(&self) -> Vec3 {
        self.dir
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Unit vector perpendicular to the axis where `theta = 0`.
    pub fn reference(&self) -> Vec3 {
        self.e0
    }

    /// `direction × reference`, where `theta = π/2`.
    pub fn binormal(&self) -> Vec3 {
        self.w
    }

    pub fn to_cylindrical(&self, c: LinearColor) -> CylindricalCoord {
        self.cylindrical_of(Vec3::from(c))
    }

    #[inline]
    pub(crate) fn cylindrical_of(&self, p: Vec3) -> CylindricalCoord {
        let d = p - self.a;
        let along = d.dot(self.dir);
        // e0 and w are orthogonal to the axis, so they see only the radial
        // part of d.
        let (x, y) = (d.dot(self.e0), d.dot(self.w));
        let r = (x * x + y * y).sqrt();
        let theta = if r < RADIAL_EPS {
            0.0
        } else {
            let t = y.atan2(x);
            if t <= -PI {
                PI
            } else {
                t
            }
        };
        CylindricalCoord { theta, r, h: along / self.length }
    }

    pub fn from_cylindrical(&self, cc: CylindricalCoord) -> LinearColor {
        self.point_at(cc).into()
    }

    #[inline]
    pub(crate) fn point_at(&self, cc: CylindricalCoord) -> Vec3 {
        let (sin, cos) = cc.theta.sin_cos();
        self.a + self.dir * (cc.h * self.length) + (self.e0 * cos + self.w * sin) * cc.r
    }

    /// Point on the axis line at normalized height `h`.
    #[inline]
    pub(crate) fn lerp(&self, h: f64) -> Vec3 {
        self.a + (self.b - self.a) * h
    }
}

pub fn to_cylindrical(c: LinearColor, axis: &IlluminantAxis) -> CylindricalCoord {
    axis.to_cylindrical(c)
}

pub fn from_cylindrical(cc: CylindricalCoord, axis: &IlluminantAxis) -> LinearColor {
    axis.from_cylindrical(cc)
}
