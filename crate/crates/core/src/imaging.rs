//! Image decode/encode, pixel/cloud conversion and point-cloud export.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageEncoder};
use rayon::prelude::*;

use crate::color::{linear_to_srgb, srgb_to_linear, LinearColor, SrgbColor};
use crate::editing::clamp_gamut;
use crate::error::{Error, Result};
use crate::structure::TriangularStructure;

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<SrgbColor>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<SrgbColor>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> SrgbColor) -> Self {
        let pixels =
            (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, pixels }
    }

    /// Clamps to the gamut and quantizes.
    pub fn from_linear(width: u32, height: u32, colors: &[LinearColor]) -> Result<Self> {
        let pixels = colors
            .par_iter()
            .map(|&c| clamp_gamut(c).and_then(linear_to_srgb))
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[SrgbColor] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn to_linear(&self) -> Vec<LinearColor> {
        self.pixels.par_iter().map(|&p| srgb_to_linear(p)).collect()
    }

    fn raw_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.channels()).collect()
    }

    fn to_rgb_image(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width, self.height, self.raw_bytes())
            .expect("buffer length matches dimensions")
    }

    fn from_rgb_image(img: &image::RgbImage) -> Self {
        let pixels = img.pixels().map(|p| SrgbColor::new(p[0], p[1], p[2])).collect();
        Self { width: img.width(), height: img.height(), pixels }
    }
}

fn codec(e: image::ImageError) -> Error {
    Error::Codec(e.to_string())
}

/// Decodes PNG or JPEG bytes to 8-bit RGB, dropping alpha. 16-bit samples
/// are rounded to the nearest 8-bit code.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory(bytes).map_err(codec)?;
    let wide = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if wide {
        let rgb = img.to_rgb16();
        let narrow = |v: u16| ((u32::from(v) * 255 + 32_767) / 65_535) as u8;
        let pixels = rgb.pixels().map(|p| SrgbColor::new(narrow(p[0]), narrow(p[1]), narrow(p[2]))).collect();
        return ImageBuffer::new(rgb.width(), rgb.height(), pixels);
    }
    Ok(ImageBuffer::from_rgb_image(&img.to_rgb8()))
}

pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn encode_png(buf: &ImageBuffer) -> Result<Vec<u8>> {
    if buf.is_empty() {
        return Err(Error::EmptyImage { width: buf.width, height: buf.height });
    }
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&buf.raw_bytes(), buf.width, buf.height, image::ExtendedColorType::Rgb8)
        .map_err(codec)?;
    Ok(out)
}

/// Writes a PNG. Lossy formats are refused.
pub fn save_image(buf: &ImageBuffer, path: &Path) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if matches!(ext.as_deref(), Some("jpg" | "jpeg")) {
        return Err(Error::LossyOutput);
    }
    let bytes = encode_png(buf)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Resamples so the long side is at most `max_side`; smaller images are
/// returned unchanged.
pub fn downscale(buf: &ImageBuffer, max_side: u32) -> ImageBuffer {
    let long = buf.width.max(buf.height);
    if long <= max_side || buf.is_empty() {
        return buf.clone();
    }
    let scale = f64::from(max_side) / f64::from(long);
    let w = ((f64::from(buf.width) * scale).round() as u32).max(1);
    let h = ((f64::from(buf.height) * scale).round() as u32).max(1);
    let resized = image::imageops::resize(&buf.to_rgb_image(), w, h, image::imageops::FilterType::Triangle);
    ImageBuffer::from_rgb_image(&resized)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint {
    pub position: LinearColor,
    pub color: SrgbColor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureOverlay {
    pub axis_a: LinearColor,
    pub axis_b: LinearColor,
    pub colored: Vec<LinearColor>,
}

impl StructureOverlay {
    pub fn of(s: &TriangularStructure) -> Self {
        Self { axis_a: s.axis().a(), axis_b: s.axis().b(), colored: s.colored().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CloudExport {
    pub points: Vec<CloudPoint>,
    pub stride: usize,
    pub overlay: Option<StructureOverlay>,
}

/// Stride that keeps at most `max_points` of `n` samples.
pub fn decimation_stride(n: usize, max_points: usize) -> usize {
    n.div_ceil(max_points.max(1)).max(1)
}

/// Uniform-stride decimation of the image's colors.
pub fn export_cloud(
    buf: &ImageBuffer,
    s: Option<&TriangularStructure>,
    max_points: usize,
) -> Result<CloudExport> {
    if max_points < 1 {
        return Err(Error::InvalidConfig("max_points must be at least 1".into()));
    }
    let stride = decimation_stride(buf.len(), max_points);
    let points = buf
        .pixels
        .iter()
        .step_by(stride)
        .map(|&p| CloudPoint { position: srgb_to_linear(p), color: p })
        .collect();
    Ok(CloudExport { points, stride, overlay: s.map(StructureOverlay::of) })
}

fn display(c: LinearColor) -> SrgbColor {
    let c = LinearColor::new(c.r.clamp(0.0, 1.0), c.g.clamp(0.0, 1.0), c.b.clamp(0.0, 1.0));
    linear_to_srgb(c).unwrap_or_default()
}

impl CloudExport {
    /// ASCII PLY. Structure overlay vertices follow the cloud points, are
    /// named in comments, and the structure triangles are listed as faces.
    pub fn to_ply(&self) -> String {
        let n = self.points.len();
        let mut out = String::new();
        out.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(out, "comment stride {}", self.stride);
        let mut extra = Vec::new();
        if let Some(o) = &self.overlay {
            extra.push(("axis_a".to_string(), o.axis_a));
            extra.push(("axis_b".to_string(), o.axis_b));
            for (i, &c) in o.colored.iter().enumerate() {
                extra.push((format!("colored_{i}"), c));
            }
            let _ = writeln!(out, "comment cloud_points {n}");
            for (offset, (label, _)) in extra.iter().enumerate() {
                let _ = writeln!(out, "comment overlay {} {label}", n + offset);
            }
        }
        let _ = writeln!(out, "element vertex {}", n + extra.len());
        for p in ["x", "y", "z"] {
            let _ = writeln!(out, "property double {p}");
        }
        for p in ["red", "green", "blue"] {
            let _ = writeln!(out, "property uchar {p}");
        }
        if let Some(o) = &self.overlay {
            let _ = writeln!(out, "element face {}", o.colored.len());
            out.push_str("property list uchar int vertex_indices\n");
        }
        out.push_str("end_header\n");
        let rows = self
            .points
            .iter()
            .map(|p| (p.position, p.color))
            .chain(extra.iter().map(|(_, c)| (*c, display(*c))));
        for (pos, col) in rows {
            let _ = writeln!(out, "{} {} {} {} {} {}", pos.r, pos.g, pos.b, col.r, col.g, col.b);
        }
        if let Some(o) = &self.overlay {
            for i in 0..o.colored.len() {
                let _ = writeln!(out, "3 {} {} {}", n, n + 1, n + 2 + i);
            }
        }
        out
    }

    pub fn write_ply(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ply()).map_err(|e| Error::io(path, e))
    }

    /// Little-endian payload: point count (u32), then per point three f32
    /// coordinates and three u8 display channels; then a flag byte, and when
    /// it is 1, the axis endpoints (6 f32), `k` (u32) and `k` colored
    /// vertices (3 f32 each).
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.points.len() * 15 + 64);
        out.extend_from_slice(&(self.points.len() as u32).to_le_bytes());
        let put = |out: &mut Vec<u8>, c: LinearColor| {
            for v in c.channels() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        };
        for p in &self.points {
            put(&mut out, p.position);
            out.extend_from_slice(&p.color.channels());
        }
        match &self.overlay {
            None => out.push(0),
            Some(o) => {
                out.push(1);
                put(&mut out, o.axis_a);
                put(&mut out, o.axis_b);
                out.extend_from_slice(&(o.colored.len() as u32).to_le_bytes());
                for &c in &o.colored {
                    put(&mut out, c);
                }
            }
        }
        out
    }
}

/// Axis endpoints and colored vertices carried by a cloud payload.
pub type StructureBlock = ([f32; 3], [f32; 3], Vec<[f32; 3]>);

/// Parsed form of [`CloudExport::to_binary`]; positions are `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryCloud {
    pub points: Vec<([f32; 3], [u8; 3])>,
    pub structure: Option<StructureBlock>,
}

pub fn decode_cloud_binary(bytes: &[u8]) -> Result<BinaryCloud> {
    let bad = |reason: &str| Error::Format { what: "cloud payload", reason: reason.into() };
    let mut cur = Cursor::new(bytes);
    let mut take = |n: usize| -> Result<&[u8]> {
        let pos = cur.position() as usize;
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated"))?;
        cur.set_position(end as u64);
        Ok(&bytes[pos..end])
    };
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
    let vec3 = |b: &[u8]| -> [f32; 3] {
        [0, 4, 8].map(|o| f32::from_le_bytes(b[o..o + 4].try_into().expect("4 bytes")))
    };
    let count = u32_at(take(4)?) as usize;
    let mut points = Vec::with_capacity(count.min(bytes.len() / 15));
    for _ in 0..count {
        let rec = take(15)?;
        points.push((vec3(&rec[..12]), [rec[12], rec[13], rec[14]]));
    }
    let structure = match take(1)?[0] {
        0 => None,
        1 => {
            let a = vec3(take(12)?);
            let b = vec3(take(12)?);
            let k = u32_at(take(4)?) as usize;
            let mut colored = Vec::with_capacity(k.min(bytes.len() / 12));
            for _ in 0..k {
                colored.push(vec3(take(12)?));
            }
            Some((a, b, colored))
        }
        _ => return Err(bad("unknown structure flag")),
    };
    if take(1).is_ok() {
        return Err(bad("trailing bytes"));
    }
    Ok(BinaryCloud { points, structure })
}

/// Vertex records of an ASCII PLY written by [`CloudExport::to_ply`].
pub fn parse_ply_vertices(text: &str) -> Result<Vec<([f64; 3], [u8; 3])>> {
    let bad = |reason: String| Error::Format { what: "PLY", reason };
    let mut lines = text.lines();
    if lines.next() != Some("ply") {
        return Err(bad("missing magic".into()));
    }
    let mut count = None;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(rest.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
        }
        if line == "end_header" {
            break;
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element".into()))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next().ok_or_else(|| bad("truncated vertex list".into()))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let byte = |s: &str| s.parse::<u8>().map_err(|e| bad(e.to_string()));
        out.push(([num(f[0])?, num(f[1])?, num(f[2])?], [byte(f[3])?, byte(f[4])?, byte(f[5])?]));
    }
    Ok(out)
}
