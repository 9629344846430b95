//! Deterministic fixture images for end-to-end tests and benchmarks.

use rand::{Rng, SeedableRng};

use super::{generate_cloud, BleedPair, SyntheticSpec};
use crate::color::{IlluminantAxis, LinearColor};
use crate::imaging::ImageBuffer;

pub const NAMES: [&str; 5] =
    ["three_materials", "two_materials_bleeding", "five_materials", "sky_and_grass", "sunset_gradient"];

pub fn all() -> Vec<(&'static str, ImageBuffer)> {
    NAMES.iter().map(|&n| (n, fixture(n).expect("known fixture"))).collect()
}

pub fn fixture(name: &str) -> Option<ImageBuffer> {
    let img = match name {
        "three_materials" => synthetic(&[20.0, 140.0, 260.0], 1000, 1000, 0.01, false, 101),
        "two_materials_bleeding" => synthetic(&[-30.0, 90.0], 800, 600, 0.015, true, 102),
        "five_materials" => synthetic(&[0.0, 70.0, 150.0, 220.0, 290.0], 640, 480, 0.02, false, 103),
        "sky_and_grass" => sky_and_grass(1024, 768, 104),
        "sunset_gradient" => sunset(720, 720, 105),
        _ => return None,
    };
    Some(img)
}

fn synthetic(degrees: &[f64], w: u32, h: u32, sigma: f64, bleed: bool, seed: u64) -> ImageBuffer {
    let n = w as usize * h as usize;
    let angles: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
    let bleed_samples = if bleed { n / 10 } else { 0 };
    let per = (n - bleed_samples).div_ceil(angles.len());
    let mut spec = SyntheticSpec::from_angles(IlluminantAxis::gray(), &angles, per, sigma);
    if bleed {
        spec.bleeding.push(BleedPair { first: 0, second: 1, samples: bleed_samples });
    }
    let mut cloud = generate_cloud(&spec, seed).expect("fixture spec is valid");
    cloud.colors.truncate(n);
    ImageBuffer::from_linear(w, h, &cloud.colors).expect("dimensions match")
}

// Smooth value noise on a coarse lattice, bilinearly interpolated.
struct ValueNoise {
    lattice: Vec<f64>,
    size: usize,
}

impl ValueNoise {
    fn new(seed: u64, size: usize) -> Self {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        Self { lattice: (0..size * size).map(|_| rng.gen()).collect(), size }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let s = (self.size - 1) as f64;
        let (x, y) = (x.clamp(0.0, 1.0) * s, y.clamp(0.0, 1.0) * s);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.size - 1), (y0 + 1).min(self.size - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let v = |i: usize, j: usize| self.lattice[j * self.size + i];
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

fn to_image(w: u32, h: u32, mut f: impl FnMut(f64, f64) -> LinearColor) -> ImageBuffer {
    let colors: Vec<LinearColor> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| f(x as f64 / w as f64, y as f64 / h as f64))
        .collect();
    ImageBuffer::from_linear(w, h, &colors).expect("dimensions match")
}

fn sky_and_grass(w: u32, h: u32, seed: u64) -> ImageBuffer {
    let coarse = ValueNoise::new(seed, 17);
    let fine = ValueNoise::new(seed + 1, 129);
    let mut grain = rand::rngs::StdRng::seed_from_u64(seed + 2);
    to_image(w, h, |x, y| {
        let n = 0.6 * coarse.at(x, y) + 0.4 * fine.at(x, y);
        let jitter = grain.gen_range(-0.01..0.01);
        let horizon = 0.55 + 0.05 * (coarse.at(x, 0.3) - 0.5);
        if y < horizon {
            let light = 0.35 + 0.5 * (1.0 - y / horizon) * 0.6 + 0.25 * n;
            LinearColor::new(0.25 * light, 0.45 * light, 0.95 * light + jitter)
        } else {
            let light = 0.15 + 0.5 * n;
            LinearColor::new(0.18 * light + jitter, 0.55 * light, 0.08 * light)
        }
    })
}

fn sunset(w: u32, h: u32, seed: u64) -> ImageBuffer {
    let noise = ValueNoise::new(seed, 33);
    to_image(w, h, |x, y| {
        let glow = (1.0 - ((x - 0.5).powi(2) + (y - 0.7).powi(2)).sqrt() * 1.4).max(0.0);
        let n = noise.at(x, y);
        let warm = LinearColor::new(0.95, 0.45, 0.12);
        let cool = LinearColor::new(0.22, 0.12, 0.45);
        let t = (y * 0.8 + 0.2 * n).clamp(0.0, 1.0);
        let base = LinearColor::new(
            cool.r + (warm.r - cool.r) * t,
            cool.g + (warm.g - cool.g) * t,
            cool.b + (warm.b - cool.b) * t,
        );
        let lum = 0.3 + 0.7 * glow;
        LinearColor::new(base.r * lum, base.g * lum, base.b * lum)
    })
}
