//! Synthetic ground-truth clouds: every material spans the triangle
//! black / diffuse⊙light / specular⊙light, optionally thickened by Gaussian
//! noise and joined by color-bleeding mixtures. Used as the oracle for
//! fitting and editing tests, and to build deterministic fixture images.

pub mod fixtures;
pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::color::{CylindricalCoord, IlluminantAxis, LinearColor, RADIAL_EPS};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::imaging::ImageBuffer;
use crate::structure::AxisFile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTriangle {
    pub diffuse: LinearColor,
    pub specular: LinearColor,
    pub light: LinearColor,
    pub samples: usize,
    /// Relative pull of samples towards black, diffuse and specular.
    #[serde(default = "unit_weights")]
    pub weights: [f64; 3],
    /// Standard deviation of isotropic noise added in RGB.
    #[serde(default)]
    pub sigma: f64,
}

fn unit_weights() -> [f64; 3] {
    [1.0; 3]
}

/// Mixtures between in-plane samples of two materials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleedPair {
    pub first: usize,
    pub second: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub axis: AxisFile,
    pub triangles: Vec<SyntheticTriangle>,
    #[serde(default)]
    pub bleeding: Vec<BleedPair>,
}

impl SyntheticSpec {
    /// White light and white specular, with diffuse colors placed at the
    /// given angles (radius 0.4, height 0.45) so every material triangle is
    /// a structure triangle on `axis`.
    pub fn from_angles(axis: IlluminantAxis, angles: &[f64], samples: usize, sigma: f64) -> Self {
        let a = Vec3::from(axis.a());
        let triangles = angles
            .iter()
            .map(|&theta| {
                let d = Vec3::from(axis.from_cylindrical(CylindricalCoord::new(theta, 0.4, 0.45))) - a;
                let s = Vec3::from(axis.b()) - a;
                SyntheticTriangle {
                    diffuse: d.into(),
                    specular: s.into(),
                    light: LinearColor::WHITE,
                    samples,
                    weights: unit_weights(),
                    sigma,
                }
            })
            .collect();
        Self { axis: AxisFile { a: axis.a(), b: axis.b() }, triangles, bleeding: Vec::new() }
    }

    pub fn illuminant_axis(&self) -> Result<IlluminantAxis> {
        IlluminantAxis::new(self.axis.a, self.axis.b)
    }

    pub fn total_samples(&self) -> usize {
        self.triangles.iter().map(|t| t.samples).sum::<usize>()
            + self.bleeding.iter().map(|b| b.samples).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCloud {
    pub colors: Vec<LinearColor>,
    /// Generating material of each color; `None` for bleeding mixtures.
    pub source: Vec<Option<usize>>,
    /// Angle of each material's diffuse vertex about the axis.
    pub angles: Vec<f64>,
}

impl SyntheticCloud {
    /// Lays the colors out row-major, padding the last row with the axis
    /// origin color, then clamps and quantizes.
    pub fn to_image(&self, width: u32, pad: LinearColor) -> Result<ImageBuffer> {
        let width = width.max(1);
        let height = self.colors.len().div_ceil(width as usize) as u32;
        let mut colors = self.colors.clone();
        colors.resize(width as usize * height as usize, pad);
        ImageBuffer::from_linear(width, height, &colors)
    }
}

struct Corners {
    black: Vec3,
    diffuse: Vec3,
    specular: Vec3,
}

fn sample_in_plane<R: Rng>(rng: &mut R, c: &Corners, weights: [f64; 3]) -> Vec3 {
    let e: [f64; 3] = std::array::from_fn(|i| {
        let x: f64 = Exp1.sample(rng);
        weights[i] * x
    });
    let total: f64 = e.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return c.black;
    }
    (c.black * e[0] + c.diffuse * e[1] + c.specular * e[2]) / total
}

pub fn generate_cloud(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCloud> {
    let axis = spec.illuminant_axis()?;
    let origin = Vec3::from(axis.a());
    let mut corners = Vec::with_capacity(spec.triangles.len());
    let mut angles = Vec::with_capacity(spec.triangles.len());
    for (i, t) in spec.triangles.iter().enumerate() {
        if t.samples < 1 {
            return Err(Error::InvalidSpec(format!("triangle {i} has no samples")));
        }
        if t.sigma.is_nan() || t.sigma < 0.0 {
            return Err(Error::InvalidSpec(format!("triangle {i} has negative sigma")));
        }
        if t.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidSpec(format!("triangle {i} has a negative weight")));
        }
        let diffuse = origin + Vec3::from(t.diffuse.modulate(t.light));
        let cc = axis.to_cylindrical(diffuse.into());
        if cc.r < RADIAL_EPS {
            return Err(Error::InvalidSpec(format!(
                "triangle {i}: diffuse times light lies on the illuminant axis"
            )));
        }
        angles.push(cc.theta);
        corners.push(Corners {
            black: origin,
            diffuse,
            specular: origin + Vec3::from(t.specular.modulate(t.light)),
        });
    }
    for b in &spec.bleeding {
        if b.first >= corners.len() || b.second >= corners.len() {
            return Err(Error::InvalidSpec(format!(
                "bleeding pair ({}, {}) names a missing triangle",
                b.first, b.second
            )));
        }
    }

    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut colors = Vec::with_capacity(spec.total_samples());
    let mut source = Vec::with_capacity(spec.total_samples());
    for (i, (t, c)) in spec.triangles.iter().zip(&corners).enumerate() {
        let noise = Normal::new(0.0, t.sigma).expect("sigma checked above");
        for _ in 0..t.samples {
            let mut p = sample_in_plane(&mut rng, c, t.weights);
            if t.sigma > 0.0 {
                p += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            }
            colors.push(p.into());
            source.push(Some(i));
        }
    }
    for b in &spec.bleeding {
        let (wa, wb) = (spec.triangles[b.first].weights, spec.triangles[b.second].weights);
        for _ in 0..b.samples {
            let pa = sample_in_plane(&mut rng, &corners[b.first], wa);
            let pb = sample_in_plane(&mut rng, &corners[b.second], wb);
            let t: f64 = rng.gen();
            colors.push((pa + (pb - pa) * t).into());
            source.push(None);
        }
    }
    Ok(SyntheticCloud { colors, source, angles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::objective;
    use crate::structure::{assign, TriangularStructure};

    #[test]
    fn noiseless_samples_lie_on_their_triangles() {
        let axis = IlluminantAxis::gray();
        let spec = SyntheticSpec::from_angles(axis, &[0.3, 2.0, -2.2], 2000, 0.0);
        let cloud = generate_cloud(&spec, 1).unwrap();
        let s = TriangularStructure::new(
            axis,
            spec.triangles.iter().map(|t| (Vec3::from(axis.a()) + Vec3::from(t.diffuse)).into()).collect(),
        )
        .unwrap();
        for (c, src) in cloud.colors.iter().zip(&cloud.source) {
            let i = src.unwrap();
            let idx = s.angles().iter().position(|&a| (a - cloud.angles[i]).abs() < 1e-12).unwrap();
            assert!(s.triangle(idx).closest_point((*c).into()).distance < 1e-9);
        }
        let asg = assign(&cloud.colors, &s);
        assert!(objective(&cloud.colors, &s, &asg).unwrap() < 1e-12);
    }

    #[test]
    fn white_light_is_identity() {
        let d = LinearColor::new(1.0, 0.0, 0.0);
        assert_eq!(d.modulate(LinearColor::WHITE), d);
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let mut spec = SyntheticSpec::from_angles(IlluminantAxis::gray(), &[0.5, 2.5], 500, 0.03);
        spec.bleeding.push(BleedPair { first: 0, second: 1, samples: 100 });
        let a = generate_cloud(&spec, 77).unwrap();
        let b = generate_cloud(&spec, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.colors.len(), 1100);
        assert_eq!(a.source.iter().filter(|s| s.is_none()).count(), 100);
        assert_ne!(generate_cloud(&spec, 78).unwrap().colors, a.colors);
    }

    #[test]
    fn invalid_synthetic_inputs_fail() {
        let mut spec = SyntheticSpec::from_angles(IlluminantAxis::gray(), &[0.5], 10, 0.0);
        spec.triangles[0].diffuse = LinearColor::new(0.5, 0.5, 0.5);
        assert!(matches!(generate_cloud(&spec, 0), Err(Error::InvalidSpec(_))));

        let mut spec = SyntheticSpec::from_angles(IlluminantAxis::gray(), &[0.5], 10, 0.0);
        spec.bleeding.push(BleedPair { first: 0, second: 3, samples: 1 });
        assert!(generate_cloud(&spec, 0).is_err());

        let mut spec = SyntheticSpec::from_angles(IlluminantAxis::gray(), &[0.5], 0, 0.0);
        assert!(generate_cloud(&spec, 0).is_err());
        spec.triangles[0].samples = 1;
        spec.triangles[0].sigma = -1.0;
        assert!(generate_cloud(&spec, 0).is_err());
    }

    #[test]
    fn synthetic_json_defaults() {
        let text = r#"{
            "axis": {"a": [0,0,0], "b": [1,1,1]},
            "triangles": [{"diffuse": [0.8,0.2,0.1], "specular": [1,1,1], "light": [1,1,1], "samples": 10}]
        }"#;
        let spec: SyntheticSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.triangles[0].weights, [1.0; 3]);
        assert_eq!(spec.triangles[0].sigma, 0.0);
        assert!(spec.bleeding.is_empty());
        let cloud = generate_cloud(&spec, 0).unwrap();
        let img = cloud.to_image(4, LinearColor::BLACK).unwrap();
        assert_eq!((img.width(), img.height()), (4, 3));
    }
}
