//! Whole-image operations shared by the command line and the service, so
//! both produce byte-identical output for the same inputs.

use crate::color::{IlluminantAxis, LinearColor};
use crate::editing::{EditPlan, EditScript, EditedStructure};
use crate::error::{Error, Result};
use crate::fitting::{fit, FitConfig, FitOutcome};
use crate::imaging::ImageBuffer;
use crate::structure::{assign, Assignment, TriangularStructure};

/// Parses `"gray"` or `"ar,ag,ab:br,bg,bb"` (linear RGB).
pub fn parse_axis(text: &str) -> Result<IlluminantAxis> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("gray") || text.eq_ignore_ascii_case("grey") {
        return Ok(IlluminantAxis::gray());
    }
    let bad = || Error::InvalidConfig(format!("axis {text:?}: expected \"gray\" or \"r,g,b:r,g,b\""));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let triple = |s: &str| -> Result<LinearColor> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match v.as_slice() {
            &[r, g, b] => Ok(LinearColor::new(r, g, b)),
            _ => Err(bad()),
        }
    };
    IlluminantAxis::new(triple(a)?, triple(b)?)
}

/// Initial colored-vertex placement.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// Angles `360°·i/k` from the reference direction.
    Uniform,
    Degrees(Vec<f64>),
}

impl Init {
    /// Parses `"uniform"` or a comma-separated list of angles in degrees.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().eq_ignore_ascii_case("uniform") {
            return Ok(Init::Uniform);
        }
        text.split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Init::Degrees)
            .map_err(|_| Error::InvalidConfig(format!("init {text:?}: expected \"uniform\" or degrees")))
    }

    pub fn structure(&self, axis: IlluminantAxis, k: usize) -> Result<TriangularStructure> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        match self {
            Init::Uniform => TriangularStructure::uniform(axis, k),
            Init::Degrees(d) if d.len() != k => {
                Err(Error::InvalidConfig(format!("{} initial angles given for k = {k}", d.len())))
            }
            Init::Degrees(d) => {
                let radians: Vec<f64> = d.iter().map(|x| x.to_radians()).collect();
                TriangularStructure::from_angles(axis, &radians)
            }
        }
    }
}

pub fn fit_image(img: &ImageBuffer, init: &TriangularStructure, cfg: &FitConfig) -> Result<FitOutcome> {
    fit(&img.to_linear(), init, cfg)
}

/// Applies `script` to an image whose pixels were assigned against
/// `structure`, then quantizes.
pub fn recolor_assigned(
    img: &ImageBuffer,
    linear: &[LinearColor],
    asg: &Assignment,
    structure: &TriangularStructure,
    script: &EditScript,
) -> Result<ImageBuffer> {
    let edited = EditedStructure::new(structure.clone(), script)?;
    let plan = EditPlan::new(&edited, script.filter_scale)?;
    let out = plan.apply_all(linear, asg)?;
    ImageBuffer::from_linear(img.width(), img.height(), &out)
}

pub fn recolor_image(
    img: &ImageBuffer,
    structure: &TriangularStructure,
    script: &EditScript,
) -> Result<ImageBuffer> {
    let linear = img.to_linear();
    let asg = assign(&linear, structure);
    recolor_assigned(img, &linear, &asg, structure, script)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::SrgbColor;

    #[test]
    fn axis_parsing() {
        assert_eq!(parse_axis("gray").unwrap(), IlluminantAxis::gray());
        let axis = parse_axis("0,0,0.1:1,0.9,1").unwrap();
        assert_eq!(axis.a(), LinearColor::new(0.0, 0.0, 0.1));
        assert!(parse_axis("1,2:3,4,5").is_err());
        assert!(parse_axis("0,0,0:0,0,0").is_err());
        assert!(parse_axis("purple").is_err());
    }

    #[test]
    fn init_parsing() {
        assert_eq!(Init::parse("uniform").unwrap(), Init::Uniform);
        assert_eq!(Init::parse("0, 120,240").unwrap(), Init::Degrees(vec![0.0, 120.0, 240.0]));
        assert!(Init::parse("a,b").is_err());
        let axis = IlluminantAxis::gray();
        assert_eq!(Init::Uniform.structure(axis, 3).unwrap().k(), 3);
        assert!(Init::Uniform.structure(axis, 0).is_err());
        assert!(Init::Degrees(vec![0.0]).structure(axis, 2).is_err());
        assert!(Init::Degrees(vec![10.0, 10.0]).structure(axis, 2).is_err());
    }

    #[test]
    fn identity_recolor_round_trips() {
        let img = ImageBuffer::from_fn(37, 23, |x, y| {
            SrgbColor::new((x * 7) as u8, (y * 11) as u8, ((x + y) * 3) as u8)
        });
        let s = TriangularStructure::uniform(IlluminantAxis::gray(), 3).unwrap();
        let out = recolor_image(&img, &s, &EditScript::identity()).unwrap();
        assert_eq!(out, img);
    }
}
