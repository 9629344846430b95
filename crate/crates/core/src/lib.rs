//! Triangular color structures for image color point clouds.
//!
//! An image's pixels, seen as points in linear RGB, are organized around `k`
//! triangles that share one edge, the illuminant axis. [`fitting::fit`]
//! orients the triangles to an image, [`editing`] recolors the image by
//! moving triangle vertices and filters it by scaling each color's distance
//! to its triangle.

pub mod color;
pub mod editing;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod imaging;
pub mod pipeline;
pub mod structure;
pub mod testkit;

pub use color::{
    from_cylindrical, linear_to_srgb, srgb_to_linear, to_cylindrical, CylindricalCoord, IlluminantAxis,
    LinearColor, SrgbColor, RADIAL_EPS,
};
pub use editing::{
    apply_edit, clamp_gamut, filter_point, recolor_point, EditPlan, EditScript, EditedStructure,
};
pub use error::{Error, Result};
pub use fitting::{fit, objective, FitConfig, FitOutcome, FitReport};
pub use geometry::{
    apply_barycentric, barycentric_of, closest_point, rotate_about_axis, Barycentric, Triangle3, Vec3,
};
pub use imaging::{export_cloud, load_image, save_image, CloudExport, ImageBuffer};
pub use structure::{assign, sector_of, validate, Assignment, Sector, TriangularStructure, Violation};
