//! Shared workloads for the benchmarks.

use tristruct_core::editing::{EditPlan, EditScript, EditedStructure};
use tristruct_core::structure::{assign, Assignment, TriangularStructure};
use tristruct_core::testkit::fixtures;
use tristruct_core::{IlluminantAxis, LinearColor};

pub struct Workload {
    pub colors: Vec<LinearColor>,
    pub structure: TriangularStructure,
    pub assignment: Assignment,
}

impl Workload {
    /// A fixture image with a three-triangle structure near its materials.
    pub fn fixture(name: &str) -> Self {
        let img = fixtures::fixture(name).unwrap_or_else(|| panic!("unknown fixture {name}"));
        let colors = img.to_linear();
        let angles = [20f64, 140.0, 260.0].map(f64::to_radians);
        let structure =
            TriangularStructure::from_angles(IlluminantAxis::gray(), &angles).expect("valid angles");
        let assignment = assign(&colors, &structure);
        Self { colors, structure, assignment }
    }

    /// Rotation by `degrees` of every colored vertex, then filtering at
    /// `scale`.
    pub fn plan(&self, degrees: f64, scale: f64) -> EditPlan {
        let mut script = EditScript::uniform_rotation(&self.structure, degrees.to_radians());
        script.filter_scale = scale;
        let edited = EditedStructure::new(self.structure.clone(), &script).expect("valid script");
        EditPlan::new(&edited, scale).expect("valid scale")
    }
}
