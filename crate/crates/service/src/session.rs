use tristruct_core::editing::EditScript;
use tristruct_core::fitting::{fit, FitConfig, FitReport};
use tristruct_core::imaging::{downscale, encode_png, export_cloud, ImageBuffer};
use tristruct_core::pipeline::recolor_assigned;
use tristruct_core::structure::{assign, Assignment, TriangularStructure};
use tristruct_core::LinearColor;

use crate::{ApiError, FitResponse};

struct Fitted {
    structure: TriangularStructure,
    assignment: Assignment,
    preview_assignment: Assignment,
    #[allow(dead_code)]
    report: FitReport,
}

pub(crate) struct Session {
    pub(crate) image: ImageBuffer,
    linear: Vec<LinearColor>,
    preview: ImageBuffer,
    preview_linear: Vec<LinearColor>,
    fitted: Option<Fitted>,
    revision: u64,
}

impl Session {
    pub(crate) fn new(image: ImageBuffer, preview_max_side: u32) -> Self {
        let linear = image.to_linear();
        let preview = downscale(&image, preview_max_side);
        let preview_linear = preview.to_linear();
        Self { image, linear, preview, preview_linear, fitted: None, revision: 0 }
    }

    pub(crate) fn fit(
        &mut self,
        init: &TriangularStructure,
        cfg: &FitConfig,
    ) -> Result<FitResponse, ApiError> {
        let out = fit(&self.linear, init, cfg).map_err(ApiError::from_core)?;
        let preview_assignment = assign(&self.preview_linear, &out.structure);
        let response = FitResponse {
            structure: out.structure.to_file_model(),
            angles: out.structure.angles().to_vec(),
            report: out.report.clone(),
        };
        self.fitted = Some(Fitted {
            structure: out.structure,
            assignment: out.assignment,
            preview_assignment,
            report: out.report,
        });
        Ok(response)
    }

    fn fitted(&self) -> Result<&Fitted, ApiError> {
        self.fitted
            .as_ref()
            .ok_or_else(|| ApiError::conflict("structure not fitted yet; POST /sessions/{id}/fit first"))
    }

    /// Encoded preview and the edit revision it was produced for.
    pub(crate) fn preview(&mut self, script: &EditScript) -> Result<(Vec<u8>, u64), ApiError> {
        let f = self.fitted()?;
        let img = recolor_assigned(
            &self.preview,
            &self.preview_linear,
            &f.preview_assignment,
            &f.structure,
            script,
        )
        .map_err(ApiError::from_core)?;
        let png = encode_png(&img).map_err(ApiError::from_core)?;
        self.revision += 1;
        Ok((png, self.revision))
    }

    pub(crate) fn export(&mut self, script: &EditScript) -> Result<(Vec<u8>, u64), ApiError> {
        let f = self.fitted()?;
        let img = recolor_assigned(&self.image, &self.linear, &f.assignment, &f.structure, script)
            .map_err(ApiError::from_core)?;
        let png = encode_png(&img).map_err(ApiError::from_core)?;
        self.revision += 1;
        Ok((png, self.revision))
    }

    pub(crate) fn cloud(&self, max_points: usize) -> Result<Vec<u8>, ApiError> {
        let structure = self.fitted.as_ref().map(|f| &f.structure);
        let export = export_cloud(&self.image, structure, max_points).map_err(ApiError::from_core)?;
        Ok(export.to_binary())
    }
}
