use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blur::{BlurConfig, BorderMode};
use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::kernels::RotationCompose;
use crate::neural::FitConfig;

/// Camera and forward-model settings shared by the commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub focal_length_m: f64,
    pub pixel_pitch_x_m: f64,
    pub pixel_pitch_y_m: f64,
    /// Expected sensor size; checked against the inputs when given.
    pub width: Option<usize>,
    pub height: Option<usize>,
    /// Principal point in pixels; the image center when absent.
    pub principal_point_px: Option<(f64, f64)>,
    pub n: u32,
    pub sigma: f64,
    pub d_min_m: Option<f64>,
    pub samples: usize,
    pub reference_index: Option<usize>,
    pub rotation_compose: RotationCompose,
    pub padding: BorderMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        let blur = BlurConfig::default();
        RunConfig {
            focal_length_m: 2.8e-3,
            pixel_pitch_x_m: 16e-6,
            pixel_pitch_y_m: 16e-6,
            width: None,
            height: None,
            principal_point_px: None,
            n: blur.n,
            sigma: blur.sigma,
            d_min_m: None,
            samples: blur.samples,
            reference_index: None,
            rotation_compose: blur.rotation_compose,
            padding: blur.border,
        }
    }
}

impl RunConfig {
    pub fn blur_config(&self) -> BlurConfig {
        BlurConfig {
            n: self.n,
            sigma: self.sigma,
            d_min: self.d_min_m,
            samples: self.samples,
            border: self.padding,
            rotation_compose: self.rotation_compose,
            reference_index: self.reference_index,
        }
    }

    pub fn intrinsics(&self, width: usize, height: usize) -> Result<CameraIntrinsics> {
        let expected = (self.width.unwrap_or(width), self.height.unwrap_or(height));
        if expected != (width, height) {
            return Err(Error::shape(
                format!("{}x{} (from config)", expected.0, expected.1),
                format!("{width}x{height}"),
            ));
        }
        let pp = self
            .principal_point_px
            .unwrap_or((width as f64 / 2.0, height as f64 / 2.0));
        CameraIntrinsics::new(
            self.focal_length_m,
            self.pixel_pitch_x_m,
            self.pixel_pitch_y_m,
            width,
            height,
            pp,
        )
    }
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = load_json(path)?;
    cfg.blur_config().validate()?;
    Ok(cfg)
}

pub fn load_fit_config(path: &Path) -> Result<FitConfig> {
    let cfg: FitConfig = load_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}
