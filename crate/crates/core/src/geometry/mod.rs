//! Camera model, trajectories and the depth bands of equal parallax blur.
//!
//! Under in-plane camera translation `s`, a point at depth `D` moves by
//! `s·F/D` on the sensor. Two points at depths `D_near` and
//! `D_near + ΔD` therefore blur by different amounts, and the difference
//! saturates below `s·F/D_near` as `ΔD` grows. [`DepthSequence`] cuts the
//! depth axis into bands whose blur extents differ by `n` pixels.

pub mod sequence;
mod trajectory;

pub use sequence::{depth_sequence_1d, depth_sequence_2d, DepthSequence};
pub use trajectory::{Pose, Trajectory};

use crate::error::{Error, Result};

/// Pinhole intrinsics with per-axis pixel pitch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    /// Focal length in meters.
    pub focal_length: f64,
    /// Horizontal pixel pitch in meters per pixel.
    pub pixel_pitch_x: f64,
    /// Vertical pixel pitch in meters per pixel.
    pub pixel_pitch_y: f64,
    pub width: usize,
    pub height: usize,
    /// Principal point in pixels.
    pub principal_point: (f64, f64),
}

impl CameraIntrinsics {
    pub fn new(
        focal_length: f64,
        pixel_pitch_x: f64,
        pixel_pitch_y: f64,
        width: usize,
        height: usize,
        principal_point: (f64, f64),
    ) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(focal_length) {
            return Err(Error::Domain(format!("focal length must be > 0, got {focal_length}")));
        }
        if !positive(pixel_pitch_x) || !positive(pixel_pitch_y) {
            return Err(Error::Domain(format!(
                "pixel pitch must be > 0, got ({pixel_pitch_x}, {pixel_pitch_y})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Domain("sensor resolution must be at least 1x1".into()));
        }
        let (cx, cy) = principal_point;
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::Domain(format!(
                "principal point ({cx}, {cy}) outside the {width}x{height} sensor"
            )));
        }
        Ok(CameraIntrinsics {
            focal_length,
            pixel_pitch_x,
            pixel_pitch_y,
            width,
            height,
            principal_point,
        })
    }

    /// Square pixels and the principal point at the sensor center.
    pub fn centered(focal_length: f64, pixel_pitch: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(
            focal_length,
            pixel_pitch,
            pixel_pitch,
            width,
            height,
            (width as f64 / 2.0, height as f64 / 2.0),
        )
    }
}

/// Image-plane translation (meters) of a point at `depth` for an in-plane
/// camera translation `s`.
pub fn blur_extent(s: f64, intrinsics: &CameraIntrinsics, depth: f64) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("depth must be > 0, got {depth}")));
    }
    Ok(s * intrinsics.focal_length / depth)
}

/// Difference in blur extent (meters) between a point at `d_near` and one
/// `delta_d` behind it.
pub fn blur_variation(s: f64, intrinsics: &CameraIntrinsics, d_near: f64, delta_d: f64) -> Result<f64> {
    if !(d_near > 0.0) {
        return Err(Error::Domain(format!("near depth must be > 0, got {d_near}")));
    }
    if !(delta_d >= 0.0) {
        return Err(Error::Domain(format!("depth difference must be >= 0, got {delta_d}")));
    }
    if delta_d == 0.0 {
        return Ok(0.0);
    }
    Ok(s * intrinsics.focal_length / (d_near * (d_near / delta_d + 1.0)))
}
