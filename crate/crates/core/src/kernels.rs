//! Motion-blur kernels built as the empirical distribution of rounded
//! pixel displacements along the camera trajectory.
//!
//! A trajectory sampled at `M` uniform times moves a point at depth `D` by
//! `(-s_x F/(δ_x D), -s_y F/(δ_y D))` pixels at each sample. Rounding those
//! displacements to integer taps and counting gives a kernel whose weights
//! are multiples of `1/M`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Trajectory};
use crate::layering::DepthMap;

/// Dense 2D kernel. The tap at raster position `(col, row)` applies the
/// displacement `(col - anchor.0, row - anchor.1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlurKernel {
    width: usize,
    height: usize,
    anchor: (usize, usize),
    weights: Vec<f64>,
}

impl BlurKernel {
    pub fn identity() -> Self {
        BlurKernel {
            width: 1,
            height: 1,
            anchor: (0, 0),
            weights: vec![1.0],
        }
    }

    /// Validates and wraps a weight raster. Weights must be nonnegative and
    /// sum to one within `1e-9`.
    pub fn new(width: usize, height: usize, anchor: (usize, usize), weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || weights.len() != width * height {
            return Err(Error::shape(
                format!("{width}x{height} weights"),
                format!("{} weights", weights.len()),
            ));
        }
        if anchor.0 >= width || anchor.1 >= height {
            return Err(Error::Contract(format!(
                "anchor {anchor:?} outside {width}x{height} kernel"
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Contract("kernel weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("kernel weights sum to {sum}, expected 1")));
        }
        Ok(BlurKernel {
            width,
            height,
            anchor,
            weights,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of stored weights.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.width == 1 && self.height == 1
    }

    /// Weight at displacement `(dx, dy)`; zero outside the raster.
    pub fn weight(&self, dx: i64, dy: i64) -> f64 {
        let c = dx + self.anchor.0 as i64;
        let r = dy + self.anchor.1 as i64;
        if c < 0 || r < 0 || c >= self.width as i64 || r >= self.height as i64 {
            0.0
        } else {
            self.weights[r as usize * self.width + c as usize]
        }
    }

    /// Nonzero taps as `(dx, dy, weight)` in row-major order.
    pub fn taps(&self) -> Vec<(i64, i64, f64)> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let w = self.weights[r * self.width + c];
                if w != 0.0 {
                    out.push((c as i64 - self.anchor.0 as i64, r as i64 - self.anchor.1 as i64, w));
                }
            }
        }
        out
    }

    /// Raster size `(width, height)`.
    pub fn support(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Smallest odd window centered on the zero-displacement tap that
    /// contains every tap.
    pub fn centered_support(&self) -> (usize, usize) {
        let rx = self.anchor.0.max(self.width - 1 - self.anchor.0);
        let ry = self.anchor.1.max(self.height - 1 - self.anchor.1);
        (2 * rx + 1, 2 * ry + 1)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The kernel of the negated displacements (180 degree rotation).
    pub fn mirrored(&self) -> BlurKernel {
        let mut weights = self.weights.clone();
        weights.reverse();
        BlurKernel {
            width: self.width,
            height: self.height,
            anchor: (self.width - 1 - self.anchor.0, self.height - 1 - self.anchor.1),
            weights,
        }
    }
}

/// Real-valued pixel displacements, one per trajectory sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementSet(pub Vec<(f64, f64)>);

impl DisplacementSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> DisplacementSet {
        DisplacementSet(self.0.iter().map(|&(x, y)| (-x, -y)).collect())
    }
}

/// Depth-independent part of the displacements: `s·F` per axis for each
/// sample and the pixel pitch. Layer kernels and per-pixel kernels both go
/// through [`ParallaxProfile::displacements`] so equal depths give
/// identical kernels.
#[derive(Clone, Debug)]
pub struct ParallaxProfile {
    translations_f: Vec<(f64, f64)>,
    pitch: (f64, f64),
}

impl ParallaxProfile {
    pub fn new(trajectory: &Trajectory, intrinsics: &CameraIntrinsics) -> Self {
        let f = intrinsics.focal_length;
        ParallaxProfile {
            translations_f: trajectory
                .in_plane_translations()
                .into_iter()
                .map(|(sx, sy)| (sx * f, sy * f))
                .collect(),
            pitch: (intrinsics.pixel_pitch_x, intrinsics.pixel_pitch_y),
        }
    }

    pub fn samples(&self) -> usize {
        self.translations_f.len()
    }

    pub fn displacements(&self, depth: f64) -> Result<DisplacementSet> {
        if !(depth > 0.0) {
            return Err(Error::Domain(format!("depth must be > 0, got {depth}")));
        }
        let (px, py) = self.pitch;
        Ok(DisplacementSet(
            self.translations_f
                .iter()
                .map(|&(sfx, sfy)| (-sfx / (px * depth), -sfy / (py * depth)))
                .collect(),
        ))
    }

    pub fn kernel(&self, depth: f64) -> Result<BlurKernel> {
        epdf_kernel(&self.displacements(depth)?)
    }
}

/// Pixel displacements of a point at `depth` for every trajectory sample,
/// relative to the reference pose.
pub fn pixel_displacements(
    trajectory: &Trajectory,
    intrinsics: &CameraIntrinsics,
    depth: f64,
) -> Result<DisplacementSet> {
    ParallaxProfile::new(trajectory, intrinsics).displacements(depth)
}

/// Histogram of displacements rounded half away from zero, normalized by
/// the sample count, on the tight bounding box of occupied taps.
pub fn epdf_kernel(displacements: &DisplacementSet) -> Result<BlurKernel> {
    if displacements.is_empty() {
        return Err(Error::Contract("cannot build a kernel from zero displacements".into()));
    }
    let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &(dx, dy) in &displacements.0 {
        if !dx.is_finite() || !dy.is_finite() {
            return Err(Error::Domain("non-finite displacement".into()));
        }
        // f64::round rounds half away from zero
        *counts.entry((dx.round() as i64, dy.round() as i64)).or_default() += 1;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (0i64, 0i64, 0i64, 0i64);
    for &(x, y) in counts.keys() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // the anchor tap (0,0) is always inside the box, even if unoccupied
    let width = (x1 - x0 + 1) as usize;
    let height = (y1 - y0 + 1) as usize;
    let total = displacements.len() as f64;
    let mut weights = vec![0.0; width * height];
    for (&(x, y), &count) in &counts {
        weights[(y - y0) as usize * width + (x - x0) as usize] = count as f64 / total;
    }
    Ok(BlurKernel {
        width,
        height,
        anchor: ((-x0) as usize, (-y0) as usize),
        weights,
    })
}

/// One kernel per depth layer from the layer's representative depth. The
/// far layer (index 0) lies beyond the half-pixel limit and always gets
/// the identity kernel.
pub fn layer_kernels(
    trajectory: &Trajectory,
    intrinsics: &CameraIntrinsics,
    optimal_depths: &[f64],
) -> Result<Vec<BlurKernel>> {
    let profile = ParallaxProfile::new(trajectory, intrinsics);
    optimal_depths
        .iter()
        .enumerate()
        .map(|(l, &d)| {
            if l == 0 {
                Ok(BlurKernel::identity())
            } else {
                profile.kernel(d)
            }
        })
        .collect()
}

/// Depth-independent kernel approximating small pan/tilt rotations as an
/// image-plane shift of `F·θ/δ` pixels. Roll is ignored.
pub fn rotation_kernel(trajectory: &Trajectory, intrinsics: &CameraIntrinsics) -> Result<BlurKernel> {
    let f = intrinsics.focal_length;
    // a rotation vector w moves the optical axis image by (-F w_y, F w_x)
    let disp = trajectory
        .pan_tilt_angles()
        .into_iter()
        .map(|(tilt, pan)| (-f * pan / intrinsics.pixel_pitch_x, f * tilt / intrinsics.pixel_pitch_y))
        .collect();
    epdf_kernel(&DisplacementSet(disp))
}

/// How the global rotation kernel is combined with each depth kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationCompose {
    /// Convolution: the two blurs act one after the other.
    #[default]
    Convolve,
    /// Anchor-aligned weight average of the two kernels.
    Add,
}

impl RotationCompose {
    pub fn apply(self, depth_kernel: &BlurKernel, rotation: &BlurKernel) -> BlurKernel {
        match self {
            RotationCompose::Convolve => compose_kernels(depth_kernel, rotation),
            RotationCompose::Add => add_kernels(depth_kernel, rotation),
        }
    }
}

fn renormalized(width: usize, height: usize, anchor: (usize, usize), mut weights: Vec<f64>) -> BlurKernel {
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    BlurKernel {
        width,
        height,
        anchor,
        weights,
    }
}

/// Full discrete convolution of two kernels; anchors add.
pub fn compose_kernels(a: &BlurKernel, b: &BlurKernel) -> BlurKernel {
    let width = a.width + b.width - 1;
    let height = a.height + b.height - 1;
    let mut weights = vec![0.0; width * height];
    for ar in 0..a.height {
        for ac in 0..a.width {
            let wa = a.weights[ar * a.width + ac];
            if wa == 0.0 {
                continue;
            }
            for br in 0..b.height {
                for bc in 0..b.width {
                    weights[(ar + br) * width + ac + bc] += wa * b.weights[br * b.width + bc];
                }
            }
        }
    }
    renormalized(
        width,
        height,
        (a.anchor.0 + b.anchor.0, a.anchor.1 + b.anchor.1),
        weights,
    )
}

/// Sum of two kernels aligned on their anchors, renormalized to unit mass.
pub fn add_kernels(a: &BlurKernel, b: &BlurKernel) -> BlurKernel {
    let left = a.anchor.0.max(b.anchor.0);
    let top = a.anchor.1.max(b.anchor.1);
    let right = (a.width - a.anchor.0).max(b.width - b.anchor.0);
    let bottom = (a.height - a.anchor.1).max(b.height - b.anchor.1);
    let (width, height) = (left + right, top + bottom);
    let mut weights = vec![0.0; width * height];
    for k in [a, b] {
        let (ox, oy) = (left - k.anchor.0, top - k.anchor.1);
        for r in 0..k.height {
            for c in 0..k.width {
                weights[(r + oy) * width + c + ox] += k.weights[r * k.width + c];
            }
        }
    }
    renormalized(width, height, (left, top), weights)
}

/// Per-pixel kernels of the pixel-wise blur model, computed on demand from
/// each pixel's depth.
#[derive(Clone, Debug)]
pub struct PixelwiseKernelField<'a> {
    profile: ParallaxProfile,
    depth: &'a DepthMap,
    rotation: Option<(BlurKernel, RotationCompose)>,
}

impl<'a> PixelwiseKernelField<'a> {
    pub fn new(trajectory: &Trajectory, intrinsics: &CameraIntrinsics, depth: &'a DepthMap) -> Self {
        PixelwiseKernelField {
            profile: ParallaxProfile::new(trajectory, intrinsics),
            depth,
            rotation: None,
        }
    }

    /// Composes every per-pixel kernel with a global rotation kernel.
    pub fn with_rotation(mut self, rotation: BlurKernel, mode: RotationCompose) -> Self {
        if !rotation.is_identity() {
            self.rotation = Some((rotation, mode));
        }
        self
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn kernel_for_depth(&self, depth: f64) -> Result<BlurKernel> {
        let k = self.profile.kernel(depth)?;
        Ok(match &self.rotation {
            Some((rot, mode)) => mode.apply(&k, rot),
            None => k,
        })
    }

    pub fn depth_at(&self, x: usize, y: usize) -> f64 {
        self.depth.get(x, y)
    }

    pub fn kernel_at(&self, x: usize, y: usize) -> Result<BlurKernel> {
        self.kernel_for_depth(self.depth.get(x, y))
    }

    /// Every per-pixel kernel, row-major.
    pub fn materialize(&self) -> Result<Vec<BlurKernel>> {
        use rayon::prelude::*;
        (0..self.height())
            .into_par_iter()
            .map(|y| {
                (0..self.width())
                    .map(|x| self.kernel_at(x, y))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map(|rows| rows.into_iter().flatten().collect())
    }
}

/// Total number of stored weights across a set of kernels.
pub fn storage_weights(kernels: &[BlurKernel]) -> usize {
    kernels.iter().map(BlurKernel::len).sum()
}
