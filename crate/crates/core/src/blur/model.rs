use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convolution::{BorderMode, Taps};
use super::{BlurOperator, IcbOperator, PwbOperator};
use crate::error::{Error, Result};
use crate::geometry::{sequence::sequence_from_extents, CameraIntrinsics, Trajectory};
use crate::kernels::{
    layer_kernels, rotation_kernel, storage_weights, BlurKernel, PixelwiseKernelField, RotationCompose,
};
use crate::layering::{assign_regions, optimal_layer_depths, DepthMap, LayerDecomposition};
use crate::raster::{Image, Raster};

/// Hyperparameters of the forward models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurConfig {
    /// Blur-extent step between consecutive depth bands, in pixels.
    pub n: u32,
    /// Standard deviation of the mask smoothing window, in pixels.
    pub sigma: f64,
    /// Depth the band sequence must reach; defaults to the depth map minimum.
    pub d_min: Option<f64>,
    /// Number of uniform trajectory samples.
    pub samples: usize,
    pub border: BorderMode,
    pub rotation_compose: RotationCompose,
    /// Reference pose of the input trajectory; defaults to its middle pose.
    pub reference_index: Option<usize>,
}

impl Default for BlurConfig {
    fn default() -> Self {
        BlurConfig {
            n: 1,
            sigma: 4.0,
            d_min: None,
            samples: 64,
            border: BorderMode::Replicate,
            rotation_compose: RotationCompose::Convolve,
            reference_index: None,
        }
    }
}

impl BlurConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be >= 1".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.samples == 0 {
            return Err(Error::Domain("at least one trajectory sample is required".into()));
        }
        if let Some(d) = self.d_min {
            if !(d > 0.0) {
                return Err(Error::Domain(format!("d_min must be > 0, got {d}")));
            }
        }
        Ok(())
    }

    /// Applies the reference override and resamples to `samples` poses.
    pub fn prepare_trajectory(&self, trajectory: &Trajectory) -> Result<Trajectory> {
        let traj = match self.reference_index {
            Some(r) => trajectory.clone().with_reference(r)?,
            None => trajectory.clone(),
        };
        traj.resample(self.samples)
    }
}

fn global_rotation(traj: &Trajectory, intrinsics: &CameraIntrinsics) -> Result<Option<BlurKernel>> {
    if !traj.has_rotation() {
        return Ok(None);
    }
    let k = rotation_kernel(traj, intrinsics)?;
    Ok(if k.is_identity() { None } else { Some(k) })
}

/// The layered compositing model fitted to one depth map and trajectory.
#[derive(Clone, Debug)]
pub struct IcbModel {
    pub trajectory: Trajectory,
    pub decomposition: LayerDecomposition,
    pub kernels: Vec<BlurKernel>,
    pub rotation: Option<BlurKernel>,
    pub border: BorderMode,
}

impl IcbModel {
    pub fn build(
        depth: &DepthMap,
        trajectory: &Trajectory,
        intrinsics: &CameraIntrinsics,
        config: &BlurConfig,
    ) -> Result<Self> {
        config.validate()?;
        let trajectory = config.prepare_trajectory(trajectory)?;
        let d_min = config.d_min.unwrap_or_else(|| depth.min());
        let (sx, sy) = trajectory.max_in_plane_translation();
        let sequence = sequence_from_extents(sx, sy, intrinsics, config.n, d_min)?;
        let labels = assign_regions(depth, &sequence);
        let optimal = optimal_layer_depths(depth, &labels, &sequence);
        let mut kernels = layer_kernels(&trajectory, intrinsics, &optimal)?;
        let rotation = global_rotation(&trajectory, intrinsics)?;
        if let Some(rot) = &rotation {
            kernels = kernels.iter().map(|k| config.rotation_compose.apply(k, rot)).collect();
        }
        let supports: Vec<_> = kernels.iter().map(BlurKernel::centered_support).collect();
        let decomposition = LayerDecomposition::from_labels(sequence, labels, optimal, &supports, config.sigma)?;
        Ok(IcbModel {
            trajectory,
            decomposition,
            kernels,
            rotation,
            border: config.border,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.kernels.len()
    }

    pub fn operator(&self) -> Result<IcbOperator> {
        IcbOperator::new(self.kernels.clone(), self.decomposition.mattes.clone(), self.border)
    }

    pub fn forward(&self, x: &Image) -> Result<Image> {
        self.operator()?.apply(x)
    }

    /// Weights stored across all layer kernels.
    pub fn kernel_storage(&self) -> usize {
        storage_weights(&self.kernels)
    }
}

/// The pixel-wise model: every pixel blurred with the kernel of its own
/// depth.
#[derive(Clone, Debug)]
pub struct PwbModel {
    pub trajectory: Trajectory,
    pub depth: DepthMap,
    pub intrinsics: CameraIntrinsics,
    pub rotation: Option<BlurKernel>,
    pub rotation_compose: RotationCompose,
    pub border: BorderMode,
}

impl PwbModel {
    pub fn build(
        depth: &DepthMap,
        trajectory: &Trajectory,
        intrinsics: &CameraIntrinsics,
        config: &BlurConfig,
    ) -> Result<Self> {
        config.validate()?;
        let trajectory = config.prepare_trajectory(trajectory)?;
        let rotation = global_rotation(&trajectory, intrinsics)?;
        Ok(PwbModel {
            trajectory,
            depth: depth.clone(),
            intrinsics: *intrinsics,
            rotation,
            rotation_compose: config.rotation_compose,
            border: config.border,
        })
    }

    pub fn field(&self) -> PixelwiseKernelField<'_> {
        let field = PixelwiseKernelField::new(&self.trajectory, &self.intrinsics, &self.depth);
        match &self.rotation {
            Some(rot) => field.with_rotation(rot.clone(), self.rotation_compose),
            None => field,
        }
    }

    /// Blurs with kernels computed per pixel on demand.
    pub fn forward(&self, x: &Image) -> Result<Image> {
        pwb_lazy(x, &self.field(), self.border)
    }

    /// Materializes every per-pixel kernel.
    pub fn operator(&self) -> Result<PwbOperator> {
        let kernels = self.field().materialize()?;
        PwbOperator::new(self.depth.width(), self.depth.height(), &kernels, self.border)
    }
}

pub(crate) fn pwb_lazy(x: &Image, field: &PixelwiseKernelField<'_>, border: BorderMode) -> Result<Image> {
    let (w, h) = (field.width(), field.height());
    if x.width() != w || x.height() != h {
        return Err(Error::shape(
            format!("{w}x{h}"),
            format!("{}x{}", x.width(), x.height()),
        ));
    }
    let rows: Vec<Vec<Vec<f64>>> = (0..h)
        .into_par_iter()
        .map(|py| {
            let mut cache: HashMap<u64, Taps> = HashMap::new();
            let mut out = vec![Vec::with_capacity(w); x.channels()];
            for px in 0..w {
                let d = field.depth_at(px, py);
                let taps = match cache.entry(d.to_bits()) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => e.insert(Taps::new(&field.kernel_for_depth(d)?)),
                };
                for (c, plane) in x.planes().iter().enumerate() {
                    out[c].push(taps.gather(plane, px, py, border));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let planes = (0..x.channels())
        .map(|c| {
            let data: Vec<f64> = rows.iter().flat_map(|r| r[c].iter().copied()).collect();
            Raster::from_vec(w, h, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}
