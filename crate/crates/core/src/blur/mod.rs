//! Forward blur synthesis.
//!
//! Two models share one convolution primitive:
//!
//! * the layered compositing model, `y = Σ_l (x * k_l) · A_l`, with one
//!   kernel per depth band and soft alpha mattes;
//! * the pixel-wise model, `y(p) = Σ_u x(p - u) k(p, u)`, which builds a
//!   separate kernel from every pixel's depth. It is exact per pixel and is
//!   used as the reference for the layered model.
//!
//! Both are linear in `x`; [`BlurOperator`] exposes them together with
//! their adjoints for gradient-based fitting.

mod convolution;
pub mod metrics;
mod model;

pub use convolution::{convolve, convolve_plane, BorderMode};
pub use metrics::{psnr, ssim, PSNR_IDENTICAL_DB};
pub use model::{BlurConfig, IcbModel, PwbModel};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::BlurKernel;
use crate::raster::{Image, Raster};
use convolution::{adjoint_scatter, Taps};

/// A linear blur `x ↦ y` and its adjoint.
pub trait BlurOperator: Send + Sync {
    fn apply(&self, x: &Image) -> Result<Image>;

    /// `Bᵀ y`, such that `⟨B x, y⟩ = ⟨x, Bᵀ y⟩`.
    fn adjoint(&self, y: &Image) -> Result<Image>;
}

/// No blur at all.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityBlur;

impl BlurOperator for IdentityBlur {
    fn apply(&self, x: &Image) -> Result<Image> {
        Ok(x.clone())
    }

    fn adjoint(&self, y: &Image) -> Result<Image> {
        Ok(y.clone())
    }
}

/// Shift-invariant blur with a single kernel.
#[derive(Clone, Debug)]
pub struct KernelBlur {
    pub kernel: BlurKernel,
    pub border: BorderMode,
}

impl BlurOperator for KernelBlur {
    fn apply(&self, x: &Image) -> Result<Image> {
        map_planes(x, |p| convolve_plane(p, &self.kernel, self.border))
    }

    fn adjoint(&self, y: &Image) -> Result<Image> {
        let taps = Taps::new(&self.kernel);
        map_planes(y, |p| {
            let mut out = Raster::zeros(p.width(), p.height());
            adjoint_scatter(p, None, |_, _| &taps, self.border, &mut out);
            out
        })
    }
}

fn map_planes(x: &Image, f: impl Fn(&Raster) -> Raster + Sync + Send) -> Result<Image> {
    Image::from_planes(x.planes().par_iter().map(f).collect())
}

/// Layered compositing blur: per-layer kernels blended by alpha mattes.
#[derive(Clone, Debug)]
pub struct IcbOperator {
    kernels: Vec<BlurKernel>,
    mattes: Vec<Raster>,
    border: BorderMode,
}

impl IcbOperator {
    pub fn new(kernels: Vec<BlurKernel>, mattes: Vec<Raster>, border: BorderMode) -> Result<Self> {
        if kernels.len() != mattes.len() || kernels.is_empty() {
            return Err(Error::Contract(format!(
                "{} kernels but {} mattes",
                kernels.len(),
                mattes.len()
            )));
        }
        let dims = mattes[0].dims();
        if mattes.iter().any(|m| m.dims() != dims) {
            return Err(Error::shape(
                format!("{}x{}", dims.0, dims.1),
                "mattes of differing size",
            ));
        }
        Ok(IcbOperator {
            kernels,
            mattes,
            border,
        })
    }

    pub fn kernels(&self) -> &[BlurKernel] {
        &self.kernels
    }

    pub fn mattes(&self) -> &[Raster] {
        &self.mattes
    }

    fn check(&self, x: &Image) -> Result<()> {
        let (w, h) = self.mattes[0].dims();
        if x.width() != w || x.height() != h {
            return Err(Error::shape(
                format!("{w}x{h}"),
                format!("{}x{}", x.width(), x.height()),
            ));
        }
        Ok(())
    }

    fn active_layers(&self) -> Vec<usize> {
        (0..self.mattes.len()).filter(|&l| !self.mattes[l].is_zero()).collect()
    }
}

impl BlurOperator for IcbOperator {
    fn apply(&self, x: &Image) -> Result<Image> {
        self.check(x)?;
        let active = self.active_layers();
        let taps: Vec<Taps> = self.kernels.iter().map(Taps::new).collect();
        let (w, h) = (x.width(), x.height());
        map_planes(x, |plane| {
            let rows: Vec<Vec<f64>> = (0..h)
                .into_par_iter()
                .map(|py| {
                    (0..w)
                        .map(|px| {
                            let mut acc = 0.0;
                            for &l in &active {
                                let a = self.mattes[l].get(px, py);
                                if a != 0.0 {
                                    acc += taps[l].gather(plane, px, py, self.border) * a;
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            Raster::from_vec(w, h, rows.concat()).expect("plane dimensions")
        })
    }

    fn adjoint(&self, y: &Image) -> Result<Image> {
        self.check(y)?;
        let active = self.active_layers();
        let taps: Vec<Taps> = self.kernels.iter().map(Taps::new).collect();
        map_planes(y, |plane| {
            let partial: Vec<Raster> = active
                .par_iter()
                .map(|&l| {
                    let mut out = Raster::zeros(plane.width(), plane.height());
                    adjoint_scatter(plane, Some(&self.mattes[l]), |_, _| &taps[l], self.border, &mut out);
                    out
                })
                .collect();
            let mut total = Raster::zeros(plane.width(), plane.height());
            for p in &partial {
                for (t, v) in total.data_mut().iter_mut().zip(p.data()) {
                    *t += v;
                }
            }
            total
        })
    }
}

/// Pixel-wise blur with materialized per-pixel kernels.
#[derive(Clone, Debug)]
pub struct PwbOperator {
    width: usize,
    height: usize,
    taps: Vec<Taps>,
    border: BorderMode,
}

impl PwbOperator {
    pub fn new(width: usize, height: usize, kernels: &[BlurKernel], border: BorderMode) -> Result<Self> {
        if kernels.len() != width * height {
            return Err(Error::shape(
                format!("{} kernels", width * height),
                format!("{} kernels", kernels.len()),
            ));
        }
        Ok(PwbOperator {
            width,
            height,
            taps: kernels.iter().map(Taps::new).collect(),
            border,
        })
    }

    fn check(&self, x: &Image) -> Result<()> {
        if x.width() != self.width || x.height() != self.height {
            return Err(Error::shape(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", x.width(), x.height()),
            ));
        }
        Ok(())
    }
}

impl BlurOperator for PwbOperator {
    fn apply(&self, x: &Image) -> Result<Image> {
        self.check(x)?;
        let (w, h) = (self.width, self.height);
        map_planes(x, |plane| {
            let rows: Vec<Vec<f64>> = (0..h)
                .into_par_iter()
                .map(|py| {
                    (0..w)
                        .map(|px| self.taps[py * w + px].gather(plane, px, py, self.border))
                        .collect()
                })
                .collect();
            Raster::from_vec(w, h, rows.concat()).expect("plane dimensions")
        })
    }

    fn adjoint(&self, y: &Image) -> Result<Image> {
        self.check(y)?;
        let w = self.width;
        map_planes(y, |plane| {
            let mut out = Raster::zeros(plane.width(), plane.height());
            adjoint_scatter(plane, None, |px, py| &self.taps[py * w + px], self.border, &mut out);
            out
        })
    }
}

/// Layered compositing forward model: `Σ_l (x * k_l) · A_l` with edge
/// replication. Layers whose matte is identically zero are skipped.
pub fn icb_forward(x: &Image, kernels: &[BlurKernel], mattes: &[Raster]) -> Result<Image> {
    IcbOperator::new(kernels.to_vec(), mattes.to_vec(), BorderMode::Replicate)?.apply(x)
}

/// Pixel-wise forward model with each pixel's kernel computed on the fly
/// from its depth. Uses the trajectory samples as given.
pub fn pwb_forward(
    x: &Image,
    depth: &crate::layering::DepthMap,
    trajectory: &crate::geometry::Trajectory,
    intrinsics: &crate::geometry::CameraIntrinsics,
) -> Result<Image> {
    let field = crate::kernels::PixelwiseKernelField::new(trajectory, intrinsics, depth);
    model::pwb_lazy(x, &field, BorderMode::Replicate)
}
