//! Dense single-plane rasters and planar multi-channel images.
//!
//! Samples are stored as `f64`. File formats convert at the boundary
//! (8/16-bit PNG, 32-bit PFM).

use crate::error::{Error, Result};

/// Row-major single-channel raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} samples ({width}x{height})", width * height),
                format!("{} samples", data.len()),
            ));
        }
        Ok(Raster { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// True when every sample is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Planar image with one or three channels. Intensities are nominally in
/// `[0, 1]`; values outside that range are kept and only clamped on export.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    planes: Vec<Raster>,
}

impl Image {
    pub fn from_planes(planes: Vec<Raster>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::Contract(format!(
                "images carry 1 or 3 channels, got {}",
                planes.len()
            )));
        }
        let dims = planes[0].dims();
        if let Some(p) = planes.iter().find(|p| p.dims() != dims) {
            return Err(Error::shape(
                format!("{}x{}", dims.0, dims.1),
                format!("{}x{}", p.width(), p.height()),
            ));
        }
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::Contract("image dimensions must be positive".into()));
        }
        Ok(Image { planes })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::from_planes(vec![Raster::filled(width, height, value); channels])
    }

    pub fn gray(plane: Raster) -> Result<Self> {
        Self::from_planes(vec![plane])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, c: usize) -> &Raster {
        &self.planes[c]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut Raster {
        &mut self.planes[c]
    }

    pub fn planes(&self) -> &[Raster] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Raster> {
        self.planes
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.channels() == other.channels() && self.width() == other.width() && self.height() == other.height()
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.shape_string(), other.shape_string()))
        }
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width(), self.height(), self.channels())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Image {
        Image {
            planes: self.planes.iter().map(|p| p.map(f)).collect(),
        }
    }

    /// Per-sample `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Image, b: f64) -> Result<Image> {
        self.check_same_shape(other)?;
        let planes = self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(p, q)| {
                let data = p.data().iter().zip(q.data()).map(|(u, v)| a * u + b * v).collect();
                Raster::from_vec(p.width(), p.height(), data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Image { planes })
    }

    pub fn dot(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(p, q)| p.data().iter().zip(q.data()).map(|(u, v)| u * v).sum::<f64>())
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(p, q)| p.max_abs_diff(q))
            .fold(0.0, f64::max))
    }
}
