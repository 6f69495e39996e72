use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::BlurKernel;
use crate::raster::{Image, Raster};

/// How samples outside the raster are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderMode {
    /// Nearest edge sample.
    #[default]
    Replicate,
    /// Zero outside the raster.
    Zero,
}

impl BorderMode {
    #[inline]
    fn map(self, i: i64, len: usize) -> Option<usize> {
        if i >= 0 && (i as usize) < len {
            return Some(i as usize);
        }
        match self {
            BorderMode::Replicate => Some(i.clamp(0, len as i64 - 1) as usize),
            BorderMode::Zero => None,
        }
    }
}

/// Nonzero taps of a kernel, `(dx, dy, weight)`.
#[derive(Clone, Debug)]
pub(crate) struct Taps(Vec<(i64, i64, f64)>);

impl Taps {
    pub(crate) fn new(kernel: &BlurKernel) -> Self {
        Taps(kernel.taps())
    }

    /// `Σ_u w(u) · x(p - u)`.
    #[inline]
    pub(crate) fn gather(&self, plane: &Raster, px: usize, py: usize, border: BorderMode) -> f64 {
        let (w, h) = plane.dims();
        let mut acc = 0.0;
        for &(dx, dy, wt) in &self.0 {
            if let (Some(sx), Some(sy)) = (border.map(px as i64 - dx, w), border.map(py as i64 - dy, h)) {
                acc += wt * plane.get(sx, sy);
            }
        }
        acc
    }
}

/// Accumulates the transpose of a gather convolution into `out`:
/// `out[p - u] += w(p, u) · scale(p) · y(p)`.
pub(crate) fn adjoint_scatter<'t>(
    y: &Raster,
    scale: Option<&Raster>,
    taps_at: impl Fn(usize, usize) -> &'t Taps,
    border: BorderMode,
    out: &mut Raster,
) {
    let (w, h) = y.dims();
    for py in 0..h {
        for px in 0..w {
            let mut v = y.get(px, py);
            if let Some(s) = scale {
                v *= s.get(px, py);
            }
            if v == 0.0 {
                continue;
            }
            for &(dx, dy, wt) in &taps_at(px, py).0 {
                if let (Some(sx), Some(sy)) = (border.map(px as i64 - dx, w), border.map(py as i64 - dy, h)) {
                    let i = sy * w + sx;
                    out.data_mut()[i] += wt * v;
                }
            }
        }
    }
}

/// Convolution of one plane with a kernel about its anchor; output has the
/// input size.
pub fn convolve_plane(plane: &Raster, kernel: &BlurKernel, border: BorderMode) -> Raster {
    if kernel.is_identity() {
        return plane.clone();
    }
    let taps = Taps::new(kernel);
    let (w, h) = plane.dims();
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|py| (0..w).map(|px| taps.gather(plane, px, py, border)).collect())
        .collect();
    Raster::from_vec(w, h, rows.concat()).expect("plane dimensions")
}

/// Convolution of every channel with edge replication at the borders.
pub fn convolve(image: &Image, kernel: &BlurKernel) -> Image {
    Image::from_planes(
        image
            .planes()
            .iter()
            .map(|p| convolve_plane(p, kernel, BorderMode::Replicate))
            .collect(),
    )
    .expect("planes keep their shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{epdf_kernel, DisplacementSet};

    /// Direct four-loop convolution over the kernel raster.
    fn brute(plane: &Raster, k: &BlurKernel) -> Raster {
        let (w, h) = plane.dims();
        let (ax, ay) = k.anchor();
        Raster::from_fn(w, h, |x, y| {
            let mut s = 0.0;
            for r in 0..k.height() {
                for c in 0..k.width() {
                    let dx = c as i64 - ax as i64;
                    let dy = r as i64 - ay as i64;
                    let sx = (x as i64 - dx).clamp(0, w as i64 - 1) as usize;
                    let sy = (y as i64 - dy).clamp(0, h as i64 - 1) as usize;
                    s += k.weights()[r * k.width() + c] * plane.get(sx, sy);
                }
            }
            s
        })
    }

    #[test]
    fn delta_smear() {
        let mut plane = Raster::zeros(3, 3);
        plane.set(1, 1, 1.0);
        let k = epdf_kernel(&DisplacementSet(vec![(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)])).unwrap();
        let out = convolve_plane(&plane, &k, BorderMode::Replicate);
        for x in 0..3 {
            assert!((out.get(x, 1) - 1.0 / 3.0).abs() < 1e-15);
            assert_eq!(out.get(x, 0), 0.0);
            assert_eq!(out.get(x, 2), 0.0);
        }
    }

    #[test]
    fn matches_brute_force_with_replication() {
        let plane = Raster::from_fn(9, 6, |x, y| ((x * 7 + y * 13) % 11) as f64 / 10.0);
        let k = epdf_kernel(&DisplacementSet(vec![
            (0.0, 0.0),
            (3.0, -1.0),
            (-2.0, 2.0),
            (3.0, -1.0),
        ]))
        .unwrap();
        let fast = convolve_plane(&plane, &k, BorderMode::Replicate);
        assert!(fast.max_abs_diff(&brute(&plane, &k)) < 1e-15);
    }

    #[test]
    fn identity_and_constants() {
        let plane = Raster::from_fn(5, 4, |x, y| (x as f64).sin() + y as f64);
        assert_eq!(
            convolve_plane(&plane, &BlurKernel::identity(), BorderMode::Replicate),
            plane
        );
        let k = epdf_kernel(&DisplacementSet(vec![(0.0, 0.0), (1.0, 1.0), (-2.0, 0.0)])).unwrap();
        let c = convolve_plane(&Raster::filled(5, 4, 0.3), &k, BorderMode::Replicate);
        assert!(c.data().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }
}
