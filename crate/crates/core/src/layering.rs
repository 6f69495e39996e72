//! Depth layers, their soft masks, z-buffers and alpha mattes.
//!
//! Each pixel is assigned to the depth band that contains it. Band masks
//! are dilated by the paired kernel's reach and smoothed with a Gaussian so
//! that blur from neighbouring layers mixes across depth discontinuities.
//! Nearer layers occlude farther ones through the z-buffers
//! `M_l = Π_{l'>l} (1 - R̂_l')`, and the mattes `A_l = R̂_l·M_l / Σ R̂·M`
//! form a partition of unity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::DepthSequence;
use crate::raster::Raster;

/// Guard for the matte normalization; never reached for valid inputs.
pub const NORMALIZATION_EPS: f64 = 1e-12;

/// Metric depth raster, row-major, stored at PFM precision.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DepthMap {
    /// Rejects non-finite or non-positive depths, reporting how many.
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::shape(
                format!("{width}x{height} depths"),
                format!("{} values", values.len()),
            ));
        }
        let bad = values.iter().filter(|v| !(v.is_finite() && **v > 0.0)).count();
        if bad > 0 {
            return Err(Error::Domain(format!("{bad} depth values are not finite and positive")));
        }
        Ok(DepthMap { width, height, values })
    }

    pub fn constant(width: usize, height: usize, depth: f32) -> Result<Self> {
        Self::new(width, height, vec![depth; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let values = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x] as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f32::INFINITY, |a, &b| a.min(b)) as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0f32, |a, &b| a.max(b)) as f64
    }
}

/// Per-pixel layer index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    /// Binary indicator raster of one layer.
    pub fn mask(&self, layer: usize) -> Raster {
        let data = self
            .labels
            .iter()
            .map(|&l| if l as usize == layer { 1.0 } else { 0.0 })
            .collect();
        Raster::from_vec(self.width, self.height, data).expect("label map dimensions")
    }

    pub fn count(&self, layer: usize) -> usize {
        self.labels.iter().filter(|&&l| l as usize == layer).count()
    }
}

/// Assigns every pixel to its depth band (see [`DepthSequence::layer_of`]).
pub fn assign_regions(depth: &DepthMap, sequence: &DepthSequence) -> LabelMap {
    LabelMap {
        width: depth.width,
        height: depth.height,
        labels: depth
            .values
            .iter()
            .map(|&d| sequence.layer_of(d as f64) as u32)
            .collect(),
    }
}

/// Mean depth of each layer. A layer without pixels takes the midpoint of
/// its band.
pub fn optimal_layer_depths(depth: &DepthMap, labels: &LabelMap, sequence: &DepthSequence) -> Vec<f64> {
    let layers = sequence.len();
    let mut sums = vec![0.0f64; layers];
    let mut counts = vec![0usize; layers];
    for (&d, &l) in depth.values.iter().zip(&labels.labels) {
        sums[l as usize] += d as f64;
        counts[l as usize] += 1;
    }
    (0..layers)
        .map(|l| {
            if counts[l] == 0 {
                sequence.band_midpoint(l)
            } else {
                sums[l] / counts[l] as f64
            }
        })
        .collect()
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let mut w: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

fn dilate_rows(src: &Raster, radius: usize) -> Raster {
    let (w, h) = src.dims();
    Raster::from_fn(w, h, |x, y| {
        let lo = x.saturating_sub(radius);
        let hi = (x + radius).min(w - 1);
        src.row(y)[lo..=hi].iter().copied().fold(0.0, f64::max)
    })
}

fn dilate_cols(src: &Raster, radius: usize) -> Raster {
    let (w, h) = src.dims();
    Raster::from_fn(w, h, |x, y| {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        (lo..=hi).map(|yy| src.get(x, yy)).fold(0.0, f64::max)
    })
}

fn smooth_rows(src: &Raster, window: &[f64]) -> Raster {
    let (w, h) = src.dims();
    let r = (window.len() / 2) as i64;
    Raster::from_fn(w, h, |x, y| {
        let row = src.row(y);
        window
            .iter()
            .enumerate()
            .map(|(i, &g)| g * row[(x as i64 + i as i64 - r).clamp(0, w as i64 - 1) as usize])
            .sum()
    })
}

fn smooth_cols(src: &Raster, window: &[f64]) -> Raster {
    let (w, h) = src.dims();
    let r = (window.len() / 2) as i64;
    Raster::from_fn(w, h, |x, y| {
        window
            .iter()
            .enumerate()
            .map(|(i, &g)| g * src.get(x, (y as i64 + i as i64 - r).clamp(0, h as i64 - 1) as usize))
            .sum()
    })
}

/// Spatially extended soft version of a binary region: rectangular
/// dilation by `support` followed by a normalized Gaussian window of the
/// same size (edge-replicated), clipped to `[0, 1]`.
pub fn extend_region(mask: &Raster, support: (usize, usize), sigma: f64) -> Result<Raster> {
    let (sw, sh) = support;
    if sw % 2 == 0 || sh % 2 == 0 {
        return Err(Error::Contract(format!("mask support must be odd, got {sw}x{sh}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    if mask.is_zero() {
        return Ok(Raster::zeros(mask.width(), mask.height()));
    }
    let dilated = dilate_cols(&dilate_rows(mask, sw / 2), sh / 2);
    let smoothed = smooth_cols(
        &smooth_rows(&dilated, &gaussian_window(sw, sigma)),
        &gaussian_window(sh, sigma),
    );
    Ok(smoothed.map(|v| v.clamp(0.0, 1.0)))
}

/// Visibility of each layer behind the nearer ones. Index 0 is the
/// farthest layer.
pub fn z_buffers(extended_masks: &[Raster]) -> Vec<Raster> {
    let Some(first) = extended_masks.first() else {
        return Vec::new();
    };
    let (w, h) = first.dims();
    let mut out = vec![Raster::zeros(w, h); extended_masks.len()];
    let mut running = Raster::filled(w, h, 1.0);
    for l in (0..extended_masks.len()).rev() {
        out[l] = running.clone();
        for (m, r) in running.data_mut().iter_mut().zip(extended_masks[l].data()) {
            *m *= 1.0 - r;
        }
    }
    out
}

/// Normalized mattes `A_l = R̂_l·M_l / C`, together with `C`.
pub fn alpha_mattes_with_normalizer(extended_masks: &[Raster], zbuffers: &[Raster]) -> Result<(Vec<Raster>, Raster)> {
    if extended_masks.len() != zbuffers.len() || extended_masks.is_empty() {
        return Err(Error::Contract(format!(
            "{} masks vs {} z-buffers",
            extended_masks.len(),
            zbuffers.len()
        )));
    }
    let dims = extended_masks[0].dims();
    if extended_masks.iter().chain(zbuffers).any(|r| r.dims() != dims) {
        return Err(Error::shape(
            format!("{}x{}", dims.0, dims.1),
            "rasters of differing size",
        ));
    }
    let (w, h) = dims;
    let mut normalizer = Raster::zeros(w, h);
    for (r, m) in extended_masks.iter().zip(zbuffers) {
        for ((c, a), b) in normalizer.data_mut().iter_mut().zip(r.data()).zip(m.data()) {
            *c += a * b;
        }
    }
    let mattes = extended_masks
        .iter()
        .zip(zbuffers)
        .map(|(r, m)| {
            let data = r
                .data()
                .iter()
                .zip(m.data())
                .zip(normalizer.data())
                .map(|((a, b), c)| a * b / c.max(NORMALIZATION_EPS))
                .collect();
            Raster::from_vec(w, h, data).expect("matte dimensions")
        })
        .collect();
    Ok((mattes, normalizer))
}

pub fn alpha_mattes(extended_masks: &[Raster], zbuffers: &[Raster]) -> Result<Vec<Raster>> {
    alpha_mattes_with_normalizer(extended_masks, zbuffers).map(|(m, _)| m)
}

/// The complete layer model of a depth map.
#[derive(Clone, Debug)]
pub struct LayerDecomposition {
    pub sequence: DepthSequence,
    pub labels: LabelMap,
    pub extended_masks: Vec<Raster>,
    pub zbuffers: Vec<Raster>,
    pub mattes: Vec<Raster>,
    pub optimal_depths: Vec<f64>,
    /// Matte normalizer `C = Σ R̂_l·M_l`.
    pub normalizer: Raster,
}

impl LayerDecomposition {
    /// Builds masks, z-buffers and mattes from pixel labels. `supports[l]`
    /// is the odd window paired with layer `l` (usually the centered support
    /// of its kernel).
    pub fn from_labels(
        sequence: DepthSequence,
        labels: LabelMap,
        optimal_depths: Vec<f64>,
        supports: &[(usize, usize)],
        sigma: f64,
    ) -> Result<Self> {
        let layers = sequence.len();
        if supports.len() != layers || optimal_depths.len() != layers {
            return Err(Error::Contract(format!(
                "{layers} layers but {} supports and {} depths",
                supports.len(),
                optimal_depths.len()
            )));
        }
        let extended_masks = (0..layers)
            .into_par_iter()
            .map(|l| extend_region(&labels.mask(l), supports[l], sigma))
            .collect::<Result<Vec<_>>>()?;
        let zbuffers = z_buffers(&extended_masks);
        let (mattes, normalizer) = alpha_mattes_with_normalizer(&extended_masks, &zbuffers)?;
        Ok(LayerDecomposition {
            sequence,
            labels,
            extended_masks,
            zbuffers,
            mattes,
            optimal_depths,
            normalizer,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.sequence.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> DepthSequence {
        DepthSequence::from_values(vec![4.2, 1.4, 0.84], 1).unwrap()
    }

    #[test]
    fn region_examples() {
        let s = seq();
        let far = assign_regions(&DepthMap::constant(3, 2, 5.0).unwrap(), &s);
        assert!(far.labels().iter().all(|&l| l == 0));
        let mid = assign_regions(&DepthMap::constant(1, 1, 1.0).unwrap(), &s);
        assert_eq!(mid.get(0, 0), 2);
        let near = assign_regions(&DepthMap::constant(1, 1, 0.5).unwrap(), &s);
        assert_eq!(near.get(0, 0), 2);
    }

    #[test]
    fn depth_map_rejects_invalid() {
        let err = DepthMap::new(2, 1, vec![1.0, f32::NAN]).unwrap_err();
        assert!(err.to_string().contains("1 depth values"));
        assert!(DepthMap::new(2, 1, vec![0.0, -1.0]).is_err());
        assert!(DepthMap::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn extension_of_constants_and_empties() {
        let ones = Raster::filled(7, 5, 1.0);
        let out = extend_region(&ones, (5, 3), 4.0).unwrap();
        assert!(out.data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let zeros = Raster::zeros(7, 5);
        assert!(extend_region(&zeros, (5, 3), 4.0).unwrap().is_zero());
        assert!(extend_region(&ones, (4, 3), 4.0).is_err());
        assert!(extend_region(&ones, (3, 3), 0.0).is_err());
    }

    /// Direct 2D dilation + direct 2D Gaussian sum, no separability.
    fn brute_extend(mask: &Raster, support: (usize, usize), sigma: f64) -> Raster {
        let (w, h) = mask.dims();
        let (rx, ry) = ((support.0 / 2) as i64, (support.1 / 2) as i64);
        let dil = Raster::from_fn(w, h, |x, y| {
            let mut m: f64 = 0.0;
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx >= 0 && yy >= 0 && xx < w as i64 && yy < h as i64 {
                        m = m.max(mask.get(xx as usize, yy as usize));
                    }
                }
            }
            m
        });
        let mut g = Vec::new();
        let mut total = 0.0;
        for dy in -ry..=ry {
            for dx in -rx..=rx {
                let v = (-((dx * dx) as f64) / (2.0 * sigma * sigma)).exp()
                    * (-((dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                g.push((dx, dy, v));
                total += v;
            }
        }
        Raster::from_fn(w, h, |x, y| {
            g.iter()
                .map(|&(dx, dy, v)| {
                    let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    v / total * dil.get(xx, yy)
                })
                .sum::<f64>()
                .min(1.0)
        })
    }

    #[test]
    fn single_pixel_blob() {
        let mut mask = Raster::zeros(9, 9);
        mask.set(4, 4, 1.0);
        let out = extend_region(&mask, (3, 3), 4.0).unwrap();
        let oracle = brute_extend(&mask, (3, 3), 4.0);
        assert!(out.max_abs_diff(&oracle) < 1e-14);
        for y in 0..9 {
            for x in 0..9 {
                let inside = (2..=6).contains(&x) && (2..=6).contains(&y);
                assert_eq!(out.get(x, y) > 0.0, inside, "({x},{y})");
            }
        }
        for i in 0..9 {
            assert!((out.get(i, 4) - out.get(8 - i, 4)).abs() < 1e-15);
            assert!((out.get(4, i) - out.get(4, 8 - i)).abs() < 1e-15);
        }
    }

    #[test]
    fn zbuffer_examples() {
        let one = z_buffers(&[Raster::filled(2, 2, 0.3)]);
        assert!(one[0].data().iter().all(|&v| v == 1.0));
        let two = z_buffers(&[Raster::filled(1, 1, 1.0), Raster::filled(1, 1, 1.0)]);
        assert_eq!(two[0].get(0, 0), 0.0);
        let three = z_buffers(&[
            Raster::filled(1, 1, 1.0),
            Raster::filled(1, 1, 0.5),
            Raster::filled(1, 1, 0.5),
        ]);
        assert_eq!(three[0].get(0, 0), 0.25);
        assert_eq!(three[1].get(0, 0), 0.5);
        assert_eq!(three[2].get(0, 0), 1.0);
    }

    #[test]
    fn matte_examples() {
        let masks = vec![Raster::filled(2, 2, 0.7)];
        let a = alpha_mattes(&masks, &z_buffers(&masks)).unwrap();
        assert!(a[0].data().iter().all(|&v| v == 1.0));
        let masks = vec![Raster::filled(1, 1, 1.0), Raster::filled(1, 1, 1.0)];
        let a = alpha_mattes(&masks, &z_buffers(&masks)).unwrap();
        assert_eq!(a[0].get(0, 0), 0.0);
        assert_eq!(a[1].get(0, 0), 1.0);
        assert!(alpha_mattes(&masks, &[]).is_err());
    }

    #[test]
    fn optimal_depth_examples() {
        let s = seq();
        let depth = DepthMap::new(3, 1, vec![1.0, 1.2, 5.0]).unwrap();
        let labels = assign_regions(&depth, &s);
        let d = optimal_layer_depths(&depth, &labels, &s);
        assert!((d[0] - 5.0).abs() < 1e-12);
        assert!((d[1] - s.band_midpoint(1)).abs() < 1e-12);
        assert!((d[2] - (1.0f32 as f64 + 1.2f32 as f64) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mean_minimizes_squared_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f32> = (0..100).map(|_| rng.random_range(0.84f32..1.4)).collect();
        let depth = DepthMap::new(100, 1, samples.clone()).unwrap();
        let s = seq();
        let labels = assign_regions(&depth, &s);
        let d_star = optimal_layer_depths(&depth, &labels, &s)[2];
        let mse = |c: f64| samples.iter().map(|&z| (z as f64 - c).powi(2)).sum::<f64>();
        let best = mse(d_star);
        for i in 0..=1000 {
            let c = 0.84 + (1.4 - 0.84) * i as f64 / 1000.0;
            assert!(best <= mse(c) + 1e-12);
        }
    }
}
