//! Full-reference image quality metrics for a peak value of 1.0.

use crate::error::{Error, Result};
use crate::raster::{Image, Raster};

/// Reported PSNR for identical images.
pub const PSNR_IDENTICAL_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio over all channels.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, q) in a.planes().iter().zip(b.planes()) {
        for (x, y) in p.data().iter().zip(q.data()) {
            sum += (x - y) * (x - y);
            count += 1;
        }
    }
    let mse = sum / count as f64;
    if mse == 0.0 {
        return Ok(PSNR_IDENTICAL_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_IDENTICAL_DB))
}

fn gaussian_1d() -> [f64; SSIM_WINDOW] {
    let mut g = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable Gaussian filtering restricted to windows fully inside the
/// raster ("valid" mode).
fn filter_valid(src: &[f64], w: usize, h: usize, g: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..SSIM_WINDOW).map(|i| g[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| g[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

fn ssim_plane(a: &Raster, b: &Raster) -> f64 {
    let (w, h) = a.dims();
    let g = gaussian_1d();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let aa: Vec<f64> = a.data().iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.data().iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    let (mu_a, ow, oh) = filter_valid(a.data(), w, h, &g);
    let (mu_b, ..) = filter_valid(b.data(), w, h, &g);
    let (e_aa, ..) = filter_valid(&aa, w, h, &g);
    let (e_bb, ..) = filter_valid(&bb, w, h, &g);
    let (e_ab, ..) = filter_valid(&ab, w, h, &g);
    let mut total = 0.0;
    for i in 0..ow * oh {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / (ow * oh) as f64
}

/// Mean structural similarity: 11×11 Gaussian window (σ = 1.5),
/// `K1 = 0.01`, `K2 = 0.03`, averaged over valid windows and channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::Contract(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let sum: f64 = a.planes().iter().zip(b.planes()).map(|(p, q)| ssim_plane(p, q)).sum();
    Ok(sum / a.channels() as f64)
}
