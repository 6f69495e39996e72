//! Brute-force reference implementations shared by the integration tests.
//! They recompute everything from poses and raw pixels without going
//! through the library's kernel or convolution code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use parallax_blur::blur::BlurOperator;
use parallax_blur::geometry::{CameraIntrinsics, Trajectory};
use parallax_blur::kernels::BlurKernel;
use parallax_blur::layering::DepthMap;
use parallax_blur::neural::{fit_loss, loss_and_gradient, SirenNetwork};
use parallax_blur::{Image, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_planes(
        (0..c)
            .map(|_| Raster::from_fn(w, h, |_, _| rng.random::<f64>()))
            .collect(),
    )
    .unwrap()
}

/// Rounded displacement histogram of a point at `depth`, keyed by tap.
/// Rotation is assumed absent.
pub fn histogram(traj: &Trajectory, intr: &CameraIntrinsics, depth: f64) -> BTreeMap<(i64, i64), f64> {
    let r = traj.reference().translation;
    let m = traj.len() as f64;
    let mut h = BTreeMap::new();
    for p in traj.poses() {
        let sx = p.translation.x - r.x;
        let sy = p.translation.y - r.y;
        let dx = -sx * intr.focal_length / (intr.pixel_pitch_x * depth);
        let dy = -sy * intr.focal_length / (intr.pixel_pitch_y * depth);
        let tap = (round_half_away(dx), round_half_away(dy));
        *h.entry(tap).or_insert(0.0) += 1.0 / m;
    }
    h
}

pub fn round_half_away(v: f64) -> i64 {
    let a = v.abs();
    let f = a.floor();
    let r = if a - f >= 0.5 { f + 1.0 } else { f };
    (r as i64) * if v < 0.0 { -1 } else { 1 }
}

fn clamp(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// `y(p) = Σ_u k(u) · x(p - u)` with edge replication.
pub fn convolve_oracle(x: &Image, k: &BTreeMap<(i64, i64), f64>) -> Image {
    let (w, h) = (x.width(), x.height());
    Image::from_planes(
        x.planes()
            .iter()
            .map(|p| {
                Raster::from_fn(w, h, |px, py| {
                    k.iter()
                        .map(|(&(dx, dy), wt)| wt * p.get(clamp(px as i64 - dx, w), clamp(py as i64 - dy, h)))
                        .sum()
                })
            })
            .collect(),
    )
    .unwrap()
}

/// Every pixel blurred with the histogram of its own depth.
pub fn pwb_oracle(x: &Image, depth: &DepthMap, traj: &Trajectory, intr: &CameraIntrinsics) -> Image {
    let (w, h) = (x.width(), x.height());
    let mut cache: BTreeMap<u32, BTreeMap<(i64, i64), f64>> = BTreeMap::new();
    let mut planes: Vec<Raster> = (0..x.channels()).map(|_| Raster::zeros(w, h)).collect();
    for py in 0..h {
        for px in 0..w {
            let d = depth.values()[py * w + px];
            let k = cache
                .entry(d.to_bits())
                .or_insert_with(|| histogram(traj, intr, d as f64));
            for (c, plane) in planes.iter_mut().enumerate() {
                let src = x.plane(c);
                let v: f64 = k
                    .iter()
                    .map(|(&(dx, dy), wt)| wt * src.get(clamp(px as i64 - dx, w), clamp(py as i64 - dy, h)))
                    .sum();
                plane.set(px, py, v);
            }
        }
    }
    Image::from_planes(planes).unwrap()
}

/// Chebyshev distance from every pixel to the nearest pixel with a
/// different label, capped at `cap`.
pub fn boundary_distance(labels: &[u32], w: usize, h: usize, cap: usize) -> Vec<usize> {
    let mut out = vec![cap; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            'search: for r in 1..cap {
                let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
                let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        if labels[yy * w + xx] != l {
                            out[y * w + x] = r;
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    out
}

/// A depth value strictly inside band `l` of `edges` (decreasing).
pub fn depth_in_band(edges: &[f64], l: usize, t: f64) -> f64 {
    if l == 0 {
        edges[0] * (1.0 + t)
    } else {
        edges[l] + t * (edges[l - 1] - edges[l])
    }
}

/// Random axis-aligned rectangles painted over a background, each with one
/// label drawn from `0..layers`.
pub fn random_labels(w: usize, h: usize, layers: usize, rects: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut labels = vec![rng.random_range(0..layers as u32); w * h];
    for _ in 0..rects {
        let l = rng.random_range(0..layers as u32);
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (rw, rh) = (rng.random_range(4..=w / 2), rng.random_range(4..=h / 2));
        for y in y0..(y0 + rh).min(h) {
            for x in x0..(x0 + rw).min(w) {
                labels[y * w + x] = l;
            }
        }
    }
    labels
}

/// Soft region by direct 2D evaluation: maximum over the support window,
/// then a separable Gaussian of the same size with clamped coordinates.
pub fn extend_region_oracle(mask: &Raster, support: (usize, usize), sigma: f64) -> Raster {
    let (w, h) = mask.dims();
    let (rx, ry) = ((support.0 / 2) as i64, (support.1 / 2) as i64);
    let dilated = Raster::from_fn(w, h, |x, y| {
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
    let g = |r: i64, d: i64| {
        (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()
            / (-r..=r)
                .map(|e| (-(e * e) as f64 / (2.0 * sigma * sigma)).exp())
                .sum::<f64>()
    };
    Raster::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for dy in -ry..=ry {
            for dx in -rx..=rx {
                acc += g(rx, dx) * g(ry, dy) * dilated.get(clamp(x as i64 + dx, w), clamp(y as i64 + dy, h));
            }
        }
        acc.clamp(0.0, 1.0)
    })
}

/// Smooth 2D hand-shake of 64 poses with the given peak-to-peak excursion
/// per axis, referenced to its middle pose.
pub fn shake(excursion_m: f64, seed: u64) -> Trajectory {
    use parallax_blur::geometry::Pose;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axis = || {
        let parts: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.0..6.3),
                    rng.random_range(0.2..1.0),
                )
            })
            .collect();
        let raw: Vec<f64> = (0..64)
            .map(|i| {
                let t = i as f64 / 63.0;
                parts
                    .iter()
                    .map(|(f, p, a)| a * (std::f64::consts::TAU * f * t + p).sin())
                    .sum()
            })
            .collect();
        let (lo, hi) = raw.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        raw.into_iter()
            .map(move |v| (v - lo) / (hi - lo) * excursion_m)
            .collect::<Vec<f64>>()
    };
    let xs = axis();
    let ys = axis();
    let poses = (0..64)
        .map(|i| Pose::translated(i as f64 / 63.0, [xs[i], ys[i], 0.0]))
        .collect();
    Trajectory::with_mid_reference(poses).unwrap()
}

pub fn random_kernel(seed: u64) -> BlurKernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..9).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    BlurKernel::new(3, 3, (1, 1), w.iter().map(|v| v / s).collect()).unwrap()
}

/// Forward differences of the rendering along x then y, all channels.
fn differences(net: &SirenNetwork, w: usize, h: usize) -> Vec<f64> {
    let img = net.render(w, h).unwrap();
    let mut out = Vec::new();
    for p in img.planes() {
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    out.push(p.get(x + 1, y) - p.get(x, y));
                }
                if y + 1 < h {
                    out.push(p.get(x, y + 1) - p.get(x, y));
                }
            }
        }
    }
    out
}

fn signs(d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|v| {
            if *v > 0.0 {
                1.0
            } else if *v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

pub struct Check {
    /// Parameters whose step crossed no total-variation kink.
    pub plain: usize,
    pub worst_plain: f64,
    /// All parameters, with the absolute values linearized at the signs of
    /// the unperturbed rendering.
    pub frozen: usize,
    pub worst_frozen: f64,
}

fn relative(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs())
}

/// Central differences with step 1e-4 against the analytic gradient,
/// masked where the analytic value is below 1e-8.
pub fn gradient_check(net: &SirenNetwork, observed: &Image, op: &dyn BlurOperator, lambda: f64) -> Check {
    let step = 1e-4;
    let (w, h) = (observed.width(), observed.height());
    let (_, grad) = loss_and_gradient(net, observed, op, lambda).unwrap();
    let base_signs = signs(&differences(net, w, h));
    let frozen_loss = |n: &SirenNetwork| {
        let tv: f64 = differences(n, w, h).iter().zip(&base_signs).map(|(d, s)| d * s).sum();
        fit_loss(n, observed, op, 0.0).unwrap() + lambda * tv
    };
    let mut check = Check {
        plain: 0,
        worst_plain: 0.0,
        frozen: 0,
        worst_frozen: 0.0,
    };
    for (i, &analytic) in grad.iter().enumerate() {
        if analytic.abs() < 1e-8 {
            continue;
        }
        let mut plus = net.clone();
        plus.parameters_mut()[i] += step;
        let mut minus = net.clone();
        minus.parameters_mut()[i] -= step;
        let numeric = (frozen_loss(&plus) - frozen_loss(&minus)) / (2.0 * step);
        check.worst_frozen = check.worst_frozen.max(relative(analytic, numeric));
        check.frozen += 1;
        let smooth = lambda == 0.0
            || (signs(&differences(&plus, w, h)) == base_signs && signs(&differences(&minus, w, h)) == base_signs);
        if smooth {
            let numeric = (fit_loss(&plus, observed, op, lambda).unwrap()
                - fit_loss(&minus, observed, op, lambda).unwrap())
                / (2.0 * step);
            check.worst_plain = check.worst_plain.max(relative(analytic, numeric));
            check.plain += 1;
        }
    }
    check
}
