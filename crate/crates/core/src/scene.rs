//! Procedural test scenes: textured planes at preset-dependent depths and
//! a matching camera path.
//!
//! The shake path is a sum of low-frequency sinusoids per axis, a stand-in
//! for recorded hand-shake trajectories.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose, Trajectory};
use crate::layering::DepthMap;
use crate::raster::{Image, Raster};

pub const FOCAL_LENGTH_M: f64 = 2.8e-3;
pub const PIXEL_PITCH_M: f64 = 16e-6;
/// Poses per generated trajectory.
pub const TRAJECTORY_SAMPLES: usize = 64;
/// Largest peak-to-peak shake excursion per axis.
pub const MAX_SHAKE_M: f64 = 3e-3;
/// Smallest scene side accepted by [`generate`].
pub const MIN_SIZE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Near-field subject under hand shake.
    Macro,
    /// Distant scene under lateral travel at constant speed.
    Trucking,
    /// Everything beyond the first band edge: blur is depth independent.
    Standard,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Background plane with a few constant-depth rectangles in front.
    #[default]
    Objects,
    /// One foreground rectangle over one background plane.
    TwoPlane,
    /// A single textured surface whose depth varies smoothly: no occlusion.
    Smooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub preset: Preset,
    pub layout: Layout,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(preset: Preset, size: usize, seed: u64) -> Self {
        SceneSpec {
            preset,
            layout: Layout::Objects,
            width: size,
            height: size,
            channels: 3,
            seed,
        }
    }

    pub fn layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn dims(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn channels(mut self, channels: usize) -> Self {
        self.channels = channels;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SceneFixture {
    pub spec: SceneSpec,
    pub sharp: Image,
    pub depth: DepthMap,
    pub trajectory: Trajectory,
    pub intrinsics: CameraIntrinsics,
}

/// A square scene with the default layout.
pub fn gen_scene(preset: Preset, size: usize, seed: u64) -> Result<SceneFixture> {
    generate(&SceneSpec::new(preset, size, seed))
}

pub fn generate(spec: &SceneSpec) -> Result<SceneFixture> {
    if spec.width < MIN_SIZE || spec.height < MIN_SIZE {
        return Err(Error::Domain(format!(
            "scenes must be at least {MIN_SIZE}x{MIN_SIZE}, got {}x{}",
            spec.width, spec.height
        )));
    }
    if spec.channels != 1 && spec.channels != 3 {
        return Err(Error::Domain(format!(
            "scenes have 1 or 3 channels, got {}",
            spec.channels
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let intrinsics = CameraIntrinsics::centered(FOCAL_LENGTH_M, PIXEL_PITCH_M, spec.width, spec.height)?;
    let trajectory = match spec.preset {
        Preset::Trucking => trucking_path(&mut rng)?,
        Preset::Macro | Preset::Standard => shake_path(&mut rng)?,
    };
    let (near, far) = match spec.preset {
        Preset::Macro => ((0.06, 0.1), (0.2, 0.4)),
        Preset::Trucking => ((2.0, 5.0), (10.0, 20.0)),
        Preset::Standard => {
            let (sx, sy) = trajectory.max_in_plane_translation();
            let kappa = (sx / intrinsics.pixel_pitch_x).max(sy / intrinsics.pixel_pitch_y) * FOCAL_LENGTH_M;
            let d0 = 2.0 * kappa;
            ((1.1 * d0, 2.0 * d0), (3.0 * d0, 6.0 * d0))
        }
    };
    let (w, h) = (spec.width, spec.height);
    let mut planes = texture(&mut rng, w, h, spec.channels);
    let depth = match spec.layout {
        Layout::Smooth => {
            let d_near = rng.random_range(near.0..near.1);
            let d_far = rng.random_range(far.0..far.1);
            let angle = rng.random_range(0.0..2.0 * PI);
            let (c, s) = (angle.cos(), angle.sin());
            let span = (w as f64 * c.abs() + h as f64 * s.abs()).max(1.0);
            let offset = (w as f64 * c.min(0.0) + h as f64 * s.min(0.0)).abs();
            // linear in inverse depth, so blur extent changes linearly across the frame
            DepthMap::from_fn(w, h, |x, y| {
                let u = ((x as f64 * c + y as f64 * s + offset) / span).clamp(0.0, 1.0);
                (1.0 / ((1.0 - u) / d_near + u / d_far)) as f32
            })?
        }
        Layout::TwoPlane | Layout::Objects => {
            let background = rng.random_range(far.0..far.1) as f32;
            let mut depth = vec![background; w * h];
            let count = if spec.layout == Layout::TwoPlane {
                1
            } else {
                rng.random_range(2..=3)
            };
            for _ in 0..count {
                let d = rng.random_range(near.0..near.1) as f32;
                let (x0, y0, x1, y1) = if spec.layout == Layout::TwoPlane {
                    let rw = rng.random_range(w * 35 / 100..=w * 55 / 100);
                    let rh = rng.random_range(h * 35 / 100..=h * 55 / 100);
                    let x0 = rng.random_range(w / 5..=w - w / 5 - rw);
                    let y0 = rng.random_range(h / 5..=h - h / 5 - rh);
                    (x0, y0, x0 + rw, y0 + rh)
                } else {
                    let rw = rng.random_range(w / 6..=w / 3);
                    let rh = rng.random_range(h / 6..=h / 3);
                    let x0 = rng.random_range(0..=w - rw);
                    let y0 = rng.random_range(0..=h - rh);
                    (x0, y0, x0 + rw, y0 + rh)
                };
                let patch = texture(&mut rng, w, h, spec.channels);
                for y in y0..y1 {
                    for x in x0..x1 {
                        let i = y * w + x;
                        if d < depth[i] {
                            depth[i] = d;
                            for (dst, src) in planes.iter_mut().zip(&patch) {
                                dst.data_mut()[i] = src.data()[i];
                            }
                        }
                    }
                }
            }
            DepthMap::new(w, h, depth)?
        }
    };
    Ok(SceneFixture {
        spec: spec.clone(),
        sharp: Image::from_planes(planes)?,
        depth,
        trajectory,
        intrinsics,
    })
}

/// A colour gradient overlaid with random rectangles and a stripe pattern,
/// kept inside `[0.05, 0.95]`.
fn texture(rng: &mut ChaCha8Rng, w: usize, h: usize, channels: usize) -> Vec<Raster> {
    let corner: Vec<[f64; 4]> = (0..channels)
        .map(|_| [0; 4].map(|_| rng.random_range(0.15..0.85)))
        .collect();
    let mut planes: Vec<Raster> = corner
        .iter()
        .map(|c| {
            Raster::from_fn(w, h, |x, y| {
                let u = x as f64 / (w - 1) as f64;
                let v = y as f64 / (h - 1) as f64;
                (1.0 - v) * ((1.0 - u) * c[0] + u * c[1]) + v * ((1.0 - u) * c[2] + u * c[3])
            })
        })
        .collect();
    let rects = rng.random_range(6..=12);
    for _ in 0..rects {
        let rw = rng.random_range(2..=(w / 4).max(3));
        let rh = rng.random_range(2..=(h / 4).max(3));
        let x0 = rng.random_range(0..w - rw);
        let y0 = rng.random_range(0..h - rh);
        let colour: Vec<f64> = (0..channels).map(|_| rng.random_range(0.05..0.95)).collect();
        for (plane, c) in planes.iter_mut().zip(&colour) {
            for y in y0..y0 + rh {
                for x in x0..x0 + rw {
                    let v = plane.get(x, y);
                    plane.set(x, y, 0.3 * v + 0.7 * c);
                }
            }
        }
    }
    let freq = rng.random_range(0.15..0.5);
    let angle = rng.random_range(0.0..PI);
    let amp = rng.random_range(0.05..0.15);
    for plane in &mut planes {
        for y in 0..h {
            for x in 0..w {
                let phase = freq * (x as f64 * angle.cos() + y as f64 * angle.sin());
                let v = plane.get(x, y) + amp * phase.sin();
                plane.set(x, y, v.clamp(0.05, 0.95));
            }
        }
    }
    planes
}

/// Sum of three sinusoids per in-plane axis, rescaled to a random
/// peak-to-peak excursion of 2 to 3 mm.
fn shake_path(rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    let axis = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.2..1.0),
                    rng.random_range(0.3..1.5),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let raw: Vec<f64> = (0..TRAJECTORY_SAMPLES)
            .map(|i| {
                let t = i as f64 / (TRAJECTORY_SAMPLES - 1) as f64;
                terms.iter().map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum()
            })
            .collect();
        let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let target = rng.random_range(2e-3..MAX_SHAKE_M);
        let scale = if hi > lo { target / (hi - lo) } else { 0.0 };
        raw.iter().map(|v| (v - lo) * scale).collect()
    };
    let xs = axis(rng);
    let ys = axis(rng);
    let poses = (0..TRAJECTORY_SAMPLES)
        .map(|i| Pose::translated(i as f64 / (TRAJECTORY_SAMPLES - 1) as f64, [xs[i], ys[i], 0.0]))
        .collect();
    Trajectory::with_mid_reference(poses)
}

/// Straight in-plane travel of 5 to 10 cm at constant speed.
fn trucking_path(rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    let length = rng.random_range(0.05..0.10);
    let angle = rng.random_range(-0.35..0.35);
    let end = [length * f64::cos(angle), length * f64::sin(angle), 0.0];
    Trajectory::linear([0.0; 3], end, TRAJECTORY_SAMPLES, TRAJECTORY_SAMPLES / 2)
}
