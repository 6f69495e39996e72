use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::siren::{grid_coordinates, image_to_outputs, outputs_to_image, SirenNetwork, SirenShape, CHUNK};
use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::raster::{Image, Raster};

/// Optimization recipe for [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Weight of the total-variation term.
    pub lambda: f64,
    /// Learning rate reached at the last iteration.
    pub lr_min: f64,
    pub grad_clip_norm: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub seed: u64,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub omega0: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 400,
            learning_rate: 5e-4,
            lambda: 8e-6,
            lr_min: 5e-6,
            grad_clip_norm: 1.0,
            betas: (0.9, 0.999),
            eps: 1e-8,
            seed: 0,
            hidden_layers: 4,
            hidden_width: 192,
            omega0: 30.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be >= 1".into()));
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("lr_min", self.lr_min),
            ("grad_clip_norm", self.grad_clip_norm),
            ("eps", self.eps),
            ("omega0", self.omega0),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let (b1, b2) = self.betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::Domain(format!("betas must lie in [0, 1), got ({b1}, {b2})")));
        }
        Ok(())
    }

    pub fn shape(&self, channels: usize) -> SirenShape {
        SirenShape {
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            channels,
            omega0: self.omega0,
        }
    }
}

/// Cosine annealing from `lr_max` at step 0 to `lr_min` at step `total`.
pub fn cosine_lr(step: usize, total: usize, lr_max: f64, lr_min: f64) -> f64 {
    if step == 0 {
        return lr_max;
    }
    if step >= total {
        return lr_min;
    }
    let phase = std::f64::consts::PI * step as f64 / total as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + phase.cos())
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    betas: (f64, f64),
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, betas: (f64, f64), eps: f64) -> Self {
        Adam {
            betas,
            eps,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let (b1, b2) = self.betas;
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` in place so its Euclidean norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Anisotropic total variation: sum of absolute forward differences along
/// x and y over every channel.
pub fn total_variation(image: &Image) -> f64 {
    let mut sum = 0.0;
    for plane in image.planes() {
        let (w, h) = plane.dims();
        let d = plane.data();
        for y in 0..h {
            for x in 0..w {
                let v = d[y * w + x];
                if x + 1 < w {
                    sum += (d[y * w + x + 1] - v).abs();
                }
                if y + 1 < h {
                    sum += (d[(y + 1) * w + x] - v).abs();
                }
            }
        }
    }
    sum
}

/// Subgradient of [`total_variation`] with `sign(0) = 0`.
fn total_variation_grad(image: &Image, scale: f64) -> Image {
    let planes = image
        .planes()
        .iter()
        .map(|plane| {
            let (w, h) = plane.dims();
            let d = plane.data();
            let mut g = vec![0.0; w * h];
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    if x + 1 < w {
                        let s = sign(d[i + 1] - d[i]) * scale;
                        g[i + 1] += s;
                        g[i] -= s;
                    }
                    if y + 1 < h {
                        let s = sign(d[i + w] - d[i]) * scale;
                        g[i + w] += s;
                        g[i] -= s;
                    }
                }
            }
            Raster::from_vec(w, h, g).expect("dimensions match")
        })
        .collect();
    Image::from_planes(planes).expect("planes share one shape")
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_observation(net: &SirenNetwork, observed: &Image) -> Result<()> {
    if net.shape().channels != observed.channels() {
        return Err(Error::shape(
            format!("{} channels", net.shape().channels),
            format!("{} channels", observed.channels()),
        ));
    }
    Ok(())
}

/// `Σ ‖B(render(net)) − y‖² + λ · TV(render(net))`.
pub fn fit_loss(net: &SirenNetwork, observed: &Image, blur: &dyn BlurOperator, lambda: f64) -> Result<f64> {
    check_observation(net, observed)?;
    let sharp = net.render(observed.width(), observed.height())?;
    let blurred = blur.apply(&sharp)?;
    let residual = blurred.axpby(1.0, observed, -1.0)?;
    Ok(residual.dot(&residual)? + lambda * total_variation(&sharp))
}

/// Loss together with its gradient with respect to every network
/// parameter. Chunks are reduced in a fixed order, so the result does not
/// depend on the number of threads.
pub fn loss_and_gradient(
    net: &SirenNetwork,
    observed: &Image,
    blur: &dyn BlurOperator,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_observation(net, observed)?;
    let (w, h, c) = (observed.width(), observed.height(), observed.channels());
    let coords = grid_coordinates(w, h);
    let passes: Vec<_> = coords
        .par_chunks(2 * CHUNK)
        .map(|chunk| net.forward_chunk(chunk, true))
        .collect();
    let values: Vec<f64> = passes.iter().flat_map(|(out, _)| out.iter().copied()).collect();
    let sharp = outputs_to_image(&values, w, h, c);

    let blurred = blur.apply(&sharp)?;
    let residual = blurred.axpby(1.0, observed, -1.0)?;
    let loss = residual.dot(&residual)? + lambda * total_variation(&sharp);

    let d_sharp = blur.adjoint(&residual.map(|r| 2.0 * r))?;
    let d_sharp = if lambda > 0.0 {
        d_sharp.axpby(1.0, &total_variation_grad(&sharp, lambda), 1.0)?
    } else {
        d_sharp
    };
    let d_out = image_to_outputs(&d_sharp);

    let n = net.parameters().len();
    let partials: Vec<Vec<f64>> = passes
        .par_iter()
        .enumerate()
        .map(|(i, (_, cache))| {
            let mut g = vec![0.0; n];
            let start = i * CHUNK * c;
            let rows = CHUNK.min(w * h - i * CHUNK);
            net.backward_chunk(
                cache.as_ref().expect("cache kept"),
                &d_out[start..start + rows * c],
                &mut g,
            );
            g
        })
        .collect();
    let mut grad = vec![0.0; n];
    for p in &partials {
        grad.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    Ok((loss, grad))
}

/// Result of [`fit`].
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub network: SirenNetwork,
    /// Loss before every update.
    pub losses: Vec<f64>,
    /// Loss after the last update.
    pub final_loss: f64,
}

/// Fits a fresh network so that its blurred rendering matches `observed`.
/// Every iteration uses all pixels.
pub fn fit(observed: &Image, blur: &dyn BlurOperator, config: &FitConfig) -> Result<FitOutcome> {
    config.validate()?;
    let network = SirenNetwork::new(config.shape(observed.channels()), config.seed)?;
    fit_from(network, observed, blur, config)
}

/// Like [`fit`] but continues from an existing network.
pub fn fit_from(
    mut network: SirenNetwork,
    observed: &Image,
    blur: &dyn BlurOperator,
    config: &FitConfig,
) -> Result<FitOutcome> {
    config.validate()?;
    let mut adam = Adam::new(network.parameters().len(), config.betas, config.eps);
    let mut losses = Vec::with_capacity(config.iterations);
    for step in 0..config.iterations {
        let (loss, mut grad) = loss_and_gradient(&network, observed, blur, config.lambda)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("loss became {loss} at iteration {step}")));
        }
        let norm = clip_grad_norm(&mut grad, config.grad_clip_norm);
        if !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "gradient norm became {norm} at iteration {step}"
            )));
        }
        let lr = cosine_lr(step, config.iterations, config.learning_rate, config.lr_min);
        adam.step(network.parameters_mut(), &grad, lr);
        if step % 50 == 0 {
            info!("iteration {step}: loss {loss:.6e}, grad norm {norm:.3e}, lr {lr:.3e}");
        } else {
            debug!("iteration {step}: loss {loss:.6e}");
        }
        losses.push(loss);
    }
    let final_loss = fit_loss(&network, observed, blur, config.lambda)?;
    if !final_loss.is_finite() {
        return Err(Error::Numerical(format!("final loss is {final_loss}")));
    }
    Ok(FitOutcome {
        network,
        losses,
        final_loss,
    })
}
