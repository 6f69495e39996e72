use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Image, Raster};

/// Pixels evaluated together in one matrix product. Fixed so that the
/// summation order of gradients never depends on the thread count.
pub(crate) const CHUNK: usize = 256;

/// Shape of a sine-activated coordinate network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirenShape {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub channels: usize,
    pub omega0: f64,
}

impl Default for SirenShape {
    fn default() -> Self {
        SirenShape {
            hidden_layers: 4,
            hidden_width: 192,
            channels: 3,
            omega0: 30.0,
        }
    }
}

impl SirenShape {
    /// `(fan_in, fan_out)` of every layer, input first.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = 2;
        for _ in 0..self.hidden_layers {
            dims.push((fan_in, self.hidden_width));
            fan_in = self.hidden_width;
        }
        dims.push((fan_in, self.channels));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::Domain(
                "network needs at least one non-empty hidden layer".into(),
            ));
        }
        if self.channels == 0 {
            return Err(Error::Domain("network needs at least one output channel".into()));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::Domain(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        Ok(())
    }
}

/// Multilayer perceptron `z ← sin(ω0 (W z + b))` on every hidden layer and
/// a linear output layer. All weights live in one flat vector: for each
/// layer, the row-major `fan_out × fan_in` matrix followed by the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct SirenNetwork {
    shape: SirenShape,
    seed: u64,
    params: Vec<f64>,
}

/// Activations of one chunk kept for the backward pass.
pub(crate) struct ChunkCache {
    /// Layer inputs, `inputs[0]` being the coordinates (`rows × 2`).
    inputs: Vec<Vec<f64>>,
    /// `ω0 cos(ω0 (W z + b))` for each hidden layer.
    slopes: Vec<Vec<f64>>,
    rows: usize,
}

impl SirenNetwork {
    /// Random initialization. The first layer draws from `U(-1/2, 1/2)`
    /// (that is `±1/fan_in` with two inputs); later layers draw from
    /// `U(±√(6/fan_in)/ω0)`. Biases draw from `U(±1/√fan_in)`.
    pub fn new(shape: SirenShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(shape.parameter_count());
        for (layer, (fan_in, fan_out)) in shape.layer_dims().into_iter().enumerate() {
            let w_bound = if layer == 0 {
                1.0 / fan_in as f64
            } else {
                (6.0 / fan_in as f64).sqrt() / shape.omega0
            };
            let b_bound = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-w_bound..=w_bound)));
            params.extend((0..fan_out).map(|_| rng.random_range(-b_bound..=b_bound)));
        }
        Ok(SirenNetwork { shape, seed, params })
    }

    pub fn from_parameters(shape: SirenShape, seed: u64, params: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if params.len() != shape.parameter_count() {
            return Err(Error::shape(shape.parameter_count(), params.len()));
        }
        Ok(SirenNetwork { shape, seed, params })
    }

    pub fn shape(&self) -> &SirenShape {
        &self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of `(weights, bias)` of every layer in the flat vector.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut at = 0;
        self.shape
            .layer_dims()
            .into_iter()
            .map(|(i, o)| {
                let w = at;
                at += i * o;
                let b = at;
                at += o;
                (w, b)
            })
            .collect()
    }

    /// `rows × fan_out = z · Wᵀ + b`.
    fn affine(
        &self,
        z: &[f64],
        rows: usize,
        layer: usize,
        offsets: &[(usize, usize)],
        dims: &[(usize, usize)],
    ) -> Vec<f64> {
        let (fan_in, fan_out) = dims[layer];
        let (w_at, b_at) = offsets[layer];
        let w = &self.params[w_at..w_at + fan_in * fan_out];
        let b = &self.params[b_at..b_at + fan_out];
        let mut out = Vec::with_capacity(rows * fan_out);
        for _ in 0..rows {
            out.extend_from_slice(b);
        }
        unsafe {
            matrixmultiply::dgemm(
                rows,
                fan_in,
                fan_out,
                1.0,
                z.as_ptr(),
                fan_in as isize,
                1,
                w.as_ptr(),
                1,
                fan_in as isize,
                1.0,
                out.as_mut_ptr(),
                fan_out as isize,
                1,
            );
        }
        out
    }

    /// Outputs (`rows × channels`) and, when `keep` is set, the activations
    /// needed to backpropagate.
    pub(crate) fn forward_chunk(&self, coords: &[f64], keep: bool) -> (Vec<f64>, Option<ChunkCache>) {
        let rows = coords.len() / 2;
        let dims = self.shape.layer_dims();
        let offsets = self.offsets();
        let w0 = self.shape.omega0;
        let mut z = coords.to_vec();
        let mut inputs = Vec::new();
        let mut slopes = Vec::new();
        for layer in 0..self.shape.hidden_layers {
            let mut pre = self.affine(&z, rows, layer, &offsets, &dims);
            if keep {
                slopes.push(pre.iter().map(|v| w0 * (w0 * v).cos()).collect());
            }
            pre.iter_mut().for_each(|v| *v = (w0 * *v).sin());
            if keep {
                inputs.push(std::mem::replace(&mut z, pre));
            } else {
                z = pre;
            }
        }
        let out = self.affine(&z, rows, self.shape.hidden_layers, &offsets, &dims);
        let cache = keep.then(|| {
            inputs.push(z);
            ChunkCache { inputs, slopes, rows }
        });
        (out, cache)
    }

    /// Accumulates `∂/∂θ Σ d_out · output` for one chunk into `grad`.
    pub(crate) fn backward_chunk(&self, cache: &ChunkCache, d_out: &[f64], grad: &mut [f64]) {
        let dims = self.shape.layer_dims();
        let offsets = self.offsets();
        let rows = cache.rows;
        let mut delta = d_out.to_vec();
        for layer in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[layer];
            let (w_at, b_at) = offsets[layer];
            let z = &cache.inputs[layer];
            if layer < self.shape.hidden_layers {
                delta.iter_mut().zip(&cache.slopes[layer]).for_each(|(d, s)| *d *= s);
            }
            // dW += deltaᵀ · z
            unsafe {
                matrixmultiply::dgemm(
                    fan_out,
                    rows,
                    fan_in,
                    1.0,
                    delta.as_ptr(),
                    1,
                    fan_out as isize,
                    z.as_ptr(),
                    fan_in as isize,
                    1,
                    1.0,
                    grad[w_at..].as_mut_ptr(),
                    fan_in as isize,
                    1,
                );
            }
            let db = &mut grad[b_at..b_at + fan_out];
            for r in 0..rows {
                for (g, d) in db.iter_mut().zip(&delta[r * fan_out..(r + 1) * fan_out]) {
                    *g += d;
                }
            }
            if layer == 0 {
                break;
            }
            // delta_in = delta · W
            let w = &self.params[w_at..w_at + fan_in * fan_out];
            let mut next = vec![0.0; rows * fan_in];
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    fan_out,
                    fan_in,
                    1.0,
                    delta.as_ptr(),
                    fan_out as isize,
                    1,
                    w.as_ptr(),
                    fan_in as isize,
                    1,
                    0.0,
                    next.as_mut_ptr(),
                    fan_in as isize,
                    1,
                );
            }
            delta = next;
        }
    }

    /// Network outputs at arbitrary coordinates, one row of `channels`
    /// values per coordinate.
    pub fn forward(&self, coords: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
        if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Domain("coordinates must be finite".into()));
        }
        let flat: Vec<f64> = coords.iter().flat_map(|&(x, y)| [x, y]).collect();
        let c = self.shape.channels;
        let out: Vec<Vec<f64>> = flat
            .par_chunks(2 * CHUNK)
            .map(|chunk| self.forward_chunk(chunk, false).0)
            .collect();
        Ok(out.concat().chunks(c).map(|r| r.to_vec()).collect())
    }

    /// Evaluates the network on the pixel centers of a `width × height`
    /// grid and returns the unclamped image.
    pub fn render(&self, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("render needs a non-empty grid".into()));
        }
        let coords = grid_coordinates(width, height);
        let out: Vec<Vec<f64>> = coords
            .par_chunks(2 * CHUNK)
            .map(|chunk| self.forward_chunk(chunk, false).0)
            .collect();
        Ok(outputs_to_image(&out.concat(), width, height, self.shape.channels))
    }
}

/// Pixel centers mapped to `[-1, 1]`, the longer axis spanning the full
/// range, as a flat `(x, y)` list in row-major pixel order.
pub fn grid_coordinates(width: usize, height: usize) -> Vec<f64> {
    let scale = width.max(height) as f64;
    let mut out = Vec::with_capacity(2 * width * height);
    for y in 0..height {
        let v = (2.0 * (y as f64 + 0.5) - height as f64) / scale;
        for x in 0..width {
            out.push((2.0 * (x as f64 + 0.5) - width as f64) / scale);
            out.push(v);
        }
    }
    out
}

pub(crate) fn outputs_to_image(values: &[f64], width: usize, height: usize, channels: usize) -> Image {
    let planes = (0..channels)
        .map(|c| Raster::from_fn(width, height, |x, y| values[(y * width + x) * channels + c]))
        .collect();
    Image::from_planes(planes).expect("planes share one shape")
}

pub(crate) fn image_to_outputs(image: &Image) -> Vec<f64> {
    let c = image.channels();
    let n = image.width() * image.height();
    let mut out = vec![0.0; n * c];
    for (ci, plane) in image.planes().iter().enumerate() {
        for (i, v) in plane.data().iter().enumerate() {
            out[i * c + ci] = *v;
        }
    }
    out
}
