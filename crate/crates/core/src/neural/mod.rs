//! Single-image deblurring with a sine-activated coordinate network.
//!
//! The sharp image is represented by a network mapping pixel coordinates
//! to intensities. Its rendering is pushed through a frozen, known blur
//! operator and compared with the observation; a total-variation term on
//! the rendering keeps the result smooth.

mod checkpoint;
mod fit;
mod siren;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use fit::{
    clip_grad_norm, cosine_lr, fit, fit_from, fit_loss, loss_and_gradient, total_variation, Adam, FitConfig, FitOutcome,
};
pub use siren::{grid_coordinates, SirenNetwork, SirenShape};
