//! Depth-dependent camera-shake blur for close-range scenes.
//!
//! A moving camera smears near objects more than far ones. This crate
//! partitions depth into bands whose blur kernels differ by at most `n`
//! pixels, blurs each band with one kernel and blends the results with
//! soft mattes ([`blur::IcbModel`]). A per-pixel reference model
//! ([`blur::PwbModel`]), coordinate-network deblurring ([`neural`]),
//! file formats, procedural scenes and a command-line front end sit on
//! top.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ablation;
pub mod blur;
pub mod cli;
pub mod curves;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod layering;
pub mod neural;
pub mod raster;
pub mod scene;

pub use error::{Error, Result};
pub use raster::{Image, Raster};
