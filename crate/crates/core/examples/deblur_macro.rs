//! Blurs a two-plane macro scene with the layered model, then recovers the
//! sharp image by fitting a coordinate network through the same operator.
//!
//! cargo run --release --example deblur_macro -- [iterations] [seed]

use std::time::Instant;

use parallax_blur::blur::{psnr, BlurConfig, IcbModel};
use parallax_blur::neural::{fit, FitConfig};
use parallax_blur::scene::{generate, Layout, Preset, SceneSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(400);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let scene = generate(&SceneSpec::new(Preset::Macro, 96, seed).layout(Layout::TwoPlane))?;
    let model = IcbModel::build(
        &scene.depth,
        &scene.trajectory,
        &scene.intrinsics,
        &BlurConfig::default(),
    )?;
    let op = model.operator()?;
    let blurred = model.forward(&scene.sharp)?;
    println!(
        "layers: {}, blurred PSNR {:.2} dB",
        model.layer_count(),
        psnr(&blurred, &scene.sharp)?
    );

    let config = FitConfig {
        iterations,
        seed,
        ..FitConfig::default()
    };
    let start = Instant::now();
    let outcome = fit(&blurred, &op, &config)?;
    let restored = outcome.network.render(96, 96)?.map(|v| v.clamp(0.0, 1.0));
    println!(
        "fit: {:.1} s, loss {:.4e} -> {:.4e}, restored PSNR {:.2} dB",
        start.elapsed().as_secs_f64(),
        outcome.losses[0],
        outcome.final_loss,
        psnr(&restored, &scene.sharp)?
    );
    Ok(())
}
