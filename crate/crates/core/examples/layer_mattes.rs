//! Decomposes a scene depth map into layers and reports, per layer, the
//! band, mean depth, pixel count, kernel size and matte coverage.
//!
//! cargo run --example layer_mattes -- [sigma] [n]

use parallax_blur::blur::{BlurConfig, IcbModel};
use parallax_blur::scene::{generate, Preset, SceneSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);
    let n: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let scene = generate(&SceneSpec::new(Preset::Macro, 96, 2))?;
    let config = BlurConfig {
        sigma,
        n,
        ..BlurConfig::default()
    };
    let model = IcbModel::build(&scene.depth, &scene.trajectory, &scene.intrinsics, &config)?;
    let d = &model.decomposition;
    println!("layer  edge_m   depth_m   pixels  kernel  matte_sum");
    for l in 0..model.layer_count() {
        let (kw, kh) = model.kernels[l].support();
        println!(
            "{l:>5}  {:>6.4}  {:>7.4}  {:>7}  {kw:>2}x{kh:<3}  {:>9.1}",
            d.sequence.values()[l],
            d.optimal_depths[l],
            d.labels.count(l),
            d.mattes[l].data().iter().sum::<f64>()
        );
    }
    let worst = (0..d.normalizer.len())
        .map(|i| (d.mattes.iter().map(|a| a.data()[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    println!("max |sum of mattes - 1| = {worst:.2e}");
    Ok(())
}
