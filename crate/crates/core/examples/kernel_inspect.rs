//! Prints the blur kernel of a point at a few depths along a hand-shake
//! path as an ASCII density plot.
//!
//! cargo run --example kernel_inspect -- [depth_m ...]

use parallax_blur::kernels::ParallaxProfile;
use parallax_blur::scene::{gen_scene, Preset};

fn main() -> anyhow::Result<()> {
    let depths: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let depths = if depths.is_empty() {
        vec![0.06, 0.12, 0.3, 1.0]
    } else {
        depths
    };
    let scene = gen_scene(Preset::Macro, 64, 3)?;
    let profile = ParallaxProfile::new(&scene.trajectory, &scene.intrinsics);
    let shades = [' ', '.', ':', '+', '*', '#'];
    for d in depths {
        let k = profile.kernel(d)?;
        let peak = k.weights().iter().cloned().fold(0.0, f64::max);
        println!(
            "depth {d} m: {}x{} taps, anchor {:?}",
            k.width(),
            k.height(),
            k.anchor()
        );
        for row in k.weights().chunks(k.width()) {
            let line: String = row
                .iter()
                .map(|&w| shades[((w / peak) * (shades.len() - 1) as f64).ceil() as usize])
                .collect();
            println!("  |{line}|");
        }
    }
    Ok(())
}
