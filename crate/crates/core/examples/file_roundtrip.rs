//! Writes a generated scene to disk in every supported format and reads it
//! back, reporting the largest deviation per file.
//!
//! cargo run --example file_roundtrip -- [dir]

use std::path::PathBuf;

use parallax_blur::io::{load_depth, load_image, load_trajectory, save_depth, save_image, save_trajectory, BitDepth};
use parallax_blur::scene::{gen_scene, Preset};

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "roundtrip_out".into()));
    std::fs::create_dir_all(&dir)?;
    let scene = gen_scene(Preset::Trucking, 64, 11)?;

    for (name, bits) in [
        ("sharp8.png", BitDepth::Eight),
        ("sharp16.png", BitDepth::Sixteen),
        ("sharp.ppm", BitDepth::Eight),
    ] {
        let path = dir.join(name);
        save_image(&scene.sharp, &path, bits)?;
        let back = load_image(&path)?;
        println!("{name:<12} max error {:.2e}", back.max_abs_diff(&scene.sharp)?);
    }

    let path = dir.join("depth.pfm");
    save_depth(&scene.depth, &path)?;
    println!("depth.pfm    bit-exact {}", load_depth(&path)? == scene.depth);

    let path = dir.join("trajectory.csv");
    save_trajectory(&scene.trajectory, &path)?;
    let back = load_trajectory(&path)?;
    let worst = scene
        .trajectory
        .poses()
        .iter()
        .zip(back.poses())
        .map(|(a, b)| (a.translation - b.translation).norm())
        .fold(0.0, f64::max);
    println!("trajectory   {} poses, max translation error {worst:.2e} m", back.len());
    Ok(())
}
