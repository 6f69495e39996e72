//! Prints the depth band edges for a phone camera under 3 mm of shake, for
//! band steps n = 1, 2, 3, with the blur extent at each edge.
//!
//! cargo run --example depth_bands -- [shift_mm] [min_depth_m]

use parallax_blur::geometry::{blur_extent, depth_sequence_1d, CameraIntrinsics};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let shift = args.next().map(|s| s.parse::<f64>()).transpose()?.unwrap_or(3.0) * 1e-3;
    let d_min: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let camera = CameraIntrinsics::centered(2.8e-3, 4e-6, 4032, 3024)?;
    for n in 1..=3 {
        let seq = depth_sequence_1d(shift, camera.focal_length, camera.pixel_pitch_x, n, d_min)?;
        println!("n = {n}: {} bands", seq.len());
        for (l, &d) in seq.values().iter().enumerate() {
            let px = blur_extent(shift, &camera, d)? / camera.pixel_pitch_x;
            println!("  D_{l:<3} {d:>9.4} m  extent {px:>6.2} px");
        }
    }
    Ok(())
}
