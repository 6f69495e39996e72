//! Blur variation between a near and a far point as their separation
//! grows, and the camera shift that yields a fixed variation. CSV on stdout.
//!
//! cargo run --example variation_curves > curves.csv

use parallax_blur::curves::{curves, write_curves_csv, CurveKind, CurveParams};

fn main() -> anyhow::Result<()> {
    let params = CurveParams::default();
    let points = curves(&params)?;
    for &d in &params.near_depths {
        let last = points
            .iter()
            .rfind(|p| p.kind == CurveKind::Variation && p.near_depth == d)
            .expect("one point per separation");
        eprintln!(
            "near {d} m: variation {:.3} px at {} m separation, limit {:.3} px",
            last.variation_px, last.separation, last.bound_px
        );
    }
    write_curves_csv(&points, &mut std::io::stdout())?;
    Ok(())
}
