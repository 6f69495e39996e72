//! Layered model vs per-pixel model on six occlusion-free scenes, for band
//! steps n = 1, 2, 3 and mask widths σ = 0.5 … 4. Writes the full table as
//! CSV to stdout and a per-n summary to stderr.
//!
//! cargo run --release --example ablation_sweep > ablation.csv

use parallax_blur::ablation::{ablate, AblationPlan};

fn main() -> anyhow::Result<()> {
    let report = ablate(&AblationPlan::standard(0))?;
    for s in report.by_n() {
        eprintln!(
            "n={} layers={:.1} psnr={:.3} dB ssim={:.4} time={:.2} ms kernels={:.0} B",
            s.n, s.layers, s.psnr_db, s.ssim, s.time_ms, s.kernel_bytes
        );
    }
    let mut spread: Vec<(u32, f64)> = Vec::new();
    for n in [1, 2, 3] {
        let psnrs: Vec<f64> = report
            .summary()
            .iter()
            .filter(|s| s.n == n)
            .map(|s| s.psnr_db)
            .collect();
        let hi = psnrs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = psnrs.iter().cloned().fold(f64::MAX, f64::min);
        spread.push((n, hi - lo));
    }
    eprintln!("sigma spread per n (dB): {spread:?}");
    report.write_csv(&mut std::io::stdout())?;
    Ok(())
}
