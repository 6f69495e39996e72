//! Accuracy and cost of the layered model across band steps `n` and mask
//! smoothing widths `σ`, measured against the pixel-wise model on scenes
//! without occlusions.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::blur::{psnr, ssim, BlurConfig, IcbModel, PwbModel};
use crate::error::Result;
use crate::io::REPORT_SCHEMA_VERSION;
use crate::raster::Image;
use crate::scene::{generate, Layout, Preset, SceneFixture, SceneSpec};

#[derive(Clone, Debug)]
pub struct AblationPlan {
    pub fixtures: Vec<SceneSpec>,
    pub ns: Vec<u32>,
    pub sigmas: Vec<f64>,
    /// Timed repetitions per configuration; the fastest one is reported.
    pub repeats: usize,
    /// Every setting other than `n` and `σ`.
    pub base: BlurConfig,
}

impl AblationPlan {
    /// Six smooth-depth fixtures (three macro, three trucking), `n ∈ {1, 2, 3}`
    /// and `σ ∈ {0.5, 1.0, …, 4.0}`.
    pub fn standard(seed: u64) -> Self {
        let fixtures = (0..6)
            .map(|i| {
                let preset = if i < 3 { Preset::Macro } else { Preset::Trucking };
                SceneSpec::new(preset, 96, seed + i as u64)
                    .layout(Layout::Smooth)
                    .dims(128, 96)
            })
            .collect();
        AblationPlan {
            fixtures,
            ns: vec![1, 2, 3],
            sigmas: (1..=8).map(|k| 0.5 * k as f64).collect(),
            repeats: 3,
            base: BlurConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationRecord {
    pub schema_version: u32,
    pub fixture: usize,
    pub preset: Preset,
    pub n: u32,
    pub sigma: f64,
    pub layers: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    pub kernel_bytes: usize,
    pub time_ms: f64,
}

/// Mean over fixtures for one `(n, σ)` pair.
#[derive(Clone, Debug, Serialize)]
pub struct AblationSummary {
    pub n: u32,
    pub sigma: f64,
    pub layers: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub kernel_bytes: f64,
    pub time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct AblationReport {
    pub records: Vec<AblationRecord>,
}

struct Prepared {
    fixture: SceneFixture,
    reference: Image,
}

fn prepare(spec: &SceneSpec, base: &BlurConfig) -> Result<Prepared> {
    let fixture = generate(spec)?;
    let pwb = PwbModel::build(&fixture.depth, &fixture.trajectory, &fixture.intrinsics, base)?;
    let reference = pwb.forward(&fixture.sharp)?;
    Ok(Prepared { fixture, reference })
}

fn measure(p: &Prepared, index: usize, config: &BlurConfig, repeats: usize) -> Result<AblationRecord> {
    let f = &p.fixture;
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let model = IcbModel::build(&f.depth, &f.trajectory, &f.intrinsics, config)?;
        let out = model.forward(&f.sharp)?;
        best = best.min(start.elapsed().as_secs_f64() * 1e3);
        last = Some((model, out));
    }
    let (model, out) = last.expect("at least one repeat");
    Ok(AblationRecord {
        schema_version: REPORT_SCHEMA_VERSION,
        fixture: index,
        preset: f.spec.preset,
        n: config.n,
        sigma: config.sigma,
        layers: model.layer_count(),
        psnr_db: psnr(&out, &p.reference)?,
        ssim: ssim(&out, &p.reference)?,
        kernel_bytes: model.kernel_storage() * std::mem::size_of::<f64>(),
        time_ms: best,
    })
}

/// Runs every `(n, σ)` pair of the plan on every fixture. References are
/// computed in parallel; timed runs execute one after another.
pub fn ablate(plan: &AblationPlan) -> Result<AblationReport> {
    let prepared: Vec<Prepared> = plan
        .fixtures
        .par_iter()
        .map(|spec| prepare(spec, &plan.base))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (i, p) in prepared.iter().enumerate() {
        for &n in &plan.ns {
            for &sigma in &plan.sigmas {
                let config = BlurConfig {
                    n,
                    sigma,
                    ..plan.base.clone()
                };
                records.push(measure(p, i, &config, plan.repeats)?);
            }
        }
    }
    Ok(AblationReport { records })
}

impl AblationReport {
    pub fn summary(&self) -> Vec<AblationSummary> {
        let mut keys: Vec<(u32, f64)> = Vec::new();
        for r in &self.records {
            if !keys.contains(&(r.n, r.sigma)) {
                keys.push((r.n, r.sigma));
            }
        }
        keys.into_iter()
            .map(|(n, sigma)| {
                let rows: Vec<&AblationRecord> = self.records.iter().filter(|r| r.n == n && r.sigma == sigma).collect();
                let mean =
                    |f: &dyn Fn(&AblationRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
                AblationSummary {
                    n,
                    sigma,
                    layers: mean(&|r| r.layers as f64),
                    psnr_db: mean(&|r| r.psnr_db),
                    ssim: mean(&|r| r.ssim),
                    kernel_bytes: mean(&|r| r.kernel_bytes as f64),
                    time_ms: mean(&|r| r.time_ms),
                }
            })
            .collect()
    }

    /// Summary rows averaged over `σ`, one per `n`.
    pub fn by_n(&self) -> Vec<AblationSummary> {
        let mut ns: Vec<u32> = self.records.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let rows: Vec<&AblationRecord> = self.records.iter().filter(|r| r.n == n).collect();
                let mean =
                    |f: &dyn Fn(&AblationRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
                AblationSummary {
                    n,
                    sigma: f64::NAN,
                    layers: mean(&|r| r.layers as f64),
                    psnr_db: mean(&|r| r.psnr_db),
                    ssim: mean(&|r| r.ssim),
                    kernel_bytes: mean(&|r| r.kernel_bytes as f64),
                    time_ms: mean(&|r| r.time_ms),
                }
            })
            .collect()
    }

    /// Per-fixture rows followed by means over fixtures (`fixture = mean`).
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "schema_version",
            "fixture",
            "preset",
            "n",
            "sigma",
            "layers",
            "psnr_db",
            "ssim",
            "kernel_bytes",
            "time_ms",
        ])?;
        for r in &self.records {
            w.write_record([
                r.schema_version.to_string(),
                r.fixture.to_string(),
                format!("{:?}", r.preset).to_lowercase(),
                r.n.to_string(),
                r.sigma.to_string(),
                r.layers.to_string(),
                format!("{:.6}", r.psnr_db),
                format!("{:.6}", r.ssim),
                r.kernel_bytes.to_string(),
                format!("{:.3}", r.time_ms),
            ])?;
        }
        for s in self.summary() {
            w.write_record([
                REPORT_SCHEMA_VERSION.to_string(),
                "mean".into(),
                "all".into(),
                s.n.to_string(),
                s.sigma.to_string(),
                format!("{:.3}", s.layers),
                format!("{:.6}", s.psnr_db),
                format!("{:.6}", s.ssim),
                format!("{:.1}", s.kernel_bytes),
                format!("{:.3}", s.time_ms),
            ])?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_plan() {
        let mut plan = AblationPlan::standard(1);
        plan.fixtures.truncate(1);
        plan.fixtures[0] = plan.fixtures[0].clone().dims(40, 32);
        plan.sigmas = vec![1.0, 2.0];
        plan.repeats = 1;
        let report = ablate(&plan).unwrap();
        assert_eq!(report.records.len(), 6);
        assert_eq!(report.summary().len(), 6);
        assert_eq!(report.by_n().len(), 3);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 + 6);
        assert!(text.starts_with("schema_version,"));
    }
}
