//! Blur variation between two depths as a function of their separation,
//! for plotting with external tools.

use std::io::Write;

use crate::error::{Error, Result};
use crate::io::REPORT_SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq)]
pub struct CurveParams {
    pub focal_length: f64,
    pub pixel_pitch: f64,
    /// Camera translation for the variation curves, meters.
    pub shift: f64,
    /// Blur variation held fixed by the inverted curves, pixels.
    pub target_px: f64,
    pub near_depths: Vec<f64>,
    pub separations: Vec<f64>,
}

impl Default for CurveParams {
    fn default() -> Self {
        CurveParams {
            focal_length: 2.8e-3,
            pixel_pitch: 4e-6,
            shift: 3e-3,
            target_px: 10.0,
            near_depths: vec![0.1, 0.25, 0.5, 1.0, 2.0],
            separations: log_space(1e-3, 1e2, 121),
        }
    }
}

/// `count` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    /// Variation in pixels at a fixed shift.
    Variation,
    /// Shift needed for a fixed variation.
    Shift,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub kind: CurveKind,
    pub near_depth: f64,
    pub separation: f64,
    pub shift: f64,
    pub variation_px: f64,
    /// Limit of the variation for infinite separation, `s·F / (D_near·δ)`.
    pub bound_px: f64,
}

/// Blur variation in pixels between depths `d_near` and `d_near + ΔD`.
pub fn variation_px(shift: f64, focal: f64, pitch: f64, d_near: f64, separation: f64) -> f64 {
    if separation == 0.0 {
        return 0.0;
    }
    shift * focal / (pitch * d_near * (d_near / separation + 1.0))
}

/// Shift that produces `target_px` of blur variation.
pub fn shift_for_variation(target_px: f64, focal: f64, pitch: f64, d_near: f64, separation: f64) -> f64 {
    target_px * pitch * d_near * (d_near / separation + 1.0) / focal
}

pub fn curves(params: &CurveParams) -> Result<Vec<CurvePoint>> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(params.focal_length)
        || !positive(params.pixel_pitch)
        || !positive(params.shift)
        || !positive(params.target_px)
    {
        return Err(Error::Domain("curve parameters must be positive".into()));
    }
    if params
        .near_depths
        .iter()
        .chain(&params.separations)
        .any(|&v| !positive(v))
    {
        return Err(Error::Domain("depths and separations must be positive".into()));
    }
    let (f, p) = (params.focal_length, params.pixel_pitch);
    let mut out = Vec::new();
    for &d in &params.near_depths {
        for &dd in &params.separations {
            let v = variation_px(params.shift, f, p, d, dd);
            out.push(CurvePoint {
                kind: CurveKind::Variation,
                near_depth: d,
                separation: dd,
                shift: params.shift,
                variation_px: v,
                bound_px: params.shift * f / (d * p),
            });
        }
    }
    for &d in &params.near_depths {
        for &dd in &params.separations {
            let s = shift_for_variation(params.target_px, f, p, d, dd);
            out.push(CurvePoint {
                kind: CurveKind::Shift,
                near_depth: d,
                separation: dd,
                shift: s,
                variation_px: params.target_px,
                bound_px: s * f / (d * p),
            });
        }
    }
    Ok(out)
}

pub fn write_curves_csv(points: &[CurvePoint], out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema_version",
        "curve",
        "d_near_m",
        "delta_d_m",
        "shift_m",
        "variation_px",
        "bound_px",
    ])?;
    for pt in points {
        let kind = match pt.kind {
            CurveKind::Variation => "variation",
            CurveKind::Shift => "shift",
        };
        w.write_record([
            REPORT_SCHEMA_VERSION.to_string(),
            kind.to_string(),
            pt.near_depth.to_string(),
            pt.separation.to_string(),
            pt.shift.to_string(),
            pt.variation_px.to_string(),
            pt.bound_px.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_meter_limit() {
        let v = variation_px(3e-3, 2.8e-3, 4e-6, 1.0, 1e12);
        assert!((v - 2.1).abs() < 1e-9);
        assert_eq!(variation_px(3e-3, 2.8e-3, 4e-6, 1.0, 0.0), 0.0);
    }

    #[test]
    fn shape() {
        let pts = curves(&CurveParams::default()).unwrap();
        assert_eq!(pts.len(), 2 * 5 * 121);
        assert!(pts.iter().all(|p| p.variation_px < p.bound_px));
        assert!(curves(&CurveParams {
            shift: 0.0,
            ..CurveParams::default()
        })
        .is_err());
    }
}
