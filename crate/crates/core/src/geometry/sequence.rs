use super::{CameraIntrinsics, Trajectory};
use crate::error::{Error, Result};

/// Relative tolerance under which two band edges of the per-axis
/// sequences are treated as the same edge.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Decreasing band edges `D_0 > D_1 > … > D_{L-1}` (meters).
///
/// `D_0 = 2κ` is the depth beyond which blur stays under half a pixel;
/// each following edge adds `n` pixels of blur extent:
/// `D_l = 2κ / (2ln + 1)` with `κ = s_max·F/δ`. A camera that does not
/// translate produces the single edge `+∞` (one static layer).
#[derive(Clone, Debug, PartialEq)]
pub struct DepthSequence {
    values: Vec<f64>,
    n: u32,
    kappa_x: f64,
    kappa_y: f64,
}

/// `D_l` from its closed form.
pub fn closed_form(kappa: f64, n: u32, l: usize) -> f64 {
    2.0 * kappa / (2.0 * l as f64 * n as f64 + 1.0)
}

/// One step of the recursion `D_l = κ·D_{l-1} / (n·D_{l-1} + κ)`.
pub fn recursion_step(kappa: f64, n: u32, previous: f64) -> f64 {
    kappa * previous / (n as f64 * previous + kappa)
}

impl DepthSequence {
    /// The single-layer sequence used when there is no translation.
    pub fn stationary(n: u32) -> Self {
        DepthSequence {
            values: vec![f64::INFINITY],
            n,
            kappa_x: 0.0,
            kappa_y: 0.0,
        }
    }

    /// Wraps explicit band edges. They must be strictly decreasing and
    /// positive.
    pub fn from_values(values: Vec<f64>, n: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("depth sequence cannot be empty".into()));
        }
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("depth sequence values must be > 0".into()));
        }
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Domain("depth sequence must be strictly decreasing".into()));
        }
        Ok(DepthSequence {
            values,
            n,
            kappa_x: f64::NAN,
            kappa_y: f64::NAN,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kappa_x(&self) -> f64 {
        self.kappa_x
    }

    pub fn kappa_y(&self) -> f64 {
        self.kappa_y
    }

    pub fn is_stationary(&self) -> bool {
        self.values.len() == 1 && self.values[0].is_infinite()
    }

    /// Layer index of a depth: the first `l` with `depth ≥ D_l`, so a depth
    /// equal to `D_l` lands in layer `l`. Depths below `D_{L-1}` are clamped
    /// to the nearest layer.
    pub fn layer_of(&self, depth: f64) -> usize {
        let above = self.values.partition_point(|&edge| edge > depth);
        above.min(self.values.len() - 1)
    }

    /// Representative depth of a layer with no pixels: `D_0` for the far
    /// layer, otherwise the midpoint of `[D_l, D_{l-1}]`.
    pub fn band_midpoint(&self, layer: usize) -> f64 {
        if layer == 0 {
            self.values[0]
        } else {
            0.5 * (self.values[layer] + self.values[layer - 1])
        }
    }
}

fn check_common(n: u32, d_min: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("blur step n must be >= 1".into()));
    }
    if !(d_min > 0.0) || !d_min.is_finite() {
        return Err(Error::Domain(format!("minimum depth must be > 0, got {d_min}")));
    }
    Ok(())
}

fn axis_edges(kappa: f64, n: u32, d_min: f64) -> Vec<f64> {
    let mut values = Vec::new();
    for l in 0.. {
        let d = closed_form(kappa, n, l);
        values.push(d);
        if d <= d_min {
            break;
        }
    }
    values
}

/// Band edges for motion along one axis with maximum displacement `s_max`,
/// extended until the last edge reaches `d_min`.
pub fn depth_sequence_1d(s_max: f64, focal: f64, pitch: f64, n: u32, d_min: f64) -> Result<DepthSequence> {
    check_common(n, d_min)?;
    if !(s_max >= 0.0) || !s_max.is_finite() {
        return Err(Error::Domain(format!("maximum displacement must be >= 0, got {s_max}")));
    }
    if !(focal > 0.0) || !(pitch > 0.0) {
        return Err(Error::Domain("focal length and pixel pitch must be > 0".into()));
    }
    if s_max == 0.0 {
        return Ok(DepthSequence::stationary(n));
    }
    let kappa = s_max * focal / pitch;
    Ok(DepthSequence {
        values: axis_edges(kappa, n, d_min),
        n,
        kappa_x: kappa,
        kappa_y: 0.0,
    })
}

/// Band edges for 2D in-plane motion: the union of the x- and y-axis
/// sequences, sorted in decreasing order and cut after the first edge at
/// or below `d_min`. Edges closer than [`MERGE_TOLERANCE`] (relative) are
/// merged.
pub fn depth_sequence_2d(
    trajectory: &Trajectory,
    intrinsics: &CameraIntrinsics,
    n: u32,
    d_min: f64,
) -> Result<DepthSequence> {
    let (sx, sy) = trajectory.max_in_plane_translation();
    sequence_from_extents(sx, sy, intrinsics, n, d_min)
}

pub(crate) fn sequence_from_extents(
    s_max_x: f64,
    s_max_y: f64,
    intrinsics: &CameraIntrinsics,
    n: u32,
    d_min: f64,
) -> Result<DepthSequence> {
    check_common(n, d_min)?;
    let f = intrinsics.focal_length;
    let kappa_x = s_max_x * f / intrinsics.pixel_pitch_x;
    let kappa_y = s_max_y * f / intrinsics.pixel_pitch_y;
    let mut all = Vec::new();
    if kappa_x > 0.0 {
        all.extend(axis_edges(kappa_x, n, d_min));
    }
    if kappa_y > 0.0 {
        all.extend(axis_edges(kappa_y, n, d_min));
    }
    if all.is_empty() {
        return Ok(DepthSequence::stationary(n));
    }
    all.sort_by(|a, b| b.total_cmp(a));
    let mut values: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        match values.last() {
            Some(&prev) if prev - v <= MERGE_TOLERANCE * prev => {}
            // the merged sequence already reaches d_min
            Some(&prev) if prev <= d_min => break,
            _ => values.push(v),
        }
    }
    Ok(DepthSequence {
        values,
        n,
        kappa_x,
        kappa_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs())
    }

    #[test]
    fn one_axis_example() {
        let seq = depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 0.9).unwrap();
        assert!((seq.kappa_x() - 2.1).abs() < 1e-12);
        assert!(close(seq.values(), &[4.2, 1.4, 0.84], 1e-12), "{:?}", seq.values());
    }

    #[test]
    fn first_step_is_a_third_for_unit_n() {
        let seq = depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 0.1).unwrap();
        assert!((seq.values()[1] - seq.values()[0] / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_when_far_limit_covers_minimum() {
        let seq = depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 10.0).unwrap();
        assert_eq!(seq.len(), 1);
        assert!((seq.values()[0] - 4.2).abs() < 1e-12);
    }

    #[test]
    fn no_translation_is_stationary() {
        let seq = depth_sequence_1d(0.0, 2.8e-3, 4e-6, 1, 0.5).unwrap();
        assert!(seq.is_stationary());
        assert_eq!(seq.layer_of(0.01), 0);
    }

    #[test]
    fn domain_errors() {
        assert!(depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 0.0).is_err());
        assert!(depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 0, 1.0).is_err());
        assert!(depth_sequence_1d(-1.0, 2.8e-3, 4e-6, 1, 1.0).is_err());
    }

    #[test]
    fn two_axis_union() {
        let intr = CameraIntrinsics::centered(2.8e-3, 4e-6, 64, 64).unwrap();
        let seq = sequence_from_extents(3e-3, 1.5e-3, &intr, 1, 0.8).unwrap();
        assert!(
            close(seq.values(), &[4.2, 2.1, 1.4, 0.84, 0.7], 1e-12),
            "{:?}",
            seq.values()
        );
        // identical axes collapse to the 1D sequence
        let same = sequence_from_extents(3e-3, 3e-3, &intr, 1, 0.8).unwrap();
        let one = depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 0.8).unwrap();
        assert_eq!(same.values(), one.values());
        // horizontal motion only
        let horiz = sequence_from_extents(3e-3, 0.0, &intr, 1, 0.8).unwrap();
        assert_eq!(horiz.values(), one.values());
    }

    #[test]
    fn band_lookup_follows_edges() {
        let seq = DepthSequence::from_values(vec![4.2, 1.4, 0.84], 1).unwrap();
        assert_eq!(seq.layer_of(5.0), 0);
        assert_eq!(seq.layer_of(4.2), 0);
        assert_eq!(seq.layer_of(4.0), 1);
        assert_eq!(seq.layer_of(1.4), 1);
        assert_eq!(seq.layer_of(1.0), 2);
        assert_eq!(seq.layer_of(0.84), 2);
        assert_eq!(seq.layer_of(0.5), 2);
        assert_eq!(seq.band_midpoint(0), 4.2);
        assert!((seq.band_midpoint(2) - 1.12).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_recursion() {
        for n in 1..=3u32 {
            let kappa = 2.1;
            let mut d = 2.0 * kappa;
            for l in 1..=100usize {
                d = recursion_step(kappa, n, d);
                let c = closed_form(kappa, n, l);
                assert!(((d - c) / c).abs() <= 1e-12, "n={n} l={l}");
            }
        }
    }
}
