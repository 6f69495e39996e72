use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Camera-to-world pose sampled at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub time: f64,
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    /// Builds a pose from a `(w, x, y, z)` quaternion that must already be
    /// unit-norm within `1e-9`.
    pub fn new(time: f64, translation: [f64; 3], quaternion: [f64; 4]) -> Result<Self> {
        let [w, x, y, z] = quaternion;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(Error::Domain(format!("pose quaternion norm {norm} is not 1")));
        }
        if !time.is_finite() || translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("pose values must be finite".into()));
        }
        Ok(Pose {
            time,
            translation: Vector3::from(translation),
            rotation: UnitQuaternion::new_unchecked(q),
        })
    }

    pub fn translated(time: f64, translation: [f64; 3]) -> Self {
        Pose {
            time,
            translation: Vector3::from(translation),
            rotation: UnitQuaternion::identity(),
        }
    }
}

/// Time-ordered camera poses with one reference pose. The sharp image is
/// the view from the reference pose; every displacement is measured
/// against it.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    reference_index: usize,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>, reference_index: usize) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::Domain("trajectory needs at least one pose".into()));
        }
        if reference_index >= poses.len() {
            return Err(Error::Domain(format!(
                "reference index {reference_index} out of range for {} poses",
                poses.len()
            )));
        }
        if let Some(w) = poses.windows(2).find(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Domain(format!(
                "pose times must be strictly increasing ({} then {})",
                w[0].time, w[1].time
            )));
        }
        Ok(Trajectory { poses, reference_index })
    }

    /// Reference pose at the middle sample, `⌊M/2⌋`.
    pub fn with_mid_reference(poses: Vec<Pose>) -> Result<Self> {
        let mid = poses.len() / 2;
        Self::new(poses, mid)
    }

    /// Pure translation from `start` to `end` over `samples` uniform steps in
    /// `[0, 1]` seconds.
    pub fn linear(start: [f64; 3], end: [f64; 3], samples: usize, reference_index: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Domain("trajectory needs at least one pose".into()));
        }
        let poses = (0..samples)
            .map(|i| {
                let t = if samples == 1 {
                    0.0
                } else {
                    i as f64 / (samples - 1) as f64
                };
                let p = [0, 1, 2].map(|k| start[k] + t * (end[k] - start[k]));
                Pose::translated(t, p)
            })
            .collect();
        Self::new(poses, reference_index)
    }

    /// A single pose: no motion at all.
    pub fn stationary() -> Self {
        Trajectory {
            poses: vec![Pose::translated(0.0, [0.0; 3])],
            reference_index: 0,
        }
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn reference(&self) -> &Pose {
        &self.poses[self.reference_index]
    }

    pub fn with_reference(mut self, reference_index: usize) -> Result<Self> {
        if reference_index >= self.poses.len() {
            return Err(Error::Domain(format!(
                "reference index {reference_index} out of range for {} poses",
                self.poses.len()
            )));
        }
        self.reference_index = reference_index;
        Ok(self)
    }

    /// Pose at an arbitrary time: linear interpolation of the translation,
    /// spherical interpolation of the rotation. Clamped at both ends.
    pub fn pose_at(&self, time: f64) -> Pose {
        let first = &self.poses[0];
        let last = &self.poses[self.poses.len() - 1];
        if time <= first.time {
            return Pose { time, ..*first };
        }
        if time >= last.time {
            return Pose { time, ..*last };
        }
        let hi = self.poses.partition_point(|p| p.time <= time);
        let (a, b) = (&self.poses[hi - 1], &self.poses[hi]);
        let u = (time - a.time) / (b.time - a.time);
        let translation = a.translation + (b.translation - a.translation) * u;
        let rotation = a.rotation.try_slerp(&b.rotation, u, 1e-12).unwrap_or_else(|| {
            UnitQuaternion::new_normalize(a.rotation.into_inner().lerp(&b.rotation.into_inner(), u))
        });
        Pose {
            time,
            translation,
            rotation,
        }
    }

    /// Resamples to `samples` uniform times spanning the original interval
    /// (endpoints included), which makes every sample weigh `1/samples`.
    /// The new reference is the sample closest in time to the old one.
    pub fn resample(&self, samples: usize) -> Result<Trajectory> {
        if samples == 0 {
            return Err(Error::Domain("resampling needs at least one sample".into()));
        }
        let t0 = self.poses[0].time;
        let t1 = self.poses[self.poses.len() - 1].time;
        if samples == 1 {
            return Trajectory::new(vec![*self.reference()], 0);
        }
        let span = if t1 > t0 { t1 - t0 } else { 1.0 };
        let times: Vec<f64> = (0..samples)
            .map(|i| t0 + span * i as f64 / (samples - 1) as f64)
            .collect();
        let poses: Vec<Pose> = times.iter().map(|&t| self.pose_at(t)).collect();
        let t_ref = self.reference().time;
        let reference_index = times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - t_ref).abs().total_cmp(&(*b - t_ref).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Trajectory::new(poses, reference_index)
    }

    /// In-plane translation `(s_x, s_y)` of every sample relative to the
    /// reference pose, expressed in the reference camera frame.
    pub fn in_plane_translations(&self) -> Vec<(f64, f64)> {
        let reference = self.reference();
        let to_camera = reference.rotation.inverse();
        self.poses
            .iter()
            .map(|p| {
                let s = to_camera * (p.translation - reference.translation);
                (s.x, s.y)
            })
            .collect()
    }

    /// Small-angle rotation of every sample relative to the reference pose,
    /// as `(ω_x, ω_y)` components of the rotation vector in the reference
    /// camera frame (tilt and pan). Roll is dropped.
    pub fn pan_tilt_angles(&self) -> Vec<(f64, f64)> {
        let to_camera = self.reference().rotation.inverse();
        self.poses
            .iter()
            .map(|p| {
                let w = (to_camera * p.rotation).scaled_axis();
                (w.x, w.y)
            })
            .collect()
    }

    /// Largest absolute in-plane translation per axis, `(s_max_x, s_max_y)`.
    pub fn max_in_plane_translation(&self) -> (f64, f64) {
        self.in_plane_translations()
            .into_iter()
            .fold((0.0f64, 0.0f64), |(mx, my), (x, y)| (mx.max(x.abs()), my.max(y.abs())))
    }

    pub fn has_rotation(&self) -> bool {
        let r0 = self.reference().rotation;
        self.poses.iter().any(|p| r0.angle_to(&p.rotation) > 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_trajectories() {
        assert!(Trajectory::new(vec![], 0).is_err());
        let p = Pose::translated(0.0, [0.0; 3]);
        assert!(Trajectory::new(vec![p, p], 0).is_err());
        assert!(Trajectory::new(vec![p], 1).is_err());
        assert!(Pose::new(0.0, [0.0; 3], [1.0, 0.1, 0.0, 0.0]).is_err());
    }

    #[test]
    fn translations_relative_to_reference() {
        let traj = Trajectory::linear([0.0; 3], [3e-3, 0.0, 0.0], 5, 2).unwrap();
        let s = traj.in_plane_translations();
        assert_eq!(s[2], (0.0, 0.0));
        assert!((s[0].0 + 1.5e-3).abs() < 1e-15);
        assert!((s[4].0 - 1.5e-3).abs() < 1e-15);
        let (mx, my) = traj.max_in_plane_translation();
        assert!((mx - 1.5e-3).abs() < 1e-15);
        assert_eq!(my, 0.0);
    }

    #[test]
    fn translations_in_reference_camera_frame() {
        // reference camera yawed by 90 degrees about z: world +x is camera -y
        let q = UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let c = q.into_inner().coords;
        let quat = [c.w, c.x, c.y, c.z];
        let poses = vec![
            Pose::new(0.0, [0.0; 3], quat).unwrap(),
            Pose::new(1.0, [1e-3, 0.0, 0.0], quat).unwrap(),
        ];
        let traj = Trajectory::new(poses, 0).unwrap();
        let s = traj.in_plane_translations();
        assert!(s[1].0.abs() < 1e-15);
        assert!((s[1].1 + 1e-3).abs() < 1e-15);
    }

    #[test]
    fn resample_linear_is_exact() {
        let traj = Trajectory::linear([0.0; 3], [2e-3, 1e-3, 0.0], 3, 1).unwrap();
        let r = traj.resample(9).unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r.reference_index(), 4);
        for (i, p) in r.poses().iter().enumerate() {
            let u = i as f64 / 8.0;
            assert!((p.translation.x - 2e-3 * u).abs() < 1e-15);
            assert!((p.translation.y - 1e-3 * u).abs() < 1e-15);
        }
        let one = traj.resample(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.reference_index(), 0);
    }

    #[test]
    fn slerp_midpoint() {
        let q = UnitQuaternion::from_euler_angles(0.0, 0.2, 0.0);
        let c = q.into_inner().coords;
        let poses = vec![
            Pose::new(0.0, [0.0; 3], [1.0, 0.0, 0.0, 0.0]).unwrap(),
            Pose::new(1.0, [0.0; 3], [c.w, c.x, c.y, c.z]).unwrap(),
        ];
        let traj = Trajectory::new(poses, 0).unwrap();
        let mid = traj.pose_at(0.5);
        assert!((mid.rotation.angle() - 0.1).abs() < 1e-12);
        let angles = traj.pan_tilt_angles();
        assert!((angles[1].1 - 0.2).abs() < 1e-12);
        assert!(traj.has_rotation());
    }
}
