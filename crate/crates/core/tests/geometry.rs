use parallax_blur::geometry::sequence::{closed_form, recursion_step};
use parallax_blur::geometry::{
    blur_extent, blur_variation, depth_sequence_1d, depth_sequence_2d, CameraIntrinsics, Pose, Trajectory,
};
use proptest::prelude::*;

fn phone() -> CameraIntrinsics {
    CameraIntrinsics::centered(2.8e-3, 4e-6, 640, 480).unwrap()
}

#[test]
fn extent_in_pixels() {
    let intr = phone();
    let t = blur_extent(3e-3, &intr, 0.1).unwrap() / intr.pixel_pitch_x;
    assert!((t - 21.0).abs() < 1e-9);
    let t = blur_extent(3e-3, &intr, 0.2).unwrap() / intr.pixel_pitch_x;
    assert!((t - 10.5).abs() < 1e-9);
    assert!(blur_extent(3e-3, &intr, 0.0).is_err());
    assert_eq!(blur_variation(3e-3, &intr, 0.5, 0.0).unwrap(), 0.0);
}

#[test]
fn one_axis_sequence() {
    let seq = depth_sequence_1d(3e-3, 2.8e-3, 4e-6, 1, 0.9).unwrap();
    let want = [4.2, 1.4, 0.84];
    assert_eq!(seq.len(), 3);
    for (a, b) in seq.values().iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    let still = depth_sequence_1d(0.0, 2.8e-3, 4e-6, 1, 0.5).unwrap();
    assert!(still.is_stationary());
}

#[test]
fn two_axis_sequence_from_trajectory() {
    let intr = phone();
    let traj = Trajectory::linear([0.0; 3], [3e-3, 1.5e-3, 0.0], 9, 0).unwrap();
    let seq = depth_sequence_2d(&traj, &intr, 1, 0.8).unwrap();
    let union = [4.2, 2.1, 1.4, 0.84, 0.7];
    assert_eq!(seq.len(), union.len());
    for (a, b) in seq.values().iter().zip(&union) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn reference_frame_translation() {
    // camera yawed by 90 degrees: world x becomes camera -z, world z becomes camera x
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = [h, 0.0, h, 0.0];
    let poses = vec![
        Pose::new(0.0, [0.0, 0.0, 0.0], q).unwrap(),
        Pose::new(1.0, [0.0, 0.0, 2e-3], q).unwrap(),
    ];
    let traj = Trajectory::new(poses, 0).unwrap();
    let s = traj.in_plane_translations();
    assert!((s[1].0 + 2e-3).abs() < 1e-15 || (s[1].0 - 2e-3).abs() < 1e-15);
    assert!(s[1].1.abs() < 1e-15);
}

proptest! {
    #[test]
    fn recursion_matches_closed_form(kappa in 0.01f64..10.0, n in 1u32..=3) {
        let mut d = closed_form(kappa, n, 0);
        for l in 1..=100 {
            d = recursion_step(kappa, n, d);
            let c = closed_form(kappa, n, l);
            prop_assert!(((d - c) / c).abs() <= 1e-12);
        }
    }

    #[test]
    fn sequence_decreases_and_labels_are_consistent(
        s in 1e-4f64..1e-2, n in 1u32..=3, d_min in 0.02f64..1.0, probe in 0.01f64..20.0
    ) {
        let seq = depth_sequence_1d(s, 2.8e-3, 4e-6, n, d_min).unwrap();
        let v = seq.values();
        prop_assert!(v.windows(2).all(|w| w[0] > w[1]));
        prop_assert!(*v.last().unwrap() <= d_min);
        let l = seq.layer_of(probe);
        prop_assert!(l < v.len());
        if l + 1 < v.len() || probe >= v[l] {
            prop_assert!(probe >= v[l]);
        }
        if l > 0 {
            prop_assert!(probe < v[l - 1]);
        }
    }

    #[test]
    fn variation_is_difference_of_extents(s in 1e-4f64..1e-2, near in 0.05f64..5.0, gap in 0.0f64..10.0) {
        let intr = phone();
        let v = blur_variation(s, &intr, near, gap).unwrap();
        let diff = blur_extent(s, &intr, near).unwrap() - blur_extent(s, &intr, near + gap).unwrap();
        prop_assert!((v - diff).abs() <= 1e-12 * blur_extent(s, &intr, near).unwrap());
    }
}
