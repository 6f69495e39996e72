mod common;

use parallax_blur::geometry::{CameraIntrinsics, Pose, Trajectory};
use parallax_blur::kernels::{
    add_kernels, compose_kernels, epdf_kernel, layer_kernels, pixel_displacements, rotation_kernel, DisplacementSet,
    ParallaxProfile,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn phone() -> CameraIntrinsics {
    CameraIntrinsics::centered(2.8e-3, 4e-6, 64, 64).unwrap()
}

#[test]
fn five_sample_linear_fixture() {
    let traj = Trajectory::linear([0.0; 3], [3e-3, 0.0, 0.0], 5, 0).unwrap();
    let k = epdf_kernel(&pixel_displacements(&traj, &phone(), 2.1).unwrap()).unwrap();
    assert_eq!(k.support(), (2, 1));
    assert_eq!(k.weight(0, 0), 0.4);
    assert_eq!(k.weight(-1, 0), 0.6);
    let oracle = common::histogram(&traj, &phone(), 2.1);
    assert_eq!(oracle.len(), 2);
    for ((dx, dy), w) in oracle {
        assert!((k.weight(dx, dy) - w).abs() < 1e-15);
    }
}

#[test]
fn matches_histogram_oracle_on_shake() {
    let scene = parallax_blur::scene::gen_scene(parallax_blur::scene::Preset::Macro, 48, 4).unwrap();
    let profile = ParallaxProfile::new(&scene.trajectory, &scene.intrinsics);
    for d in [0.06, 0.083, 0.2, 0.37, 1.5] {
        let k = profile.kernel(d).unwrap();
        let oracle = common::histogram(&scene.trajectory, &scene.intrinsics, d);
        let total: f64 = k.taps().iter().map(|t| t.2).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_eq!(k.taps().len(), oracle.len());
        for ((dx, dy), w) in oracle {
            assert!((k.weight(dx, dy) - w).abs() < 1e-15);
        }
    }
}

#[test]
fn far_layer_is_identity() {
    let traj = Trajectory::linear([0.0; 3], [3e-3, 0.0, 0.0], 5, 0).unwrap();
    // the first band edge, where the half-pixel displacement would round up
    let ks = layer_kernels(&traj, &phone(), &[4.2, 1.0]).unwrap();
    assert!(ks[0].is_identity());
    assert!(!ks[1].is_identity());
}

#[test]
fn rotation_and_composition() {
    let small = 1e-3f64;
    let q = |a: f64| [(a / 2.0).cos(), 0.0, (a / 2.0).sin(), 0.0];
    let poses = (0..5)
        .map(|i| Pose::new(i as f64, [0.0; 3], q(small * i as f64)).unwrap())
        .collect();
    let traj = Trajectory::new(poses, 0).unwrap();
    let rot = rotation_kernel(&traj, &phone()).unwrap();
    assert!((rot.sum() - 1.0).abs() < 1e-12);
    // pan by ω_y shifts by F·ω_y/δ = 0.7 px per step
    assert_eq!(rot.taps().len(), 4);
    let a = epdf_kernel(&DisplacementSet(vec![(0.0, 0.0), (1.0, 0.0)])).unwrap();
    let b = epdf_kernel(&DisplacementSet(vec![(0.0, 0.0), (0.0, 2.0)])).unwrap();
    let c = compose_kernels(&a, &b);
    assert!((c.sum() - 1.0).abs() < 1e-12);
    assert_eq!(c.weight(1, 2), 0.25);
    let s = add_kernels(&a, &b);
    assert!((s.sum() - 1.0).abs() < 1e-12);
    assert_eq!(s.weight(0, 0), 0.5);
}

proptest! {
    #[test]
    fn epdf_properties(points in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..80), seed in any::<u64>()) {
        let k = epdf_kernel(&DisplacementSet(points.clone())).unwrap();
        prop_assert!((k.sum() - 1.0).abs() <= 1e-12);
        let mut shuffled = points.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&epdf_kernel(&DisplacementSet(shuffled)).unwrap(), &k);
        let neg = epdf_kernel(&DisplacementSet(points).negated()).unwrap();
        prop_assert_eq!(neg, k.mirrored());
    }
}
