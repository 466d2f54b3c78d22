use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array1;

use turtle_core::margin::{
    bound_check, hard_margin_svm, min_norm_labelings, separable_labelings, unit_ball_cloud, BinaryTask,
};

/// Sign pattern with the first entry forced to +1.
fn canonical(labels: &[f64]) -> Vec<i8> {
    let flip = if labels[0] < 0.0 { -1.0 } else { 1.0 };
    labels.iter().map(|&l| (l * flip) as i8).collect()
}

#[test]
fn theta_scan_finds_the_brute_force_optimum() {
    let points = unit_ball_cloud(8, 2, 42);
    let brute = separable_labelings(points.view(), false).unwrap();
    let best = min_norm_labelings(&brute);

    // every separating direction in the plane is some angle
    let mut seen: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
    for i in 0..7200 {
        let a = 2.0 * PI * i as f64 / 7200.0;
        let theta = Array1::from(vec![a.cos(), a.sin()]);
        let Ok(task) = BinaryTask::with_theta(points.clone(), theta) else { continue };
        let key = canonical(task.signs().as_slice().unwrap());
        if !seen.contains_key(&key) {
            seen.insert(key, hard_margin_svm(&task).unwrap().objective);
        }
    }
    assert_eq!(seen.len(), brute.len(), "scan should reach every separable labeling");
    let (scan_key, scan_norm) = seen.iter().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!((scan_norm - best[0].norm_sq).abs() <= 1e-6 * best[0].norm_sq);
    assert!(best.iter().any(|b| &canonical(&b.labels) == scan_key));
}

#[test]
fn bound_labeling_terms_ignore_theta_scale() {
    let points = unit_ball_cloud(12, 2, 3);
    let theta = Array1::from(vec![0.7, -0.2]);
    let a = bound_check(&theta, points.view(), 0.99 / 12.0, 10_000).unwrap();
    let b = bound_check(&(&theta * 5.0), points.view(), 0.99 / 12.0, 10_000).unwrap();
    assert!((a.svm_norm_sq - b.svm_norm_sq).abs() <= 1e-9 * a.svm_norm_sq);
    assert!(a.holds && b.holds);
}

#[test]
fn svm_scale_covariance() {
    for seed in 0..20 {
        let task = scaled_task(seed);
        let base = hard_margin_svm(&task).unwrap().objective;
        for lambda in [0.25, 4.0] {
            let scaled = hard_margin_svm(&task.scaled(lambda)).unwrap().objective;
            assert!((scaled * lambda * lambda / base - 1.0).abs() < 1e-6, "seed {seed}");
        }
    }
}

fn scaled_task(seed: u64) -> BinaryTask {
    turtle_core::margin::random_separable_task(15, 3, 0.05, seed)
}
