mod common;

use apca_core::apca::{Flavor, Inference};
use apca_core::data::{read_csv, synth_adversarial, synth_supervised, train_test_split, write_csv, Standardizer};
use apca_core::eval::{logreg_fit, logreg_gradient, logreg_loss, mu_sweep, r_squared, LogRegSettings, SweepOptions};
use apca_core::linalg::Matrix;
use apca_core::randomized::gaussian_matrix;
use apca_core::{fit, ApcaConfig};
use common::numeric_grad;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn split_is_partition(n in 2usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let n_test = (n as f64 * frac).round() as usize;
        match train_test_split(n, frac, seed) {
            Ok((train, test)) => {
                prop_assert_eq!(test.len(), n_test);
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
            Err(_) => prop_assert!(n_test == 0 || n_test == n),
        }
    }

    #[test]
    fn standardizer_normalizes_training_data(n in 2usize..40, p in 1usize..6, seed in any::<u64>()) {
        let x = gaussian_matrix(n, p, seed).map(|v| 3.0 * v + 7.0);
        let z = Standardizer::fit(&x).unwrap().apply(&x).unwrap();
        for j in 0..p {
            let col = z.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn csv_round_trip(rows in 1usize..8, cols in 1usize..5, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = gaussian_matrix(rows, cols, seed).map(|v| v * 10f64.powi((v * 40.0) as i32 % 300));
        write_csv(&m, &path, None).unwrap();
        let back = read_csv(&path, false).unwrap().matrix;
        prop_assert_eq!(back.as_slice(), m.as_slice());
    }
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    for seed in 0..10u64 {
        let s = gaussian_matrix(30, 3, seed);
        let labels: Vec<usize> = (0..30).map(|i| (i * 7 + seed as usize) % 3).collect();
        let w = gaussian_matrix(3, 4, seed + 1);
        let g = logreg_gradient(&w, &s, &labels, 0.1);
        let num = numeric_grad(&w, 1e-5, |m| logreg_loss(m, &s, &labels, 0.1));
        let rel = g.sub(&num).frobenius_norm() / g.frobenius_norm();
        assert!(rel <= 1e-6, "seed {seed}: {rel}");
    }
}

#[test]
fn logreg_reports_convergence_state() {
    let s = Matrix::column_vector(&[-1.0, -0.5, 0.2, 0.4, 1.0, -0.1]);
    let labels = [0, 0, 1, 0, 1, 1];
    let m = logreg_fit(&s, &labels, 2, LogRegSettings::default()).unwrap();
    let g = logreg_gradient(&m.weights, &s, &labels, m.l2).frobenius_norm();
    assert!((g - m.final_grad_norm).abs() <= 1e-12);
    assert!(m.final_grad_norm <= 1e-8 || m.iterations_run == 500);
}

#[test]
fn supervised_noise_free_pca_already_separates() {
    let ds = synth_supervised(400, 20, 0.0, 5).unwrap();
    let cfg = ApcaConfig::new(Flavor::Supervised, Inference::Encoded, 2, 0.0).with_seed(5);
    let report = mu_sweep(&ds, &cfg, &[0.0], SweepOptions::new(5)).unwrap();
    assert!(report.test_acc[0] >= 0.95, "{:?}", report.test_acc);
}

#[test]
fn adversarial_top_pca_score_tracks_concomitant() {
    let ds = synth_adversarial(400, 20, 6).unwrap();
    let model = fit(&ApcaConfig::new(Flavor::Adversarial, Inference::Local, 2, 0.0), &ds.x, &ds.y).unwrap();
    let s = model.transform(&ds.x, Some(&ds.y)).unwrap();
    let r2 = r_squared(&ds.y.column(0), &s.column(0));
    assert!(r2.sqrt() >= 0.9, "correlation {}", r2.sqrt());
}

#[test]
fn sweep_at_mu_zero_ignores_flavor() {
    let ds = synth_supervised(100, 8, 5.0, 7).unwrap();
    for inference in [Inference::Local, Inference::Encoded] {
        let sup = ApcaConfig::new(Flavor::Supervised, inference, 2, 0.0).with_seed(1);
        let adv = ApcaConfig { flavor: Flavor::Adversarial, ..sup };
        let a = mu_sweep(&ds, &sup, &[0.0], SweepOptions::new(3)).unwrap();
        let b = mu_sweep(&ds, &adv, &[0.0], SweepOptions::new(3)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn sweep_is_deterministic_and_well_formed() {
    let ds = synth_supervised(100, 8, 5.0, 8).unwrap();
    let cfg = ApcaConfig::new(Flavor::Supervised, Inference::Encoded, 2, 0.0).with_seed(2);
    let a = mu_sweep(&ds, &cfg, &[0.0, 10.0, 100.0], SweepOptions::new(4)).unwrap();
    assert_eq!(a, mu_sweep(&ds, &cfg, &[0.0, 10.0, 100.0], SweepOptions::new(4)).unwrap());
    assert_eq!(a.test_acc.len(), 3);
    assert!(a.r2.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    assert!(a.test_acc.iter().chain(&a.train_acc).all(|v| (0.0..=1.0).contains(v)));
    assert!(mu_sweep(&ds, &cfg, &[1.0, 0.0], SweepOptions::new(4)).is_err());
    assert!(mu_sweep(&ds, &cfg, &[], SweepOptions::new(4)).is_err());
}
