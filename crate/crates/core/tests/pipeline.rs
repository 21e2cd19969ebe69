use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrm_core::bounds::{audit, erm_robustness_check, least_squares_robustness_check, AuditConfig};
use rrm_core::info::cdc_estimate;
use rrm_core::noise::{noisy_accuracies, run_noisy_trials, NoiseModel, NoiseVariant};
use rrm_core::oracle::{enumerate, ExactScenario};
use rrm_core::synth::{synth, SynthPreset, SynthSpec};
use rrm_core::trainers::{FiniteHypothesisClass, MajorityTrainer, RidgeConfig, RidgeTrainer};
use rrm_core::LabeledEmbeddings;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::sync::Arc;

fn gaussian(k: usize, d: usize, sep: f64, n: usize, seed: u64) -> (LabeledEmbeddings, LabeledEmbeddings) {
    let out = synth(&SynthSpec {
        preset: SynthPreset::GaussianClusters { k, d, sep },
        n_train: n,
        n_test: n,
        seed,
    })
    .unwrap();
    (out.train, out.test)
}

#[test]
fn separable_ridge_audit() {
    let (train, test) = gaussian(2, 16, 10.0, 1000, 3);
    let eta = 0.05;
    let cfg = AuditConfig::new(NoiseModel::new(NoiseVariant::UniformAll, eta).unwrap(), 20, 3);
    let r = audit(&RidgeTrainer(RidgeConfig::default()), &train, &test, &cfg).unwrap();
    assert!(r.robustness_gap <= eta);
    assert!(r.rationality_gap.unwrap() <= 0.02);
    assert!(r.rrm_holds());
}

#[test]
fn shuffled_training_order_gives_same_gaps() {
    let (train, test) = gaussian(3, 6, 3.0, 600, 8);
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled = train.select(&order).unwrap();
    let cfg = AuditConfig::new(NoiseModel::new(NoiseVariant::UniformAll, 0.2).unwrap(), 20, 4);
    let t = RidgeTrainer(RidgeConfig::default());
    let a = audit(&t, &train, &test, &cfg).unwrap();
    let b = audit(&t, &shuffled, &test, &cfg).unwrap();
    // the clean fit does not see the order
    assert!((a.accuracies.train - b.accuracies.train).abs() < 1e-12);
    assert!((a.accuracies.test - b.accuracies.test).abs() < 1e-12);
    // noise lands on different rows, so noisy quantities agree in law
    let s = a.memorization_std_error().unwrap().hypot(b.memorization_std_error().unwrap());
    for (x, y) in [
        (a.robustness_gap, b.robustness_gap),
        (a.memorization_gap.unwrap(), b.memorization_gap.unwrap()),
        (a.rationality_gap.unwrap(), b.rationality_gap.unwrap()),
    ] {
        assert!((x - y).abs() <= 4.0 * s, "{x} vs {y} (sigma {s})");
    }
}

#[test]
fn monte_carlo_matches_enumeration_small() {
    let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
    let train = LabeledEmbeddings::from_rows(&rows, vec![0, 1, 1, 0], 2).unwrap();
    let s = ExactScenario::new(
        train.clone(),
        vec![],
        Arc::new(MajorityTrainer),
        NoiseVariant::UniformOther,
        BigRational::new(1.into(), 4.into()),
    )
    .unwrap();
    let q = enumerate(&s).unwrap();
    let model = NoiseModel::new(NoiseVariant::UniformOther, 0.25).unwrap();
    let k = 50_000;
    let trials = run_noisy_trials(&MajorityTrainer, &train, &model, k, 21).unwrap();
    let acc = noisy_accuracies(&trials, train.labels()).unwrap();
    let t = q.train_eta.to_f64().unwrap();
    let nt = q.ntrain_eta.to_f64().unwrap();
    let st = (t * (1.0 - t) / acc.samples as f64).sqrt();
    let snt = (nt * (1.0 - nt) / acc.corrupted as f64).sqrt();
    assert!((acc.train_noisy - t).abs() <= 3.0 * st, "{} vs {t}", acc.train_noisy);
    assert!((acc.ntrain_noisy.unwrap() - nt).abs() <= 3.0 * snt);
    let cdc = cdc_estimate(&trials, train.labels(), 2).unwrap().value;
    assert!((cdc - q.cdc).abs() <= 0.02 * q.cdc, "{cdc} vs {}", q.cdc);
}

#[test]
fn erm_threshold_robustness_within_two_eta() {
    let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
    let labels = (0..100).map(|i| usize::from(i >= 37)).collect();
    let data = LabeledEmbeddings::from_rows(&rows, labels, 2).unwrap();
    let class = FiniteHypothesisClass::thresholds(&data, 0).unwrap();
    let model = NoiseModel::new(NoiseVariant::UniformOther, 0.1).unwrap();
    let r = erm_robustness_check(&data, &class, &model, 200, 5).unwrap();
    assert_eq!(r.train, 1.0);
    assert!(r.passes, "{r:?}");

    let rows: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
    let labels = (0..1000).map(|i| usize::from(i >= 400)).collect();
    let big = LabeledEmbeddings::from_rows(&rows, labels, 2).unwrap();
    let class = FiniteHypothesisClass::thresholds(&big, 0).unwrap();
    let tiny = NoiseModel::new(NoiseVariant::UniformOther, 1e-3).unwrap();
    let r = erm_robustness_check(&big, &class, &tiny, 10, 5).unwrap();
    assert!(r.gap.abs() < 5e-3, "{r:?}");
}

#[test]
fn least_squares_predicted_column_is_monotone_in_eta() {
    let out = synth(&SynthSpec {
        preset: SynthPreset::MarginFixture { margins: vec![1.0, 0.6, 0.2, 1.0] },
        n_train: 80,
        n_test: 8,
        seed: 0,
    })
    .unwrap();
    let cfg = RidgeConfig { lambda: 0.0, fit_bias: false, standardize: false };
    let gammas = [0.1, 0.5, 1.0];
    let mut prev: Option<Vec<f64>> = None;
    for eta in [0.01, 0.05, 0.1, 0.3] {
        let model = NoiseModel::new(NoiseVariant::UniformOther, eta).unwrap();
        let rows = least_squares_robustness_check(&out.train, cfg, &model, &gammas, 20, 1).unwrap();
        assert_eq!(rows[0].p, 1.0);
        assert!((rows[1].p - 0.75).abs() < 1e-12);
        assert!((rows[2].p - 0.5).abs() < 1e-12);
        let pred: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
        if let Some(p) = &prev {
            assert!(pred.iter().zip(p).all(|(a, b)| a <= b));
        }
        assert!(rows.iter().all(|r| r.passes), "{rows:?}");
        prev = Some(pred);
    }
}
