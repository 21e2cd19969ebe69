//! The eta-noisy experiment: label corruption, repeated retraining on
//! corrupted labels, and the accuracies measured against clean labels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Error, Result};
use crate::gaps::accuracy;
use crate::seed::{stream_rng, trainer_seed, trial_stream, CLEAN_STREAM};
use crate::trainers::{predict_all, Trainer};

/// How a corrupted label is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseVariant {
    /// Uniform over all `k` classes (the true label can be redrawn).
    #[default]
    UniformAll,
    /// Uniform over the `k - 1` wrong classes.
    UniformOther,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub variant: NoiseVariant,
    pub eta: f64,
}

impl NoiseModel {
    pub fn new(variant: NoiseVariant, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(contract(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(Self { variant, eta })
    }

    /// `P(noisy label != clean label)` for `k` classes.
    pub fn flip_probability(&self, k: usize) -> f64 {
        match self.variant {
            NoiseVariant::UniformAll => self.eta * (k as f64 - 1.0) / k as f64,
            NoiseVariant::UniformOther => self.eta,
        }
    }

    /// Probability of deviation `dev = (noisy - clean) mod k`.
    pub fn deviation_probability(&self, k: usize, dev: usize) -> f64 {
        let kf = k as f64;
        match (self.variant, dev) {
            (_, d) if d >= k => 0.0,
            (NoiseVariant::UniformAll, 0) => 1.0 - self.eta + self.eta / kf,
            (NoiseVariant::UniformAll, _) => self.eta / kf,
            (NoiseVariant::UniformOther, 0) => 1.0 - self.eta,
            (NoiseVariant::UniformOther, _) => self.eta / (kf - 1.0),
        }
    }

    pub fn sample_deviation<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.eta {
            match self.variant {
                NoiseVariant::UniformAll => rng.random_range(0..k),
                NoiseVariant::UniformOther => rng.random_range(1..k),
            }
        } else {
            0
        }
    }

    /// Corrupts every label independently; returns `(noisy, deviations)`.
    pub fn corrupt<R: Rng + ?Sized>(
        &self,
        labels: &[usize],
        k: usize,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        if k < 2 {
            return Err(contract(format!("need at least 2 classes, got {k}")));
        }
        if labels.iter().any(|&y| y >= k) {
            return Err(contract("label outside 0..k"));
        }
        let deviations: Vec<usize> = labels
            .iter()
            .map(|_| self.sample_deviation(k, rng))
            .collect();
        let noisy = labels
            .iter()
            .zip(&deviations)
            .map(|(&y, &n)| (y + n) % k)
            .collect();
        Ok((noisy, deviations))
    }
}

/// Corrupts `labels` with the stream derived from `seed`.
pub fn corrupt_labels(
    labels: &[usize],
    k: usize,
    model: &NoiseModel,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    model.corrupt(labels, k, &mut stream_rng(seed, CLEAN_STREAM))
}

/// One realization of the noisy experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyTrial {
    pub trial_index: usize,
    /// `N_i = (noisy_i - y_i) mod k`.
    pub noise_deviations: Vec<usize>,
    /// Predictions of the noisy-trained classifier on the train rows.
    pub train_predictions: Vec<usize>,
    /// `N_i != 0`.
    pub flip_mask: Vec<bool>,
}

impl NoisyTrial {
    pub fn noisy_labels(&self, clean: &[usize], k: usize) -> Vec<usize> {
        clean
            .iter()
            .zip(&self.noise_deviations)
            .map(|(&y, &n)| (y + n) % k)
            .collect()
    }

    pub fn flips(&self) -> usize {
        self.flip_mask.iter().filter(|&&b| b).count()
    }
}

/// Train and test accuracy of one clean fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanRun {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_predictions: Vec<usize>,
    pub test_predictions: Vec<usize>,
}

pub fn run_clean(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    seed: u64,
) -> Result<CleanRun> {
    train.check_compatible(test)?;
    let clf = trainer.fit(train, train.labels(), trainer_seed(seed, CLEAN_STREAM))?;
    let train_predictions = predict_all(clf.as_ref(), train);
    let test_predictions = predict_all(clf.as_ref(), test);
    Ok(CleanRun {
        train_accuracy: accuracy(&train_predictions, train.labels())?,
        test_accuracy: accuracy(&test_predictions, test.labels())?,
        train_predictions,
        test_predictions,
    })
}

fn run_trial(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    model: &NoiseModel,
    base_seed: u64,
    t: usize,
) -> Result<NoisyTrial> {
    let stream = trial_stream(t);
    let mut rng = stream_rng(base_seed, stream);
    let (noisy, deviations) = model.corrupt(train.labels(), train.num_classes(), &mut rng)?;
    let clf = trainer.fit(train, &noisy, trainer_seed(base_seed, stream))?;
    Ok(NoisyTrial {
        trial_index: t,
        flip_mask: deviations.iter().map(|&n| n != 0).collect(),
        noise_deviations: deviations,
        train_predictions: predict_all(clf.as_ref(), train),
    })
}

/// Runs trials `0..trials`. Trial `t` draws its noise from stream `t + 1`
/// of `base_seed`, so a shorter run is always a prefix of a longer one.
pub fn run_noisy_trials(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    model: &NoiseModel,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<NoisyTrial>> {
    if trials == 0 {
        return Err(contract("at least one noisy trial is required"));
    }
    let results: Vec<Result<NoisyTrial>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(trainer, train, model, base_seed, t).map_err(|e| Error::Trial {
                trial: t,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Pooled clean-label accuracies of the noisy-trained classifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyAccuracy {
    /// Train(eta): correctness against clean labels over all trials and rows.
    pub train_noisy: f64,
    /// NTrain(eta): the same restricted to corrupted positions, pooled
    /// across trials; `None` when no position was corrupted.
    pub ntrain_noisy: Option<f64>,
    pub samples: usize,
    pub corrupted: usize,
}

pub fn noisy_accuracies(trials: &[NoisyTrial], clean_labels: &[usize]) -> Result<NoisyAccuracy> {
    if trials.is_empty() {
        return Err(contract("at least one trial is required"));
    }
    let (mut hits, mut samples, mut corrupted, mut corrupted_hits) = (0usize, 0usize, 0usize, 0usize);
    for t in trials {
        if t.train_predictions.len() != clean_labels.len() {
            return Err(Error::LengthMismatch {
                what: "trial predictions",
                got: t.train_predictions.len(),
                expected: clean_labels.len(),
            });
        }
        for ((&p, &y), &flipped) in t.train_predictions.iter().zip(clean_labels).zip(&t.flip_mask) {
            let ok = usize::from(p == y);
            hits += ok;
            samples += 1;
            if flipped {
                corrupted += 1;
                corrupted_hits += ok;
            }
        }
    }
    Ok(NoisyAccuracy {
        train_noisy: hits as f64 / samples as f64,
        ntrain_noisy: (corrupted > 0).then(|| corrupted_hits as f64 / corrupted as f64),
        samples,
        corrupted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::{ConstantTrainer, TableInterpolator};

    fn line(n: usize, k: usize) -> LabeledEmbeddings {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        LabeledEmbeddings::from_rows(&rows, (0..n).map(|i| i % k).collect(), k).unwrap()
    }

    fn flip_rate(model: NoiseModel, k: usize, draws: usize, seed: u64) -> f64 {
        let labels: Vec<usize> = (0..draws).map(|i| i % k).collect();
        let (noisy, dev) = corrupt_labels(&labels, k, &model, seed).unwrap();
        for ((&y, &z), &n) in labels.iter().zip(&noisy).zip(&dev) {
            assert_eq!((y + n) % k, z);
            assert!(n < k);
        }
        dev.iter().filter(|&&n| n != 0).count() as f64 / draws as f64
    }

    #[test]
    fn model_rejects_bad_eta() {
        assert!(NoiseModel::new(NoiseVariant::UniformAll, 0.0).is_err());
        assert!(NoiseModel::new(NoiseVariant::UniformAll, 1.0).is_err());
        assert!(NoiseModel::new(NoiseVariant::UniformAll, f64::NAN).is_err());
    }

    #[test]
    fn corrupt_requires_two_classes() {
        let m = NoiseModel::new(NoiseVariant::UniformAll, 0.1).unwrap();
        assert!(corrupt_labels(&[0, 0], 1, &m, 0).is_err());
    }

    #[test]
    fn vanishing_noise_leaves_labels() {
        let m = NoiseModel::new(NoiseVariant::UniformAll, 1e-9).unwrap();
        let (noisy, dev) = corrupt_labels(&[0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 3, &m, 5).unwrap();
        assert_eq!(noisy, vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0]);
        assert!(dev.iter().all(|&n| n == 0));
    }

    #[test]
    fn uniform_other_binary_flip_rate() {
        let eta = 0.1;
        let m = NoiseModel::new(NoiseVariant::UniformOther, eta).unwrap();
        let draws = 100_000;
        let rate = flip_rate(m, 2, draws, 11);
        let sigma = (eta * (1.0 - eta) / draws as f64).sqrt();
        assert!((rate - eta).abs() <= 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn uniform_all_flip_rate_scaled() {
        let m = NoiseModel::new(NoiseVariant::UniformAll, 0.05).unwrap();
        let p = m.flip_probability(10);
        assert!((p - 0.045).abs() < 1e-15);
        let draws = 100_000;
        let rate = flip_rate(m, 10, draws, 12);
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn deviation_probabilities_sum_to_one() {
        for variant in [NoiseVariant::UniformAll, NoiseVariant::UniformOther] {
            let m = NoiseModel::new(variant, 0.3).unwrap();
            let total: f64 = (0..4).map(|d| m.deviation_probability(4, d)).sum();
            assert!((total - 1.0).abs() < 1e-15);
            assert!((1.0 - m.deviation_probability(4, 0) - m.flip_probability(4)).abs() < 1e-15);
        }
    }

    #[test]
    fn trials_are_reproducible_and_prefix_stable() {
        let data = line(30, 3);
        let m = NoiseModel::new(NoiseVariant::UniformOther, 0.2).unwrap();
        let a = run_noisy_trials(&TableInterpolator::default(), &data, &m, 8, 42).unwrap();
        let b = run_noisy_trials(&TableInterpolator::default(), &data, &m, 8, 42).unwrap();
        let c = run_noisy_trials(&TableInterpolator::default(), &data, &m, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..5], &c[..]);
        for t in &a {
            for (&n, &f) in t.noise_deviations.iter().zip(&t.flip_mask) {
                assert_eq!(n != 0, f);
            }
        }
    }

    #[test]
    fn worker_count_does_not_matter() {
        let data = line(40, 2);
        let m = NoiseModel::new(NoiseVariant::UniformAll, 0.3).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_noisy_trials(&TableInterpolator::default(), &data, &m, 16, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn constant_trainer_is_noise_oblivious() {
        let data = line(50, 2);
        let m = NoiseModel::new(NoiseVariant::UniformAll, 0.4).unwrap();
        let trials = run_noisy_trials(&ConstantTrainer(1), &data, &m, 10, 3).unwrap();
        let acc = noisy_accuracies(&trials, data.labels()).unwrap();
        assert_eq!(acc.train_noisy, 0.5);
        let clean = run_clean(&ConstantTrainer(1), &data, &data, 3).unwrap();
        assert_eq!(clean.train_accuracy, acc.train_noisy);
        assert_eq!(clean.test_accuracy, clean.train_accuracy);
    }

    #[test]
    fn interpolator_never_recovers_corrupted_labels() {
        let data = line(200, 4);
        let m = NoiseModel::new(NoiseVariant::UniformOther, 0.1).unwrap();
        let trials = run_noisy_trials(&TableInterpolator::default(), &data, &m, 20, 1).unwrap();
        let acc = noisy_accuracies(&trials, data.labels()).unwrap();
        assert_eq!(acc.ntrain_noisy, Some(0.0));
        let flip = acc.corrupted as f64 / acc.samples as f64;
        assert!((acc.train_noisy - (1.0 - flip)).abs() < 1e-12);
    }

    #[test]
    fn ntrain_undefined_without_flips() {
        let t = NoisyTrial {
            trial_index: 0,
            noise_deviations: vec![0, 0],
            train_predictions: vec![0, 1],
            flip_mask: vec![false, false],
        };
        let acc = noisy_accuracies(&[t], &[0, 0]).unwrap();
        assert_eq!(acc.ntrain_noisy, None);
        assert_eq!(acc.train_noisy, 0.5);
        assert!(noisy_accuracies(&[], &[0]).is_err());
    }

    #[test]
    fn pooled_flip_rate_and_independence() {
        // K * n = 20 * 1000 >= 1e4 samples
        let data = line(1000, 3);
        let eta = 0.2;
        let m = NoiseModel::new(NoiseVariant::UniformOther, eta).unwrap();
        let trials = run_noisy_trials(&ConstantTrainer(0), &data, &m, 20, 77).unwrap();
        let total: usize = trials.iter().map(NoisyTrial::flips).sum();
        let samples = 20_000.0;
        let rate = total as f64 / samples;
        assert!((rate - eta).abs() <= 4.0 * (eta * (1.0 - eta) / samples).sqrt());

        // pairwise correlation of flip masks between trials
        let n: f64 = 1000.0;
        let sd0 = 1.0 / n.sqrt();
        for a in 0..trials.len() {
            for b in (a + 1)..trials.len() {
                let xa: Vec<f64> = trials[a].flip_mask.iter().map(|&f| f as u8 as f64).collect();
                let xb: Vec<f64> = trials[b].flip_mask.iter().map(|&f| f as u8 as f64).collect();
                let ma = xa.iter().sum::<f64>() / n;
                let mb = xb.iter().sum::<f64>() / n;
                let cov: f64 = xa.iter().zip(&xb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
                let va = xa.iter().map(|p| (p - ma).powi(2)).sum::<f64>() / n;
                let vb = xb.iter().map(|q| (q - mb).powi(2)).sum::<f64>() / n;
                let corr = cov / (va * vb).sqrt();
                assert!(corr.abs() <= 4.0 * sd0, "trials {a},{b}: corr {corr}");
            }
        }
    }
}
