//! Accuracy measurements and the robustness / rationality / memorization
//! decomposition of the generalization gap.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Fraction of positions where `predictions[i] == labels[i]`.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "predictions",
            got: predictions.len(),
            expected: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(contract("accuracy of an empty sequence"));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// The four accuracies entering the RRM bound.
///
/// `ntrain_noisy` is `None` when no corrupted sample occurred in any trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyQuad {
    pub train: f64,
    pub test: f64,
    pub train_noisy: f64,
    pub ntrain_noisy: Option<f64>,
}

impl AccuracyQuad {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            Some(self.train),
            Some(self.test),
            Some(self.train_noisy),
            self.ntrain_noisy,
        ];
        if vals.iter().flatten().all(|v| (0.0..=1.0).contains(v)) {
            Ok(())
        } else {
            Err(contract(format!("accuracy outside [0, 1]: {self:?}")))
        }
    }
}

/// Clamped gaps plus the unclamped generalization gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDecomposition {
    pub robustness: f64,
    pub rationality: f64,
    pub memorization: f64,
    pub generalization: f64,
    pub rrm_bound: f64,
}

/// Applies the clamped gap formulas to `acc`.
///
/// The bound is accumulated as `generalization + (sum of the clamped-away
/// negative parts)`, which equals the sum of the three gaps and makes
/// `generalization <= rrm_bound` hold in floating point as well.
pub fn assemble_gaps(acc: &AccuracyQuad) -> Result<GapDecomposition> {
    acc.validate()?;
    let ntrain = acc.ntrain_noisy.ok_or(Error::UndefinedNTrain)?;
    let raw = [
        acc.train - acc.train_noisy,
        ntrain - acc.test,
        acc.train_noisy - ntrain,
    ];
    let [robustness, rationality, memorization] = raw.map(|x| x.max(0.0));
    let generalization = acc.train - acc.test;
    let slack: f64 = raw.iter().map(|x| (-x).max(0.0)).sum();
    Ok(GapDecomposition {
        robustness,
        rationality,
        memorization,
        generalization,
        rrm_bound: generalization + slack,
    })
}

/// Per-trial summary kept in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub flips: usize,
    pub train_noisy: f64,
    pub corrupted_hits: usize,
}

/// Result of one audit.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub eta: f64,
    pub trials: usize,
    pub accuracies: AccuracyQuad,
    pub robustness_gap: f64,
    pub rationality_gap: Option<f64>,
    pub memorization_gap: Option<f64>,
    pub generalization_gap: f64,
    pub rrm_bound: Option<f64>,
    pub cdc: Option<f64>,
    pub cpc: Option<f64>,
    pub thm2_bound: Option<f64>,
    pub thm2_bound_capped: Option<f64>,
    pub noise_model: crate::noise::NoiseVariant,
    pub bound_denominator: crate::bounds::DenominatorMode,
    pub base_seed: u64,
    pub n_train: usize,
    pub per_trial: Vec<TrialSummary>,
}

impl GapReport {
    /// True when the RRM inequality holds (vacuously when NTrain is undefined).
    pub fn rrm_holds(&self) -> bool {
        self.rrm_bound.is_none_or(|b| self.generalization_gap <= b)
    }

    /// Total number of corrupted samples pooled across trials.
    pub fn corrupted_samples(&self) -> usize {
        self.per_trial.iter().map(|t| t.flips).sum()
    }

    /// Binomial standard error of the pooled NTrain estimate.
    pub fn ntrain_std_error(&self) -> Option<f64> {
        let m = self.corrupted_samples();
        self.accuracies
            .ntrain_noisy
            .filter(|_| m > 0)
            .map(|p| (p * (1.0 - p) / m as f64).sqrt())
    }

    /// Binomial standard error of the pooled Train(eta) estimate.
    pub fn train_noisy_std_error(&self) -> f64 {
        let m = (self.trials * self.n_train).max(1);
        let p = self.accuracies.train_noisy;
        (p * (1.0 - p) / m as f64).sqrt()
    }

    /// Standard error of the memorization-gap estimate.
    pub fn memorization_std_error(&self) -> Option<f64> {
        self.ntrain_std_error()
            .map(|s| (s * s + self.train_noisy_std_error().powi(2)).sqrt())
    }
}
