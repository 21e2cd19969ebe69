//! The memorization-gap bound, full audits and the robustness checks for
//! least squares and ERM.

use serde::{Deserialize, Serialize};

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Error, Result};
use crate::gaps::{accuracy, assemble_gaps, AccuracyQuad, GapReport, TrialSummary};
use crate::info::{cdc_estimate, cpc_estimate, Estimator};
use crate::noise::{noisy_accuracies, run_clean, run_noisy_trials, NoiseModel, NoisyTrial};
use crate::trainers::{
    margin_profile, ridge_fit, ErmTrainer, FiniteHypothesisClass, RidgeConfig, RidgeTrainer,
    Trainer,
};

/// Which quantity divides `sqrt(cdc / 2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorMode {
    /// The nominal noise level `eta`.
    #[default]
    PaperEta,
    /// The model's exact flip probability `E[B]`.
    EmpiricalFlipRate,
}

impl DenominatorMode {
    pub fn denominator(self, model: &NoiseModel, k: usize) -> f64 {
        match self {
            DenominatorMode::PaperEta => model.eta,
            DenominatorMode::EmpiricalFlipRate => model.flip_probability(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm2Bound {
    pub cdc: f64,
    pub n: usize,
    pub eta_denominator: f64,
    pub value: f64,
    pub capped_value: f64,
}

/// `sqrt(cdc / (2 n)) / denominator`, raw and capped at 1.
pub fn thm2_bound(
    cdc: f64,
    n: usize,
    model: &NoiseModel,
    k: usize,
    mode: DenominatorMode,
) -> Result<Thm2Bound> {
    if n == 0 {
        return Err(contract("n must be positive"));
    }
    if !(cdc >= 0.0) {
        return Err(contract(format!("complexity must be non-negative, got {cdc}")));
    }
    let denom = mode.denominator(model, k);
    if !(denom > 0.0) {
        return Err(contract("bound denominator must be positive"));
    }
    let value = (cdc / (2.0 * n as f64)).sqrt() / denom;
    Ok(Thm2Bound {
        cdc,
        n,
        eta_denominator: denom,
        value,
        capped_value: value.min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub noise: NoiseModel,
    pub trials: usize,
    pub seed: u64,
    pub denominator: DenominatorMode,
    pub compute_cpc: bool,
    pub cpc_estimator: Estimator,
}

impl AuditConfig {
    pub fn new(noise: NoiseModel, trials: usize, seed: u64) -> Self {
        Self {
            noise,
            trials,
            seed,
            denominator: DenominatorMode::default(),
            compute_cpc: false,
            cpc_estimator: Estimator::PlugIn,
        }
    }
}

/// Everything an audit measured, including the raw trials.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub report: GapReport,
    pub trials: Vec<NoisyTrial>,
}

/// One clean fit, `cfg.trials` noisy fits, and the resulting report.
pub fn audit(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    cfg: &AuditConfig,
) -> Result<GapReport> {
    audit_with_trials(trainer, train, test, cfg).map(|o| o.report)
}

pub fn audit_with_trials(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    cfg: &AuditConfig,
) -> Result<AuditOutcome> {
    if cfg.compute_cpc && cfg.trials < 2 {
        return Err(Error::InsufficientTrials {
            got: cfg.trials,
            need: 2,
        });
    }
    let clean = run_clean(trainer, train, test, cfg.seed)?;
    let trials = run_noisy_trials(trainer, train, &cfg.noise, cfg.trials, cfg.seed)?;
    let report = report_from_trials(&(clean.train_accuracy, clean.test_accuracy), &trials, train, cfg)?;
    Ok(AuditOutcome { report, trials })
}

/// Assembles a report from a clean `(train, test)` accuracy pair and a set
/// of noisy trials on `train`.
pub fn report_from_trials(
    clean: &(f64, f64),
    trials: &[NoisyTrial],
    train: &LabeledEmbeddings,
    cfg: &AuditConfig,
) -> Result<GapReport> {
    let k = train.num_classes();
    let labels = train.labels();
    let noisy = noisy_accuracies(trials, labels)?;
    let accuracies = AccuracyQuad {
        train: clean.0,
        test: clean.1,
        train_noisy: noisy.train_noisy,
        ntrain_noisy: noisy.ntrain_noisy,
    };
    let (robustness_gap, rationality_gap, memorization_gap, rrm_bound) =
        match assemble_gaps(&accuracies) {
            Ok(g) => (
                g.robustness,
                Some(g.rationality),
                Some(g.memorization),
                Some(g.rrm_bound),
            ),
            Err(Error::UndefinedNTrain) => {
                log::warn!("no label was corrupted in any trial; NTrain is undefined");
                ((accuracies.train - accuracies.train_noisy).max(0.0), None, None, None)
            }
            Err(e) => return Err(e),
        };
    let cdc = cdc_estimate(trials, labels, k)?.value;
    let cpc = if cfg.compute_cpc {
        Some(cpc_estimate(trials, labels, k, cfg.cpc_estimator)?.value)
    } else {
        None
    };
    let bound = thm2_bound(cdc, train.len(), &cfg.noise, k, cfg.denominator)?;
    let per_trial = trials
        .iter()
        .map(|t| {
            let flips = t.flips();
            let corrupted_hits = t
                .train_predictions
                .iter()
                .zip(labels)
                .zip(&t.flip_mask)
                .filter(|((p, y), &f)| f && p == y)
                .count();
            Ok(TrialSummary {
                trial: t.trial_index,
                flips,
                train_noisy: accuracy(&t.train_predictions, labels)?,
                corrupted_hits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = GapReport {
        eta: cfg.noise.eta,
        trials: trials.len(),
        accuracies,
        robustness_gap,
        rationality_gap,
        memorization_gap,
        generalization_gap: accuracies.train - accuracies.test,
        rrm_bound,
        cdc: Some(cdc),
        cpc,
        thm2_bound: Some(bound.value),
        thm2_bound_capped: Some(bound.capped_value),
        noise_model: cfg.noise.variant,
        bound_denominator: cfg.denominator,
        base_seed: cfg.seed,
        n_train: train.len(),
        per_trial,
    };
    debug_assert!(report.rrm_holds());
    Ok(report)
}

/// One row of the least-squares robustness table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionRow {
    pub gamma: f64,
    /// Fraction of train points whose clean-fit margin is at least `gamma`.
    pub p: f64,
    /// `p - 4 * flip / gamma^2`.
    pub predicted: f64,
    /// Mean fraction of train points whose noisy-refit prediction equals
    /// the clean label.
    pub observed: f64,
    pub sigma: f64,
    pub passes: bool,
}

/// Predicted retention lower bound for margin fraction `p` at margin `gamma`.
pub fn predicted_retention(p: f64, flip: f64, gamma: f64) -> f64 {
    p - 4.0 * flip / (gamma * gamma)
}

pub fn least_squares_robustness_check(
    data: &LabeledEmbeddings,
    config: RidgeConfig,
    model: &NoiseModel,
    gammas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<RetentionRow>> {
    if gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(contract("margins must be positive"));
    }
    let clean = ridge_fit(data, data.labels(), &config)?;
    let profile = margin_profile(&clean, data)?;
    let runs = run_noisy_trials(&RidgeTrainer(config), data, model, trials, seed)?;
    let observed = noisy_accuracies(&runs, data.labels())?.train_noisy;
    let samples = (trials * data.len()) as f64;
    let sigma = (observed * (1.0 - observed) / samples).sqrt();
    let flip = model.flip_probability(data.num_classes());
    Ok(gammas
        .iter()
        .map(|&gamma| {
            let p = profile.fraction_at_least(gamma);
            let predicted = predicted_retention(p, flip, gamma);
            RetentionRow {
                gamma,
                p,
                predicted,
                observed,
                sigma,
                passes: observed >= predicted - 3.0 * sigma,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmRobustness {
    pub train: f64,
    pub train_noisy: f64,
    /// `train - train_noisy`, unclamped.
    pub gap: f64,
    /// `2 eta`.
    pub bound: f64,
    pub sigma: f64,
    pub passes: bool,
}

pub fn erm_robustness_check(
    data: &LabeledEmbeddings,
    class: &FiniteHypothesisClass,
    model: &NoiseModel,
    trials: usize,
    seed: u64,
) -> Result<ErmRobustness> {
    let trainer = ErmTrainer {
        class: class.clone(),
    };
    let clean = run_clean(&trainer, data, data, seed)?;
    let runs = run_noisy_trials(&trainer, data, model, trials, seed)?;
    let train_noisy = noisy_accuracies(&runs, data.labels())?.train_noisy;
    let samples = (trials * data.len()) as f64;
    let sigma = (train_noisy * (1.0 - train_noisy) / samples).sqrt();
    let gap = clean.train_accuracy - train_noisy;
    let bound = 2.0 * model.eta;
    Ok(ErmRobustness {
        train: clean.train_accuracy,
        train_noisy,
        gap,
        bound,
        sigma,
        passes: gap <= bound + 3.0 * sigma,
    })
}
