//! Procedure S: store the noisy training set, and answer each query by
//! planting the query point with a random label, retraining and predicting.

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Error, Result};
use crate::gaps::accuracy;
use crate::noise::{noisy_accuracies, run_clean, run_noisy_trials, NoiseModel};
use crate::seed::stream_rng;
use crate::trainers::Trainer;

/// Stream of the stored noisy labels. Queries use `QUERY_STREAM_BASE + q`.
/// Both sit far above the streams of the clean run and the noisy trials.
const STORE_STREAM: u64 = 1 << 62;
const QUERY_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotlConfig {
    /// Retrainings per query, combined by majority vote. 1 is the plain
    /// procedure.
    pub trials_per_test_point: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Noisy trials used to measure the baseline trainer.
    pub audit_trials: usize,
}

impl PotlConfig {
    pub fn new(noise: NoiseModel, seed: u64) -> Self {
        Self {
            trials_per_test_point: 1,
            noise,
            seed,
            audit_trials: 20,
        }
    }
}

/// A trainer wrapped as procedure S over a fixed noisy training set.
pub struct ProcedureS<'a> {
    trainer: &'a dyn Trainer,
    stored: LabeledEmbeddings,
    noisy_labels: Vec<usize>,
    config: PotlConfig,
}

impl<'a> ProcedureS<'a> {
    /// Draws the stored noisy labels once from `config.seed`.
    pub fn new(trainer: &'a dyn Trainer, stored: &LabeledEmbeddings, config: PotlConfig) -> Result<Self> {
        if config.trials_per_test_point == 0 {
            return Err(contract("trials_per_test_point must be at least 1"));
        }
        let mut rng = stream_rng(config.seed, STORE_STREAM);
        let (noisy_labels, _) = config
            .noise
            .corrupt(stored.labels(), stored.num_classes(), &mut rng)?;
        Ok(Self {
            trainer,
            stored: stored.clone(),
            noisy_labels,
            config,
        })
    }

    pub fn noisy_labels(&self) -> &[usize] {
        &self.noisy_labels
    }

    /// Prediction for `x`. Each query index has its own random stream, so
    /// every query is reproducible on its own.
    pub fn predict(&self, x: &[f64], query_index: u64) -> Result<usize> {
        let n = self.stored.len();
        let k = self.stored.num_classes();
        let mut rng = stream_rng(self.config.seed, QUERY_STREAM_BASE.wrapping_add(query_index));
        let mut votes = vec![0usize; k];
        for _ in 0..self.config.trials_per_test_point {
            let i = rng.random_range(0..n);
            let label = rng.random_range(0..k);
            let mut planted = self.stored.clone();
            let mut labels = self.noisy_labels.clone();
            planted.replace_row(i, x, label)?;
            labels[i] = label;
            let clf = self.trainer.fit(&planted, &labels, rng.next_u64())?;
            let p = clf.predict(x);
            if p >= k {
                return Err(contract(format!("classifier predicted class {p} with k={k}")));
            }
            votes[p] += 1;
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        Ok(votes.iter().position(|&v| v == best).unwrap_or(0))
    }
}

pub fn procedure_s_predict(
    trainer: &dyn Trainer,
    stored: &LabeledEmbeddings,
    x: &[f64],
    config: PotlConfig,
    query_index: u64,
) -> Result<usize> {
    ProcedureS::new(trainer, stored, config)?.predict(x, query_index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotlResult {
    pub test_s: f64,
    pub test_t: f64,
    pub train_noisy_t: f64,
    pub ntrain_t: Option<f64>,
    /// `Train_T(eta) >= NTrain_T(eta)`, allowing three standard errors.
    pub assumption_holds: bool,
    /// `Test_S - NTrain_T(eta)`.
    pub margin: Option<f64>,
    /// `Test_S - Test_T`.
    pub gain: f64,
    /// Binomial standard error of `test_s`.
    pub sigma: f64,
    /// `Test_T + max(NTrain_T - Test_T, 0)`.
    pub informal_rhs: Option<f64>,
}

pub fn potl_experiment(
    trainer: &dyn Trainer,
    train: &LabeledEmbeddings,
    test: &LabeledEmbeddings,
    config: PotlConfig,
) -> Result<PotlResult> {
    train.check_compatible(test)?;
    let clean = run_clean(trainer, train, test, config.seed)?;
    let trials = run_noisy_trials(trainer, train, &config.noise, config.audit_trials, config.seed)?;
    let noisy = noisy_accuracies(&trials, train.labels())?;
    // Train(eta) >= NTrain(eta) up to three standard errors of the difference
    let se = |p: f64, m: usize| p * (1.0 - p) / m.max(1) as f64;
    let assumption_holds = noisy.ntrain_noisy.is_some_and(|nt| {
        let sigma = (se(nt, noisy.corrupted) + se(noisy.train_noisy, noisy.samples)).sqrt();
        noisy.train_noisy + 3.0 * sigma >= nt
    });
    if !assumption_holds {
        log::warn!(
            "Train(eta) = {} is below NTrain(eta) = {:?}; the guarantee does not apply",
            noisy.train_noisy,
            noisy.ntrain_noisy
        );
    }

    let s = ProcedureS::new(trainer, train, config)?;
    let preds = (0..test.len())
        .into_par_iter()
        .map(|q| {
            s.predict(test.row(q), q as u64).map_err(|e| Error::Trial {
                trial: q,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let test_s = accuracy(&preds, test.labels())?;
    let test_t = clean.test_accuracy;
    Ok(PotlResult {
        test_s,
        test_t,
        train_noisy_t: noisy.train_noisy,
        ntrain_t: noisy.ntrain_noisy,
        assumption_holds,
        margin: noisy.ntrain_noisy.map(|nt| test_s - nt),
        gain: test_s - test_t,
        sigma: (test_s * (1.0 - test_s) / test.len() as f64).sqrt(),
        informal_rhs: noisy.ntrain_noisy.map(|nt| test_t + (nt - test_t).max(0.0)),
    })
}
