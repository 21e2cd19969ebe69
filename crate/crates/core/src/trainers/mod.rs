//! The simple-classifier fitting phase.
//!
//! A [`Trainer`] is a pure function from (dataset, label vector, seed) to a
//! [`Classifier`]. Label vectors are passed separately so noisy experiments
//! can relabel a shared read-only dataset.

mod baseline;
mod erm;
mod ridge;
mod trivial_rep;

use std::sync::Arc;

pub use baseline::{ConstantTrainer, MajorityTrainer, TableInterpolator};
pub use erm::{erm_fit, ErmTrainer, FiniteHypothesisClass, Hypothesis};
pub use ridge::{margin_profile, ridge_fit, LinearClassifier, MarginProfile, RidgeConfig, RidgeTrainer};
pub use trivial_rep::MemorizedRepresentation;

use crate::data::LabeledEmbeddings;
use crate::error::Result;

pub trait Classifier: Send + Sync {
    fn predict(&self, x: &[f64]) -> usize;
}

pub trait Trainer: Send + Sync {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Classifier>>;

    fn name(&self) -> String;
}

impl<T: Trainer + ?Sized> Trainer for Arc<T> {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        (**self).fit(data, labels, seed)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

impl<T: Trainer + ?Sized> Trainer for &T {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        (**self).fit(data, labels, seed)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

/// Predictions of `clf` on every row of `data`.
pub fn predict_all(clf: &dyn Classifier, data: &LabeledEmbeddings) -> Vec<usize> {
    data.rows().map(|x| clf.predict(x)).collect()
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}
