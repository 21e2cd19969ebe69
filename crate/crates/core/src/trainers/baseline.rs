use std::collections::HashMap;

use super::{Classifier, Trainer};
use crate::data::LabeledEmbeddings;
use crate::error::{contract, Result};

struct Constant(usize);

impl Classifier for Constant {
    fn predict(&self, _x: &[f64]) -> usize {
        self.0
    }
}

/// Ignores its input and always predicts one class.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTrainer(pub usize);

impl Trainer for ConstantTrainer {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        data.check_labels(labels)?;
        if self.0 >= data.num_classes() {
            return Err(contract("constant class out of range"));
        }
        Ok(Box::new(Constant(self.0)))
    }

    fn name(&self) -> String {
        format!("constant-{}", self.0)
    }
}

/// Predicts the most frequent label it was given (ties to the smaller class).
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityTrainer;

impl Trainer for MajorityTrainer {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        data.check_labels(labels)?;
        let mut counts = vec![0usize; data.num_classes()];
        for &y in labels {
            counts[y] += 1;
        }
        let mut best = 0;
        for (c, &cnt) in counts.iter().enumerate() {
            if cnt > counts[best] {
                best = c;
            }
        }
        Ok(Box::new(Constant(best)))
    }

    fn name(&self) -> String {
        "majority".into()
    }
}

fn row_key(x: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

struct Table {
    entries: HashMap<Vec<u64>, usize>,
    fallback: usize,
}

impl Classifier for Table {
    fn predict(&self, x: &[f64]) -> usize {
        self.entries
            .get(&row_key(x))
            .copied()
            .unwrap_or(self.fallback)
    }
}

/// Memorizes the (row -> label) table it is trained on.
///
/// Rows seen in training get exactly the label they were given (the first
/// occurrence wins for duplicated rows); anything else gets `fallback`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TableInterpolator {
    pub fallback: usize,
}

impl Trainer for TableInterpolator {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        data.check_labels(labels)?;
        let mut entries = HashMap::with_capacity(data.len());
        for (x, &y) in data.rows().zip(labels) {
            entries.entry(row_key(x)).or_insert(y);
        }
        Ok(Box::new(Table {
            entries,
            fallback: self.fallback.min(data.num_classes() - 1),
        }))
    }

    fn name(&self) -> String {
        "interpolator".into()
    }
}

pub(crate) fn membership_key(x: &[f64]) -> Vec<u64> {
    row_key(x)
}
