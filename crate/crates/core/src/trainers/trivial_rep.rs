use std::collections::HashSet;

use super::baseline::membership_key;
use super::{Classifier, Trainer};
use crate::data::LabeledEmbeddings;
use crate::error::Result;

/// A representation that memorizes its training inputs.
///
/// Rows present in the training set keep their features; every other input
/// is mapped to the all-zero vector before reaching the wrapped classifier.
/// Train-side behaviour is identical to the inner trainer while test-side
/// accuracy collapses to that of a constant prediction.
#[derive(Debug, Clone)]
pub struct MemorizedRepresentation<T> {
    pub inner: T,
}

impl<T> MemorizedRepresentation<T> {
    pub fn new(inner: T) -> Self {
        Self { inner }
    }
}

struct Wrapped {
    members: HashSet<Vec<u64>>,
    zero: Vec<f64>,
    inner: Box<dyn Classifier>,
}

impl Classifier for Wrapped {
    fn predict(&self, x: &[f64]) -> usize {
        if self.members.contains(&membership_key(x)) {
            self.inner.predict(x)
        } else {
            self.inner.predict(&self.zero)
        }
    }
}

impl<T: Trainer> Trainer for MemorizedRepresentation<T> {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        let inner = self.inner.fit(data, labels, seed)?;
        Ok(Box::new(Wrapped {
            members: data.rows().map(membership_key).collect(),
            zero: vec![0.0; data.dim()],
            inner,
        }))
    }

    fn name(&self) -> String {
        format!("memorized-rep({})", self.inner.name())
    }
}
