//! The dataset form every other module consumes: frozen representation
//! vectors with canonical class indices `0..k`.

use crate::error::{contract, Error, Result};

/// Representation vectors (row-major, `n x d`) with class labels in `0..k`
/// and optional augmentation group ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
    group_ids: Option<Vec<u32>>,
}

impl LabeledEmbeddings {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        num_classes: usize,
        group_ids: Option<Vec<u32>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(contract("feature dimension must be at least 1"));
        }
        if labels.is_empty() {
            return Err(contract("dataset must contain at least one sample"));
        }
        if num_classes < 2 {
            return Err(contract(format!("num_classes must be >= 2, got {num_classes}")));
        }
        let n = labels.len();
        if features.len() != n * dim {
            return Err(Error::LengthMismatch {
                what: "features",
                got: features.len(),
                expected: n * dim,
            });
        }
        if let Some(g) = &group_ids {
            if g.len() != n {
                return Err(Error::LengthMismatch {
                    what: "group_ids",
                    got: g.len(),
                    expected: n,
                });
            }
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(contract(format!(
                "label {y} at index {i} is outside 0..{num_classes}"
            )));
        }
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
            group_ids,
        })
    }

    /// Builds a dataset from explicit rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(contract("rows have inconsistent lengths"));
        }
        let features = rows.iter().flatten().copied().collect();
        Self::new(features, dim, labels, num_classes, None)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn group_ids(&self) -> Option<&[u32]> {
        self.group_ids.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    /// Checks that `labels` is a valid relabeling of this dataset.
    pub fn check_labels(&self, labels: &[usize]) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                got: labels.len(),
                expected: self.len(),
            });
        }
        if let Some((i, &y)) = labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y >= self.num_classes)
        {
            return Err(contract(format!(
                "label {y} at index {i} is outside 0..{}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Train/test pairs must agree on dimension and class count.
    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(contract(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        if self.num_classes != other.num_classes {
            return Err(contract(format!(
                "class count mismatch: {} vs {}",
                self.num_classes, other.num_classes
            )));
        }
        Ok(())
    }

    /// Returns the rows at `order`, in that order.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        if order.is_empty() {
            return Err(contract("selection must be non-empty"));
        }
        let mut features = Vec::with_capacity(order.len() * self.dim);
        let mut labels = Vec::with_capacity(order.len());
        for &i in order {
            if i >= self.len() {
                return Err(contract(format!("row index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let group_ids = self
            .group_ids
            .as_ref()
            .map(|g| order.iter().map(|&i| g[i]).collect());
        Ok(Self {
            features,
            dim: self.dim,
            labels,
            num_classes: self.num_classes,
            group_ids,
        })
    }

    /// Overwrites row `i` and its label.
    pub fn replace_row(&mut self, i: usize, x: &[f64], label: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                what: "feature vector",
                got: x.len(),
                expected: self.dim,
            });
        }
        if label >= self.num_classes || i >= self.len() {
            return Err(contract("row index or label out of range"));
        }
        self.features[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
        self.labels[i] = label;
        Ok(())
    }

    pub fn with_group_ids(mut self, group_ids: Option<Vec<u32>>) -> Result<Self> {
        if let Some(g) = &group_ids {
            if g.len() != self.len() {
                return Err(Error::LengthMismatch {
                    what: "group_ids",
                    got: g.len(),
                    expected: self.len(),
                });
            }
        }
        self.group_ids = group_ids;
        Ok(self)
    }

    /// Same labels, every feature replaced by zero.
    pub fn zeroed_features(&self) -> Self {
        Self {
            features: vec![0.0; self.features.len()],
            ..self.clone()
        }
    }

    /// Empirical class frequencies of the stored labels.
    pub fn class_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.len() as f64)
            .collect()
    }
}
