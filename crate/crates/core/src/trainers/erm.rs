//! Brute-force empirical risk minimization over an explicit hypothesis list.

use std::fmt;
use std::sync::Arc;

use super::{Classifier, Trainer};
use crate::data::LabeledEmbeddings;
use crate::error::{contract, Result};

type PredictFn = dyn Fn(&[f64]) -> usize + Send + Sync;

#[derive(Clone)]
pub enum Hypothesis {
    Constant(usize),
    /// `below` when `x[coord] < cut`, else `above`.
    Threshold {
        coord: usize,
        cut: f64,
        below: usize,
        above: usize,
    },
    Custom(Arc<PredictFn>),
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Hypothesis::Constant(c) => *c,
            Hypothesis::Threshold {
                coord,
                cut,
                below,
                above,
            } => {
                if x[*coord] < *cut {
                    *below
                } else {
                    *above
                }
            }
            Hypothesis::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Constant(c) => write!(f, "Constant({c})"),
            Hypothesis::Threshold {
                coord,
                cut,
                below,
                above,
            } => write!(f, "Threshold(x[{coord}] < {cut} ? {below} : {above})"),
            Hypothesis::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Classifier for Hypothesis {
    fn predict(&self, x: &[f64]) -> usize {
        Hypothesis::predict(self, x)
    }
}

/// A non-empty, enumerable list of classifiers.
#[derive(Debug, Clone)]
pub struct FiniteHypothesisClass {
    hypotheses: Vec<Hypothesis>,
}

impl FiniteHypothesisClass {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(contract("hypothesis class must be non-empty"));
        }
        Ok(Self { hypotheses })
    }

    pub fn constants(num_classes: usize) -> Self {
        Self {
            hypotheses: (0..num_classes).map(Hypothesis::Constant).collect(),
        }
    }

    /// Every threshold rule on coordinate `coord` that separates the
    /// observed values of `data`, for every ordered pair of distinct
    /// classes, preceded by the constant rules.
    pub fn thresholds(data: &LabeledEmbeddings, coord: usize) -> Result<Self> {
        if coord >= data.dim() {
            return Err(contract(format!("coordinate {coord} out of range")));
        }
        let mut values: Vec<f64> = data.rows().map(|x| x[coord]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let cuts: Vec<f64> = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let k = data.num_classes();
        let mut hypotheses: Vec<Hypothesis> = (0..k).map(Hypothesis::Constant).collect();
        for &cut in &cuts {
            for below in 0..k {
                for above in 0..k {
                    if below != above {
                        hypotheses.push(Hypothesis::Threshold {
                            coord,
                            cut,
                            below,
                            above,
                        });
                    }
                }
            }
        }
        Ok(Self { hypotheses })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    /// Number of training errors of hypothesis `h` against `labels`.
    pub fn errors(&self, h: usize, data: &LabeledEmbeddings, labels: &[usize]) -> usize {
        data.rows()
            .zip(labels)
            .filter(|(x, &y)| self.hypotheses[h].predict(x) != y)
            .count()
    }
}

/// Index of the first hypothesis (in enumeration order) with minimal 0-1 error.
pub fn erm_fit(
    data: &LabeledEmbeddings,
    labels: &[usize],
    class: &FiniteHypothesisClass,
) -> Result<usize> {
    data.check_labels(labels)?;
    let mut best = (usize::MAX, 0);
    for h in 0..class.len() {
        let e = class.errors(h, data, labels);
        if e < best.0 {
            best = (e, h);
            if e == 0 {
                break;
            }
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone)]
pub struct ErmTrainer {
    pub class: FiniteHypothesisClass,
}

impl Trainer for ErmTrainer {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        let h = erm_fit(data, labels, &self.class)?;
        Ok(Box::new(self.class.hypotheses[h].clone()))
    }

    fn name(&self) -> String {
        format!("erm({} hypotheses)", self.class.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn realizable_class_has_zero_error() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 7)).collect();
        let data = LabeledEmbeddings::from_rows(&rows, labels, 2).unwrap();
        let class = FiniteHypothesisClass::thresholds(&data, 0).unwrap();
        let h = erm_fit(&data, data.labels(), &class).unwrap();
        assert_eq!(class.errors(h, &data, data.labels()), 0);
    }

    #[test]
    fn majority_constant_wins() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = vec![0, 1, 0, 0, 1, 0, 0, 1, 0, 0];
        let data = LabeledEmbeddings::from_rows(&rows, labels, 2).unwrap();
        let class = FiniteHypothesisClass::constants(2);
        assert_eq!(erm_fit(&data, data.labels(), &class).unwrap(), 0);
    }

    #[test]
    fn empty_class_rejected() {
        assert!(FiniteHypothesisClass::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn erm_minimizes_over_class(
            xs in proptest::collection::vec(-4i32..4, 1..30),
            ys in proptest::collection::vec(0usize..3, 30),
        ) {
            let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x as f64]).collect();
            let labels = ys[..rows.len()].to_vec();
            let data = LabeledEmbeddings::from_rows(&rows, labels, 3).unwrap();
            let class = FiniteHypothesisClass::thresholds(&data, 0).unwrap();
            prop_assert!(class.len() <= 10_000);
            let h = erm_fit(&data, data.labels(), &class).unwrap();
            let e = class.errors(h, &data, data.labels());
            for g in 0..class.len() {
                let eg = class.errors(g, &data, data.labels());
                prop_assert!(e <= eg);
                if g < h { prop_assert!(eg > e); }
            }
        }
    }
}
