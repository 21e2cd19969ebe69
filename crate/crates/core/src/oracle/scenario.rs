use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Result};
use crate::noise::{NoiseModel, NoiseVariant};
use crate::trainers::{
    ConstantTrainer, ErmTrainer, FiniteHypothesisClass, MajorityTrainer, TableInterpolator,
    Trainer,
};

/// The deterministic trainers random scenarios draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioTrainer {
    Constant(usize),
    Majority,
    Interpolator { fallback: usize },
    /// ERM over every threshold rule on coordinate 0 of the train set.
    ThresholdErm,
}

impl ScenarioTrainer {
    pub fn build(self, train: &LabeledEmbeddings) -> Result<Arc<dyn Trainer>> {
        Ok(match self {
            ScenarioTrainer::Constant(c) => Arc::new(ConstantTrainer(c)),
            ScenarioTrainer::Majority => Arc::new(MajorityTrainer),
            ScenarioTrainer::Interpolator { fallback } => Arc::new(TableInterpolator { fallback }),
            ScenarioTrainer::ThresholdErm => Arc::new(ErmTrainer {
                class: FiniteHypothesisClass::thresholds(train, 0)?,
            }),
        })
    }
}

/// A train set small enough that all `k^n` noise patterns can be listed.
///
/// The trainer must ignore its seed. `probes` are extra inputs on which
/// the trained classifier is tabulated, so that its law covers more than
/// its behaviour on the train rows.
#[derive(Clone)]
pub struct ExactScenario {
    pub train: LabeledEmbeddings,
    pub probes: Vec<Vec<f64>>,
    pub trainer: Arc<dyn Trainer>,
    pub variant: NoiseVariant,
    pub eta: BigRational,
}

impl std::fmt::Debug for ExactScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactScenario")
            .field("n", &self.train.len())
            .field("k", &self.train.num_classes())
            .field("trainer", &self.trainer.name())
            .field("variant", &self.variant)
            .field("eta", &self.eta.to_string())
            .finish()
    }
}

impl ExactScenario {
    pub fn new(
        train: LabeledEmbeddings,
        probes: Vec<Vec<f64>>,
        trainer: Arc<dyn Trainer>,
        variant: NoiseVariant,
        eta: BigRational,
    ) -> Result<Self> {
        if !(eta.is_positive() && eta < BigRational::one()) {
            return Err(contract(format!("eta must lie in (0, 1), got {eta}")));
        }
        if probes.iter().any(|p| p.len() != train.dim()) {
            return Err(contract("probe dimension differs from the train set"));
        }
        Ok(Self {
            train,
            probes,
            trainer,
            variant,
            eta,
        })
    }

    pub fn eta_f64(&self) -> f64 {
        self.eta.to_f64().unwrap_or(f64::NAN)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.variant, self.eta_f64())
    }

    /// Exact probability of each deviation `0..k` for one sample.
    pub fn deviation_law(&self) -> Vec<BigRational> {
        let k = self.train.num_classes();
        let kr = BigRational::from_integer(k.into());
        let one = BigRational::one();
        let (stay, other) = match self.variant {
            NoiseVariant::UniformAll => (
                &one - &self.eta + &self.eta / &kr,
                &self.eta / &kr,
            ),
            NoiseVariant::UniformOther => (
                &one - &self.eta,
                &self.eta / (kr - &one),
            ),
        };
        let mut law = vec![other; k];
        law[0] = stay;
        law
    }

    /// Exact `E[B]`, the per-sample flip probability.
    pub fn flip_probability(&self) -> BigRational {
        self.deviation_law()
            .into_iter()
            .skip(1)
            .fold(BigRational::zero(), |a, b| a + b)
    }
}
