//! Exhaustive enumeration of the noise sample space for tiny scenarios,
//! giving exact values for every quantity the estimators approximate.

mod certify;
mod enumerate;
mod scenario;

pub use certify::{
    certify_chain, erm_suite, lemma_a2_suite, pinsker_grid_suite, random_scenario, ChainFailure,
    ChainReport, SuiteReport,
};
pub use enumerate::{enumerate, ExactQuantities, ENUMERATION_LIMIT};
pub use scenario::{ExactScenario, ScenarioTrainer};
