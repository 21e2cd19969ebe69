//! JSON report document and plot-ready CSV rows.
//!
//! Every key is always written; undefined values are `null`. Reading a
//! document with a missing key fails.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::bounds::DenominatorMode;
use crate::error::{Error, Result};
use crate::gaps::{AccuracyQuad, GapReport, TrialSummary};
use crate::noise::NoiseVariant;

/// `Option` fields must still be present as keys.
fn nullable<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    eta: f64,
    trials: usize,
    noise_model: NoiseVariant,
    bound_denominator: DenominatorMode,
    train_acc: f64,
    test_acc: f64,
    train_noisy: f64,
    #[serde(deserialize_with = "nullable")]
    ntrain_noisy: Option<f64>,
    robustness_gap: f64,
    #[serde(deserialize_with = "nullable")]
    rationality_gap: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    memorization_gap: Option<f64>,
    generalization_gap: f64,
    #[serde(deserialize_with = "nullable")]
    rrm_bound: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    cdc_nats: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    cpc_nats: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    thm2_bound: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    thm2_bound_capped: Option<f64>,
    base_seed: u64,
    n_train: usize,
    per_trial: Vec<TrialSummary>,
}

impl From<&GapReport> for ReportFile {
    fn from(r: &GapReport) -> Self {
        Self {
            eta: r.eta,
            trials: r.trials,
            noise_model: r.noise_model,
            bound_denominator: r.bound_denominator,
            train_acc: r.accuracies.train,
            test_acc: r.accuracies.test,
            train_noisy: r.accuracies.train_noisy,
            ntrain_noisy: r.accuracies.ntrain_noisy,
            robustness_gap: r.robustness_gap,
            rationality_gap: r.rationality_gap,
            memorization_gap: r.memorization_gap,
            generalization_gap: r.generalization_gap,
            rrm_bound: r.rrm_bound,
            cdc_nats: r.cdc,
            cpc_nats: r.cpc,
            thm2_bound: r.thm2_bound,
            thm2_bound_capped: r.thm2_bound_capped,
            base_seed: r.base_seed,
            n_train: r.n_train,
            per_trial: r.per_trial.clone(),
        }
    }
}

impl From<ReportFile> for GapReport {
    fn from(f: ReportFile) -> Self {
        Self {
            eta: f.eta,
            trials: f.trials,
            accuracies: AccuracyQuad {
                train: f.train_acc,
                test: f.test_acc,
                train_noisy: f.train_noisy,
                ntrain_noisy: f.ntrain_noisy,
            },
            robustness_gap: f.robustness_gap,
            rationality_gap: f.rationality_gap,
            memorization_gap: f.memorization_gap,
            generalization_gap: f.generalization_gap,
            rrm_bound: f.rrm_bound,
            cdc: f.cdc_nats,
            cpc: f.cpc_nats,
            thm2_bound: f.thm2_bound,
            thm2_bound_capped: f.thm2_bound_capped,
            noise_model: f.noise_model,
            bound_denominator: f.bound_denominator,
            base_seed: f.base_seed,
            n_train: f.n_train,
            per_trial: f.per_trial,
        }
    }
}

pub fn report_to_json(report: &GapReport) -> Result<String> {
    serde_json::to_string_pretty(&ReportFile::from(report)).map_err(|e| Error::Report(e.to_string()))
}

pub fn report_from_json(text: &str) -> Result<GapReport> {
    let file: ReportFile = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    let report = GapReport::from(file);
    report.accuracies.validate()?;
    Ok(report)
}

pub fn write_report(report: &GapReport, path: impl AsRef<Path>) -> Result<()> {
    let mut text = report_to_json(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<GapReport> {
    report_from_json(&fs::read_to_string(path)?)
}

/// One stacked-bar entry. Undefined gaps are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub name: String,
    pub generalization_gap: f64,
    pub robustness: f64,
    pub rationality: Option<f64>,
    pub memorization: Option<f64>,
    pub rrm_bound: Option<f64>,
    pub thm2_bound: Option<f64>,
}

pub fn plot_row(name: impl Into<String>, r: &GapReport) -> PlotRow {
    PlotRow {
        name: name.into(),
        generalization_gap: r.generalization_gap,
        robustness: r.robustness_gap,
        rationality: r.rationality_gap,
        memorization: r.memorization_gap,
        rrm_bound: r.rrm_bound,
        thm2_bound: r.thm2_bound,
    }
}

/// Writes one CSV row per entry, optionally ordered by ascending
/// generalization gap.
pub fn write_plot_csv(rows: &[PlotRow], sort: bool, path: impl AsRef<Path>) -> Result<()> {
    let mut rows = rows.to_vec();
    if sort {
        rows.sort_by(|a, b| a.generalization_gap.total_cmp(&b.generalization_gap));
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
