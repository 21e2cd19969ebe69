//! Randomized and exhaustive certification suites.

use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;

use super::enumerate::{enumerate, ExactQuantities};
use super::scenario::{ExactScenario, ScenarioTrainer};
use crate::data::LabeledEmbeddings;
use crate::error::Result;
use crate::info::{mi_superadditivity_check, pinsker_gap_bound, Joint3};
use crate::io::write_embeddings;
use crate::noise::{NoiseModel, NoiseVariant};
use crate::seed::stream_rng;
use crate::trainers::FiniteHypothesisClass;

const CHAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ChainFailure {
    pub index: usize,
    pub message: String,
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub checked: usize,
    pub failures: Vec<ChainFailure>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random scenario number `index` of the stream keyed by `seed`: `n <= 6`,
/// `k <= 3`, one integer-valued feature, two probe points, UniformOther noise
/// with `eta = m / 20`.
pub fn random_scenario(seed: u64, index: u64) -> Result<(ExactScenario, ScenarioTrainer)> {
    let mut rng = stream_rng(seed, index);
    let n = rng.random_range(1..=6usize);
    let k = rng.random_range(2..=3usize);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3..=3i32) as f64]).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let train = LabeledEmbeddings::from_rows(&rows, labels, k)?;
    let probes = (0..2).map(|_| vec![rng.random_range(-4..=4i32) as f64 + 0.5]).collect();
    let kind = match rng.random_range(0..4u8) {
        0 => ScenarioTrainer::Constant(rng.random_range(0..k)),
        1 => ScenarioTrainer::Majority,
        2 => ScenarioTrainer::Interpolator {
            fallback: rng.random_range(0..k),
        },
        _ => ScenarioTrainer::ThresholdErm,
    };
    let eta = BigRational::new(rng.random_range(1..=18i64).into(), 20.into());
    let trainer = kind.build(&train)?;
    Ok((
        ExactScenario::new(train, probes, trainer, NoiseVariant::UniformOther, eta)?,
        kind,
    ))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    trainer: ScenarioTrainer,
    eta: String,
    noise_model: NoiseVariant,
    probes: &'a [Vec<f64>],
    cdc: f64,
    cpc: f64,
    cmdl: f64,
    memorization_gap: f64,
    thm2_rhs: f64,
    violation: &'a str,
}

fn dump(
    dir: &Path,
    index: usize,
    s: &ExactScenario,
    kind: ScenarioTrainer,
    q: &ExactQuantities,
    violation: &str,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let emb = dir.join(format!("scenario-{index}.emb"));
    write_embeddings(&s.train, &emb)?;
    let side = Sidecar {
        trainer: kind,
        eta: s.eta.to_string(),
        noise_model: s.variant,
        probes: &s.probes,
        cdc: q.cdc,
        cpc: q.cpc,
        cmdl: q.cmdl,
        memorization_gap: q.memorization_gap,
        thm2_rhs: q.thm2_rhs,
        violation,
    };
    let text = serde_json::to_string_pretty(&side)
        .map_err(|e| crate::error::Error::Report(e.to_string()))?;
    fs::write(dir.join(format!("scenario-{index}.json")), text)?;
    Ok(emb)
}

/// Enumerates `count` random scenarios and checks
/// `cdc <= cpc <= cmdl` (to 1e-12) and the memorization bound with the
/// exact flip probability (no tolerance). Violations are written to
/// `dump_dir` when given.
pub fn certify_chain(count: usize, seed: u64, dump_dir: Option<&Path>) -> Result<ChainReport> {
    let mut failures = Vec::new();
    for index in 0..count {
        let (s, kind) = random_scenario(seed, index as u64)?;
        let q = enumerate(&s)?;
        let mut problems = Vec::new();
        if !q.chain_holds(CHAIN_TOL) {
            problems.push(format!(
                "chain violated: cdc={} cpc={} cmdl={}",
                q.cdc, q.cpc, q.cmdl
            ));
        }
        if !q.thm2_holds() {
            problems.push(format!(
                "memorization bound violated: gap={} rhs={}",
                q.memorization_gap, q.thm2_rhs
            ));
        }
        if !problems.is_empty() {
            let message = problems.join("; ");
            let dump = match dump_dir {
                Some(dir) => Some(dump(dir, index, &s, kind, &q, &message)?),
                None => None,
            };
            failures.push(ChainFailure {
                index,
                message,
                dump,
            });
        }
    }
    Ok(ChainReport {
        checked: count,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub checked: usize,
    pub failures: usize,
    /// Largest `lhs - rhs` seen (negative when everything holds strictly).
    pub worst: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Every 2x2 joint on a grid of `1/steps` with `E[B] >= 1/steps`.
pub fn pinsker_grid_suite(steps: u32, tol: f64) -> Result<SuiteReport> {
    let s = steps as f64;
    let mut rep = SuiteReport {
        checked: 0,
        failures: 0,
        worst: f64::NEG_INFINITY,
    };
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                let d = steps - a - b - c;
                if b + d == 0 {
                    continue;
                }
                // rows Z = 0, 1; columns B = 0, 1
                let joint = [[a as f64 / s, b as f64 / s], [c as f64 / s, d as f64 / s]];
                let sides = pinsker_gap_bound(joint)?;
                rep.checked += 1;
                rep.worst = rep.worst.max(sides.lhs - sides.rhs);
                if !sides.holds(tol) {
                    rep.failures += 1;
                }
            }
        }
    }
    Ok(rep)
}

fn random_simplex<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Random joint `p(w | x, y) p(x) p(y)` with every alphabet of size 1 to 3.
pub fn random_independent_joint<R: Rng>(rng: &mut R) -> Joint3 {
    let (nw, nx, ny) = (
        rng.random_range(1..=3usize),
        rng.random_range(1..=3usize),
        rng.random_range(1..=3usize),
    );
    let px = random_simplex(rng, nx);
    let py = random_simplex(rng, ny);
    let cond: Vec<Vec<Vec<f64>>> = (0..nx)
        .map(|_| (0..ny).map(|_| random_simplex(rng, nw)).collect())
        .collect();
    Joint3 {
        p: (0..nw)
            .map(|w| {
                (0..nx)
                    .map(|x| (0..ny).map(|y| cond[x][y][w] * px[x] * py[y]).collect())
                    .collect()
            })
            .collect(),
    }
}

pub fn lemma_a2_suite(count: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, 0);
    let mut rep = SuiteReport {
        checked: 0,
        failures: 0,
        worst: f64::NEG_INFINITY,
    };
    for _ in 0..count {
        let j = random_independent_joint(&mut rng);
        let t = j.terms();
        rep.worst = rep.worst.max(t.with_x + t.with_y - t.joint);
        rep.checked += 1;
        if !mi_superadditivity_check(&j)? {
            rep.failures += 1;
        }
    }
    Ok(rep)
}

/// Threshold ERM on `n` points of a 1-D realizable problem, `draws` noise
/// draws at level `eta`.
pub fn erm_suite(n: usize, eta: f64, draws: usize, seed: u64) -> Result<crate::bounds::ErmRobustness> {
    let mut rng = stream_rng(seed, 0);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    let cut = rng.random_range(0.2..0.8);
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let labels = xs.iter().map(|&x| usize::from(x >= cut)).collect();
    let data = LabeledEmbeddings::from_rows(&rows, labels, 2)?;
    let class = FiniteHypothesisClass::thresholds(&data, 0)?;
    let model = NoiseModel::new(NoiseVariant::UniformOther, eta)?;
    crate::bounds::erm_robustness_check(&data, &class, &model, draws, seed)
}
