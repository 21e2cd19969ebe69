use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::scenario::ExactScenario;
use crate::error::{contract, Error, Result};
use crate::info::{entropy, mutual_information_of_table};

/// At most `3^10` noise patterns.
pub const ENUMERATION_LIMIT: u128 = 59_049;

/// Every quantity of the noisy experiment, computed without sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactQuantities {
    pub patterns: usize,
    /// Sum of all pattern probabilities (exactly 1 when the law is right).
    pub probability_total: BigRational,
    pub train_clean: BigRational,
    pub train_eta: BigRational,
    /// `E[sum_i Z_i B_i] / E[sum_i B_i]`.
    pub ntrain_eta: BigRational,
    /// `E[B]`.
    pub flip_probability: BigRational,
    /// Law of `(Delta, N)` with the index uniform, `k x k`.
    pub deviation_joint: Vec<Vec<f64>>,
    /// Nats.
    pub cdc: f64,
    pub cpc: f64,
    pub cpc_per_index: Vec<f64>,
    pub cmdl: f64,
    pub memorization_gap: f64,
    /// `sqrt(cdc / 2n) / E[B]`.
    pub thm2_rhs: f64,
    /// `sqrt(cdc / 2n) / eta`.
    pub thm2_rhs_eta: f64,
}

impl ExactQuantities {
    pub fn chain_holds(&self, tol: f64) -> bool {
        self.cdc <= self.cpc + tol && self.cpc <= self.cmdl + tol
    }

    pub fn thm2_holds(&self) -> bool {
        self.memorization_gap <= self.thm2_rhs
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

struct Pattern {
    prob: BigRational,
    deviations: Vec<usize>,
    /// Predictions on the train rows followed by the probes.
    table: Vec<usize>,
}

fn run_pattern(s: &ExactScenario, law: &[BigRational], index: u128) -> Result<Pattern> {
    let n = s.train.len();
    let k = s.train.num_classes();
    let mut rest = index;
    let mut deviations = Vec::with_capacity(n);
    let mut prob = BigRational::one();
    for _ in 0..n {
        let dev = (rest % k as u128) as usize;
        rest /= k as u128;
        prob *= &law[dev];
        deviations.push(dev);
    }
    let labels: Vec<usize> = s
        .train
        .labels()
        .iter()
        .zip(&deviations)
        .map(|(&y, &dev)| (y + dev) % k)
        .collect();
    let clf = s.trainer.fit(&s.train, &labels, 0)?;
    let table: Vec<usize> = s
        .train
        .rows()
        .chain(s.probes.iter().map(Vec::as_slice))
        .map(|x| clf.predict(x))
        .collect();
    if let Some(&p) = table.iter().find(|&&p| p >= k) {
        return Err(contract(format!("classifier predicted class {p} with k={k}")));
    }
    Ok(Pattern {
        prob,
        deviations,
        table,
    })
}

fn table_to_f64(t: &[Vec<BigRational>]) -> Vec<Vec<f64>> {
    t.iter().map(|r| r.iter().map(to_f64).collect()).collect()
}

pub fn enumerate(s: &ExactScenario) -> Result<ExactQuantities> {
    let n = s.train.len();
    let k = s.train.num_classes();
    let patterns = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if patterns > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            patterns,
            limit: ENUMERATION_LIMIT,
        });
    }
    let law = s.deviation_law();
    let outcomes = (0..patterns)
        .into_par_iter()
        .map(|p| run_pattern(s, &law, p))
        .collect::<Result<Vec<Pattern>>>()?;

    let clean = s.trainer.fit(&s.train, s.train.labels(), 0)?;
    let clean_hits = s
        .train
        .rows()
        .zip(s.train.labels())
        .filter(|(x, &y)| clean.predict(x) == y)
        .count();
    let n_big = BigRational::from_integer(BigInt::from(n));

    let zero = BigRational::zero();
    let mut total = zero.clone();
    let mut hits = zero.clone();
    let mut flipped_hits = zero.clone();
    let mut flips = zero.clone();
    // joint of (Delta, N), scaled by n
    let mut dev_joint = vec![vec![zero.clone(); k]; k];
    // per index: joint of (prediction, noisy label)
    let mut per_index = vec![vec![vec![zero.clone(); k]; k]; n];
    let mut law_of_g: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();

    for o in &outcomes {
        total += &o.prob;
        let mut z = 0usize;
        let mut zb = 0usize;
        let mut b = 0usize;
        for (i, (&y, &dev)) in s.train.labels().iter().zip(&o.deviations).enumerate() {
            let pred = o.table[i];
            let correct = pred == y;
            z += usize::from(correct);
            if dev != 0 {
                b += 1;
                zb += usize::from(correct);
            }
            dev_joint[(pred + k - y) % k][dev] += &o.prob;
            per_index[i][pred][(y + dev) % k] += &o.prob;
        }
        hits += &o.prob * BigRational::from_integer(z.into());
        flipped_hits += &o.prob * BigRational::from_integer(zb.into());
        flips += &o.prob * BigRational::from_integer(b.into());
        *law_of_g.entry(o.table.clone()).or_insert_with(|| zero.clone()) += &o.prob;
    }

    let train_eta = &hits / &n_big;
    let ntrain_eta = &flipped_hits / &flips;
    let flip_probability = s.flip_probability();

    let dev_joint: Vec<Vec<BigRational>> = dev_joint
        .into_iter()
        .map(|r| r.into_iter().map(|v| v / &n_big).collect())
        .collect();
    let deviation_joint = table_to_f64(&dev_joint);
    let cdc = n as f64 * mutual_information_of_table(&deviation_joint);
    let cpc_per_index: Vec<f64> = per_index
        .iter()
        .map(|t| mutual_information_of_table(&table_to_f64(t)))
        .collect();
    let cpc = cpc_per_index.iter().sum();
    let g_law: Vec<f64> = law_of_g.values().map(to_f64).collect();
    let cmdl = entropy(&g_law)?;

    let memorization_gap = to_f64(&(&train_eta - &ntrain_eta)).max(0.0);
    let root = (cdc / (2.0 * n as f64)).sqrt();
    Ok(ExactQuantities {
        patterns: outcomes.len(),
        probability_total: total,
        train_clean: BigRational::new(clean_hits.into(), n.into()),
        train_eta,
        ntrain_eta,
        thm2_rhs: root / to_f64(&flip_probability),
        thm2_rhs_eta: root / s.eta_f64(),
        flip_probability,
        deviation_joint,
        cdc,
        cpc,
        cpc_per_index,
        cmdl,
        memorization_gap,
    })
}
