//! Discrete entropy and mutual information (natural log, nats).
//!
//! Estimates are plug-in (empirical frequencies) unless the Miller-Madow
//! correction is requested. Bits are a display concern: divide by `ln 2`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::noise::NoisyTrial;

/// Residues below this magnitude are clamped silently.
const CLAMP_LOG_THRESHOLD: f64 = 1e-9;

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(contract("distribution has negative or non-finite entries"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(contract(format!("distribution sums to {total}, not 1")));
    }
    Ok(entropy_unchecked(dist))
}

fn entropy_unchecked(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

fn entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I, total: f64) -> f64 {
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

fn clamp_nonnegative(value: f64, what: &str) -> f64 {
    if value < 0.0 {
        if -value > CLAMP_LOG_THRESHOLD {
            log::warn!("clamping negative {what} {value:e} to zero");
        }
        0.0
    } else {
        value
    }
}

/// `rows x cols` table of co-occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointHistogram {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl JointHistogram {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            counts: vec![0; rows * cols],
        }
    }

    pub fn from_counts(counts: &[Vec<u64>]) -> Result<Self> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || counts.iter().any(|r| r.len() != cols) {
            return Err(contract("count table must be a non-empty rectangle"));
        }
        Ok(Self {
            rows,
            cols,
            counts: counts.iter().flatten().copied().collect(),
        })
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.counts[a * self.cols + b] += 1;
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.cols + b]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_marginal(&self) -> Vec<u64> {
        self.counts
            .chunks_exact(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|b| (0..self.rows).map(|a| self.get(a, b)).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::new(self.cols, self.rows);
        for a in 0..self.rows {
            for b in 0..self.cols {
                t.counts[b * self.rows + a] = self.get(a, b);
            }
        }
        t
    }

    /// Plug-in entropies `(H(row), H(col), H(joint))`.
    pub fn entropies(&self) -> (f64, f64, f64) {
        let total = self.total() as f64;
        (
            entropy_of_counts(self.row_marginal(), total),
            entropy_of_counts(self.col_marginal(), total),
            entropy_of_counts(self.counts.iter().copied(), total),
        )
    }
}

/// Plug-in mutual information `H(row) + H(col) - H(joint)`, clamped at 0.
/// An empty histogram carries no information and yields 0.
pub fn mutual_information(hist: &JointHistogram) -> f64 {
    if hist.total() == 0 {
        return 0.0;
    }
    let (hr, hc, hj) = hist.entropies();
    clamp_nonnegative(hr + hc - hj, "plug-in mutual information")
}

/// Plug-in MI with the Miller-Madow correction applied to each entropy,
/// clamped at 0.
pub fn mutual_information_miller_madow(hist: &JointHistogram) -> f64 {
    let total = hist.total();
    if total == 0 {
        return 0.0;
    }
    let (hr, hc, hj) = hist.entropies();
    let occupied = |v: &[u64]| v.iter().filter(|&&c| c > 0).count() as f64;
    let mr = occupied(&hist.row_marginal());
    let mc = occupied(&hist.col_marginal());
    let mj = occupied(&hist.counts);
    let correction = ((mr - 1.0) + (mc - 1.0) - (mj - 1.0)) / (2.0 * total as f64);
    (hr + hc - hj + correction).max(0.0)
}

/// MI of an exact joint probability table (rows x cols), in nats.
pub fn mutual_information_of_table(table: &[Vec<f64>]) -> f64 {
    let cols = table.first().map_or(0, Vec::len);
    let row: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..cols).map(|b| table.iter().map(|r| r[b]).sum()).collect();
    let joint: Vec<f64> = table.iter().flatten().copied().collect();
    clamp_nonnegative(
        entropy_unchecked(&row) + entropy_unchecked(&col) - entropy_unchecked(&joint),
        "mutual information",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    PlugIn,
    PlugInMillerMadow,
    /// Computed by exhaustive enumeration, never from samples.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityEstimate {
    /// Nats.
    pub value: f64,
    pub estimator: Estimator,
    pub sample_count: usize,
    /// Per-index terms (prediction complexity only).
    pub per_index: Option<Vec<f64>>,
}

fn check_trials(trials: &[NoisyTrial], clean_labels: &[usize], k: usize) -> Result<()> {
    if k < 2 {
        return Err(contract("need at least 2 classes"));
    }
    if clean_labels.iter().any(|&y| y >= k) {
        return Err(contract("label outside 0..k"));
    }
    for t in trials {
        for (what, len) in [
            ("trial predictions", t.train_predictions.len()),
            ("trial deviations", t.noise_deviations.len()),
        ] {
            if len != clean_labels.len() {
                return Err(Error::LengthMismatch {
                    what,
                    got: len,
                    expected: clean_labels.len(),
                });
            }
        }
    }
    Ok(())
}

/// Pooled `(Delta, N)` histogram over every trial and index, where
/// `Delta = prediction - y` and `N = noisy - y`, both mod `k`.
pub fn deviation_histogram(
    trials: &[NoisyTrial],
    clean_labels: &[usize],
    k: usize,
) -> Result<JointHistogram> {
    check_trials(trials, clean_labels, k)?;
    let mut hist = JointHistogram::new(k, k);
    for t in trials {
        for ((&p, &y), &n) in t.train_predictions.iter().zip(clean_labels).zip(&t.noise_deviations) {
            hist.add((p + k - y) % k, n);
        }
    }
    Ok(hist)
}

/// Deviation complexity estimate `n * I(Delta; N)` with the index drawn
/// uniformly and pooled over trials.
pub fn cdc_estimate(
    trials: &[NoisyTrial],
    clean_labels: &[usize],
    k: usize,
) -> Result<ComplexityEstimate> {
    if trials.is_empty() {
        return Err(Error::InsufficientTrials { got: 0, need: 1 });
    }
    let hist = deviation_histogram(trials, clean_labels, k)?;
    Ok(ComplexityEstimate {
        value: clean_labels.len() as f64 * mutual_information(&hist),
        estimator: Estimator::PlugIn,
        sample_count: hist.total() as usize,
        per_index: None,
    })
}

/// Prediction complexity estimate `sum_i I(prediction_i; noisy_i)` with one
/// histogram per index built across trials.
pub fn cpc_estimate(
    trials: &[NoisyTrial],
    clean_labels: &[usize],
    k: usize,
    estimator: Estimator,
) -> Result<ComplexityEstimate> {
    if trials.len() < 2 {
        return Err(Error::InsufficientTrials {
            got: trials.len(),
            need: 2,
        });
    }
    check_trials(trials, clean_labels, k)?;
    let mi = match estimator {
        Estimator::PlugIn => mutual_information,
        Estimator::PlugInMillerMadow => mutual_information_miller_madow,
        Estimator::Exact => return Err(contract("exact complexities come from enumeration only")),
    };
    let per_index: Vec<f64> = clean_labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mut hist = JointHistogram::new(k, k);
            for t in trials {
                hist.add(t.train_predictions[i], (y + t.noise_deviations[i]) % k);
            }
            mi(&hist)
        })
        .collect();
    Ok(ComplexityEstimate {
        value: per_index.iter().sum(),
        estimator,
        sample_count: trials.len() * clean_labels.len(),
        per_index: Some(per_index),
    })
}

/// Distribution-level complexity: the average over several datasets.
pub fn average_complexity(estimates: &[ComplexityEstimate]) -> Result<ComplexityEstimate> {
    let first = estimates
        .first()
        .ok_or_else(|| contract("nothing to average"))?;
    Ok(ComplexityEstimate {
        value: estimates.iter().map(|e| e.value).sum::<f64>() / estimates.len() as f64,
        estimator: first.estimator,
        sample_count: estimates.iter().map(|e| e.sample_count).sum(),
        per_index: None,
    })
}

/// Both sides of `|E[Z] - E[Z | B=1]| <= sqrt(I(Z;B) / 2) / E[B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerSides {
    pub lhs: f64,
    pub rhs: f64,
    pub mutual_information: f64,
}

impl PinskerSides {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// `joint[z][b]` is `P(Z = z, B = b)` for Bernoulli `Z` (rows), `B` (cols).
pub fn pinsker_gap_bound(joint: [[f64; 2]; 2]) -> Result<PinskerSides> {
    let flat = [joint[0][0], joint[0][1], joint[1][0], joint[1][1]];
    if flat.iter().any(|&p| !(p >= 0.0)) || (flat.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(contract("joint must be a probability table"));
    }
    let e_b = joint[0][1] + joint[1][1];
    if e_b <= 0.0 {
        return Err(contract("E[B] must be positive"));
    }
    let e_z = joint[1][0] + joint[1][1];
    let e_z_given_b = joint[1][1] / e_b;
    let table = vec![joint[0].to_vec(), joint[1].to_vec()];
    let mi = mutual_information_of_table(&table);
    Ok(PinskerSides {
        lhs: (e_z - e_z_given_b).abs(),
        rhs: (mi / 2.0).sqrt() / e_b,
        mutual_information: mi,
    })
}

/// Joint law `p[w][x][y]` of three discrete variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint3 {
    pub p: Vec<Vec<Vec<f64>>>,
}

/// The three mutual informations of a [`Joint3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperadditivityTerms {
    pub joint: f64,
    pub with_x: f64,
    pub with_y: f64,
}

impl Joint3 {
    fn dims(&self) -> (usize, usize, usize) {
        let w = self.p.len();
        let x = self.p.first().map_or(0, Vec::len);
        let y = self.p.first().and_then(|r| r.first()).map_or(0, Vec::len);
        (w, x, y)
    }

    pub fn terms(&self) -> SuperadditivityTerms {
        let (nw, nx, ny) = self.dims();
        // W against the pair (X, Y)
        let pair: Vec<Vec<f64>> = self
            .p
            .iter()
            .map(|plane| plane.iter().flatten().copied().collect())
            .collect();
        let wx: Vec<Vec<f64>> = (0..nw)
            .map(|w| (0..nx).map(|x| self.p[w][x].iter().sum()).collect())
            .collect();
        let wy: Vec<Vec<f64>> = (0..nw)
            .map(|w| (0..ny).map(|y| (0..nx).map(|x| self.p[w][x][y]).sum()).collect())
            .collect();
        SuperadditivityTerms {
            joint: mutual_information_of_table(&pair),
            with_x: mutual_information_of_table(&wx),
            with_y: mutual_information_of_table(&wy),
        }
    }

    /// Largest deviation of `p(x, y)` from `p(x) p(y)`.
    pub fn dependence(&self) -> f64 {
        let (_, nx, ny) = self.dims();
        let pxy: Vec<Vec<f64>> = (0..nx)
            .map(|x| (0..ny).map(|y| self.p.iter().map(|plane| plane[x][y]).sum()).collect())
            .collect();
        let px: Vec<f64> = pxy.iter().map(|r| r.iter().sum()).collect();
        let py: Vec<f64> = (0..ny).map(|y| pxy.iter().map(|r| r[y]).sum()).collect();
        let mut worst = 0.0f64;
        for x in 0..nx {
            for y in 0..ny {
                worst = worst.max((pxy[x][y] - px[x] * py[y]).abs());
            }
        }
        worst
    }
}

/// Checks `I(W; X, Y) >= I(W; X) + I(W; Y) - 1e-12` for independent `X, Y`.
pub fn mi_superadditivity_check(joint: &Joint3) -> Result<bool> {
    let (nw, nx, ny) = joint.dims();
    if nw == 0 || nx == 0 || ny == 0 {
        return Err(contract("empty joint"));
    }
    if joint
        .p
        .iter()
        .any(|plane| plane.len() != nx || plane.iter().any(|r| r.len() != ny))
    {
        return Err(contract("joint is not rectangular"));
    }
    let total: f64 = joint.p.iter().flatten().flatten().sum();
    if (total - 1.0).abs() > 1e-9 || joint.p.iter().flatten().flatten().any(|&v| !(v >= 0.0)) {
        return Err(contract("joint is not a probability table"));
    }
    let dep = joint.dependence();
    if dep > 1e-12 {
        return Err(Error::Precondition(format!(
            "X and Y are dependent (max |p(x,y) - p(x)p(y)| = {dep:e})"
        )));
    }
    let t = joint.terms();
    Ok(t.joint >= t.with_x + t.with_y - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    /// Direct `sum p ln(p / (p_row p_col))`, kept independent of the
    /// entropy-difference route used by the implementation.
    fn direct_mi(table: &[Vec<f64>]) -> f64 {
        let row: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
        let cols = table[0].len();
        let col: Vec<f64> = (0..cols).map(|b| table.iter().map(|r| r[b]).sum()).collect();
        let mut acc = 0.0;
        for (a, r) in table.iter().enumerate() {
            for (b, &p) in r.iter().enumerate() {
                if p > 0.0 {
                    acc += p * (p / (row[a] * col[b])).ln();
                }
            }
        }
        acc
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((entropy(&[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert!((entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn mi_examples() {
        let product = JointHistogram::from_counts(&[vec![6, 12, 2], vec![9, 18, 3]]).unwrap();
        assert!(mutual_information(&product) <= 1e-12);
        let diag = JointHistogram::from_counts(&[vec![50, 0], vec![0, 50]]).unwrap();
        assert!((mutual_information(&diag) - LN_2).abs() < 1e-15);

        let table = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
        let counts = JointHistogram::from_counts(&[vec![400_000, 100_000], vec![100_000, 400_000]]).unwrap();
        // 0.8 ln 1.6 + 0.2 ln 0.4, evaluated by hand
        let by_hand = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert!((direct_mi(&table) - by_hand).abs() < 1e-15);
        assert!((mutual_information(&counts) - by_hand).abs() < 1e-4);
    }

    #[test]
    fn pinsker_examples() {
        let ind = pinsker_gap_bound([[0.3, 0.2], [0.3, 0.2]]).unwrap();
        assert!(ind.lhs.abs() < 1e-15 && ind.rhs < 1e-7);
        let s = pinsker_gap_bound([[0.4, 0.1], [0.1, 0.4]]).unwrap();
        assert!((s.lhs - 0.3).abs() < 1e-12);
        let i = direct_mi(&[vec![0.4, 0.1], vec![0.1, 0.4]]);
        assert!((s.rhs - (i / 2.0).sqrt() / 0.5).abs() < 1e-12);
        assert!(s.holds(0.0));
        assert!(pinsker_gap_bound([[0.5, 0.0], [0.5, 0.0]]).is_err());
    }

    #[test]
    fn superadditivity_examples() {
        // W = (X, Y) with fair independent bits
        let mut p = vec![vec![vec![0.0; 2]; 2]; 4];
        for x in 0..2 {
            for y in 0..2 {
                p[2 * x + y][x][y] = 0.25;
            }
        }
        let j = Joint3 { p };
        let t = j.terms();
        assert!((t.joint - 2.0 * LN_2).abs() < 1e-12);
        assert!((t.with_x - LN_2).abs() < 1e-12 && (t.with_y - LN_2).abs() < 1e-12);
        assert!(mi_superadditivity_check(&j).unwrap());

        let constant = Joint3 {
            p: vec![vec![vec![0.25; 2]; 2]],
        };
        assert_eq!(constant.terms().joint, 0.0);
        assert!(mi_superadditivity_check(&constant).unwrap());

        // X = Y is dependent
        let dep = Joint3 {
            p: vec![vec![vec![0.5, 0.0], vec![0.0, 0.5]]],
        };
        assert!(matches!(
            mi_superadditivity_check(&dep),
            Err(Error::Precondition(_))
        ));
    }

    fn trial(preds: Vec<usize>, devs: Vec<usize>) -> NoisyTrial {
        NoisyTrial {
            trial_index: 0,
            flip_mask: devs.iter().map(|&d| d != 0).collect(),
            noise_deviations: devs,
            train_predictions: preds,
        }
    }

    #[test]
    fn cdc_perfect_memorization_equals_noise_entropy() {
        // predictions equal noisy labels: Delta = N
        let clean = vec![0, 1, 1, 0];
        let devs = [vec![0, 1, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 0, 0]];
        let trials: Vec<NoisyTrial> = devs
            .iter()
            .map(|d| {
                let preds = clean.iter().zip(d).map(|(&y, &n)| (y + n) % 2).collect();
                trial(preds, d.clone())
            })
            .collect();
        let est = cdc_estimate(&trials, &clean, 2).unwrap();
        let p = 2.0 / 12.0;
        let h = entropy(&[p, 1.0 - p]).unwrap();
        assert!((est.value - 4.0 * h).abs() < 1e-12);
        assert_eq!(est.sample_count, 12);

        let cpc = cpc_estimate(&trials, &clean, 2, Estimator::PlugIn).unwrap();
        let per = cpc.per_index.unwrap();
        // index 0 and 1 flip once in three trials, others never
        let h3 = entropy(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!((per[0] - h3).abs() < 1e-12 && (per[1] - h3).abs() < 1e-12);
        assert_eq!(&per[2..], &[0.0, 0.0]);
    }

    #[test]
    fn cpc_needs_two_trials() {
        let t = trial(vec![0], vec![0]);
        assert!(matches!(
            cpc_estimate(&[t], &[0], 2, Estimator::PlugIn),
            Err(Error::InsufficientTrials { got: 1, need: 2 })
        ));
        assert!(cdc_estimate(&[], &[0], 2).is_err());
    }

    #[test]
    fn constant_trainer_has_near_zero_complexity() {
        use crate::noise::{run_noisy_trials, NoiseModel, NoiseVariant};
        use crate::trainers::ConstantTrainer;
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let data = crate::data::LabeledEmbeddings::from_rows(&rows, (0..100).map(|i| i % 3).collect(), 3).unwrap();
        let m = NoiseModel::new(NoiseVariant::UniformAll, 0.2).unwrap();
        let k_trials = 200;
        let trials = run_noisy_trials(&ConstantTrainer(2), &data, &m, k_trials, 5).unwrap();
        let cdc = cdc_estimate(&trials, data.labels(), 3).unwrap();
        // Delta depends only on the clean label, so I(Delta; N) is the
        // plug-in residue of independent variables
        let samples = cdc.sample_count as f64;
        assert!(cdc.value / 100.0 <= 4.0 / (2.0 * samples) * 4.0, "{}", cdc.value);

        let mm = cpc_estimate(&trials, data.labels(), 3, Estimator::PlugInMillerMadow).unwrap();
        let mean = mm.value / 100.0;
        assert!(mean.abs() <= 4.0 / (2.0 * k_trials as f64), "{mean}");
    }

    proptest! {
        #[test]
        fn mi_bounds_and_symmetry(counts in proptest::collection::vec(proptest::collection::vec(0u64..40, 3), 1..5)) {
            let hist = JointHistogram::from_counts(&counts).unwrap();
            prop_assume!(hist.total() > 0);
            let mi = mutual_information(&hist);
            let (hr, hc, _) = hist.entropies();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= hr.min(hc) + 1e-12);
            prop_assert!((mi - mutual_information(&hist.transpose())).abs() <= 1e-12);
        }

        #[test]
        fn product_histogram_has_no_information(r in proptest::collection::vec(1u64..20, 1..5),
                                                c in proptest::collection::vec(1u64..20, 1..5)) {
            let counts: Vec<Vec<u64>> = r.iter().map(|&a| c.iter().map(|&b| a * b).collect()).collect();
            let hist = JointHistogram::from_counts(&counts).unwrap();
            prop_assert!(mutual_information(&hist) <= 1e-12);
        }

        #[test]
        fn entropy_route_matches_direct_formula(v in proptest::collection::vec(0.0f64..1.0, 6)) {
            let s: f64 = v.iter().sum();
            prop_assume!(s > 1e-6);
            let table: Vec<Vec<f64>> = v.chunks(3).map(|r| r.iter().map(|x| x / s).collect()).collect();
            prop_assert!((mutual_information_of_table(&table) - direct_mi(&table).max(0.0)).abs() <= 1e-12);
        }
    }
}
