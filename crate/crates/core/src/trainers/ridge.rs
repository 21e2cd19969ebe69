//! L2-regularized one-hot least squares.
//!
//! Minimizes `sum_i ||W z_i - e_{y_i}||^2 + lambda ||W||^2` where `z_i` is the
//! (optionally standardized, optionally bias-augmented) representation. The
//! minimizer solves `(Z^T Z + lambda I) W^T = Z^T Y`, factorized by Cholesky.

use nalgebra::DMatrix;

use super::{argmax, Classifier, Trainer};
use crate::data::LabeledEmbeddings;
use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub fit_bias: bool,
    pub standardize: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            fit_bias: true,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(data: &LabeledEmbeddings) -> Self {
        let n = data.len() as f64;
        let d = data.dim();
        let mut mean = vec![0.0; d];
        for x in data.rows() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for x in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }
}

/// Affine scores per class; prediction is the arg-max with ties to the
/// smallest class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// `p x k`, where `p = d (+1 with bias)`; column `j` scores class `j`.
    coef: DMatrix<f64>,
    fit_bias: bool,
    standardizer: Option<Standardizer>,
}

impl LinearClassifier {
    /// Builds a classifier from explicit per-class weight rows
    /// (`weights[j]` has length `d`, or `d + 1` with the bias last).
    pub fn from_weights(weights: &[Vec<f64>], fit_bias: bool) -> Result<Self> {
        let k = weights.len();
        let p = weights.first().map_or(0, Vec::len);
        if k < 2 || p == 0 || weights.iter().any(|w| w.len() != p) {
            return Err(contract("weights must be k >= 2 rows of equal non-zero length"));
        }
        let coef = DMatrix::from_fn(p, k, |l, j| weights[j][l]);
        Ok(Self {
            coef,
            fit_bias,
            standardizer: None,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.coef.ncols()
    }

    /// Weight matrix as `k` rows (bias last when fitted).
    pub fn weights(&self) -> Vec<Vec<f64>> {
        (0..self.coef.ncols())
            .map(|j| self.coef.column(j).iter().copied().collect())
            .collect()
    }

    fn design_row(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match &self.standardizer {
            Some(s) => out.extend(
                x.iter()
                    .zip(&s.mean)
                    .zip(&s.scale)
                    .map(|((v, m), sc)| (v - m) / sc),
            ),
            None => out.extend_from_slice(x),
        }
        if self.fit_bias {
            out.push(1.0);
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.coef.nrows());
        self.design_row(x, &mut z);
        (0..self.coef.ncols())
            .map(|j| self.coef.column(j).iter().zip(&z).map(|(w, v)| w * v).sum())
            .collect()
    }
}

impl Classifier for LinearClassifier {
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }
}

/// Regularized normal equations `(A, B)` with `A = Z^T Z + lambda I` and
/// `B = Z^T Y_onehot`, plus the standardizer used to build `Z`.
pub(crate) fn normal_equations(
    data: &LabeledEmbeddings,
    labels: &[usize],
    config: &RidgeConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Option<Standardizer>)> {
    data.check_labels(labels)?;
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(contract(format!("lambda must be finite and >= 0, got {}", config.lambda)));
    }
    if data.features().iter().any(|v| !v.is_finite()) {
        return Err(contract("features must be finite"));
    }
    let standardizer = config.standardize.then(|| Standardizer::fit(data));
    let probe = LinearClassifier {
        coef: DMatrix::zeros(0, 0),
        fit_bias: config.fit_bias,
        standardizer: standardizer.clone(),
    };
    let p = data.dim() + usize::from(config.fit_bias);
    let k = data.num_classes();
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut b = DMatrix::<f64>::zeros(p, k);
    let mut z = Vec::with_capacity(p);
    for (x, &y) in data.rows().zip(labels) {
        probe.design_row(x, &mut z);
        for r in 0..p {
            let zr = z[r];
            if zr == 0.0 {
                continue;
            }
            for c in r..p {
                a[(r, c)] += zr * z[c];
            }
            b[(r, y)] += zr;
        }
    }
    for r in 0..p {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
        a[(r, r)] += config.lambda;
    }
    Ok((a, b, standardizer))
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = max * a.nrows() as f64 * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Exact minimizer of the one-hot least-squares objective.
pub fn ridge_fit(
    data: &LabeledEmbeddings,
    labels: &[usize],
    config: &RidgeConfig,
) -> Result<LinearClassifier> {
    let (a, b, standardizer) = normal_equations(data, labels, config)?;
    let dim = a.nrows();
    if config.lambda == 0.0 {
        let rank = numerical_rank(&a);
        if rank < dim {
            return Err(Error::Singular { rank, dim });
        }
    }
    let chol = match a.clone().cholesky() {
        Some(c) => c,
        None => {
            return Err(Error::Singular {
                rank: numerical_rank(&a),
                dim,
            })
        }
    };
    let mut coef = chol.solve(&b);
    // one step of iterative refinement
    let residual = &b - &a * &coef;
    coef += chol.solve(&residual);
    Ok(LinearClassifier {
        coef,
        fit_bias: config.fit_bias,
        standardizer,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RidgeTrainer(pub RidgeConfig);

impl Trainer for RidgeTrainer {
    fn fit(
        &self,
        data: &LabeledEmbeddings,
        labels: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(ridge_fit(data, labels, &self.0)?))
    }

    fn name(&self) -> String {
        format!("ridge(lambda={})", self.0.lambda)
    }
}

/// Distribution of top-score minus runner-up over a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginProfile {
    margins: Vec<f64>,
}

impl MarginProfile {
    pub fn from_scores<I, S>(scores: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[f64]>,
    {
        let mut margins = Vec::new();
        for s in scores {
            let s = s.as_ref();
            if s.len() < 2 {
                return Err(contract("margins need at least two classes"));
            }
            let top = argmax(s);
            let runner_up = s
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != top)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            margins.push(s[top] - runner_up);
        }
        if margins.is_empty() {
            return Err(contract("margin profile of an empty set"));
        }
        margins.sort_by(f64::total_cmp);
        Ok(Self { margins })
    }

    /// Fraction of points whose margin is at least `gamma`.
    pub fn fraction_at_least(&self, gamma: f64) -> f64 {
        let below = self.margins.partition_point(|&m| m < gamma);
        (self.margins.len() - below) as f64 / self.margins.len() as f64
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }
}

pub fn margin_profile(clf: &LinearClassifier, data: &LabeledEmbeddings) -> Result<MarginProfile> {
    MarginProfile::from_scores(data.rows().map(|x| clf.scores(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::predict_all;
    use proptest::prelude::*;

    fn residual_ok(data: &LabeledEmbeddings, cfg: &RidgeConfig) -> bool {
        let clf = ridge_fit(data, data.labels(), cfg).unwrap();
        let (a, b, _) = normal_equations(data, data.labels(), cfg).unwrap();
        let r = (&a * &clf.coef - &b).norm();
        r <= 1e-8 * (1.0 + b.norm())
    }

    #[test]
    fn two_point_exact_solve() {
        // Z = [-1, 1]^T, Y = [[1,0],[0,1]]: Z^T Z = 2, Z^T Y = [-1, 1],
        // so W = [-1/2, 1/2] and scores at -1 are (1/2, -1/2).
        let data = LabeledEmbeddings::from_rows(&[vec![-1.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let cfg = RidgeConfig {
            lambda: 0.0,
            fit_bias: false,
            standardize: false,
        };
        let clf = ridge_fit(&data, data.labels(), &cfg).unwrap();
        let w = clf.weights();
        assert!((w[0][0] + 0.5).abs() < 1e-12 && (w[1][0] - 0.5).abs() < 1e-12);
        assert_eq!(clf.scores(&[-1.0]), vec![0.5, -0.5]);
        assert!(residual_ok(&data, &cfg));
        assert_eq!(predict_all(&clf, &data), vec![0, 1]);
    }

    #[test]
    fn huge_lambda_predicts_class_zero() {
        let data = LabeledEmbeddings::from_rows(
            &[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -2.0]],
            vec![1, 2, 1],
            3,
        )
        .unwrap();
        let cfg = RidgeConfig {
            lambda: 1e12,
            ..RidgeConfig::default()
        };
        let clf = ridge_fit(&data, data.labels(), &cfg).unwrap();
        assert!(clf.weights().iter().flatten().all(|w| w.abs() < 1e-10));
        // scores are tiny but not tied; zeroing tiny weights shows the tie rule
        let zero = LinearClassifier::from_weights(&vec![vec![0.0; 3]; 3], true).unwrap();
        assert_eq!(predict_all(&zero, &data), vec![0, 0, 0]);
    }

    #[test]
    fn singular_at_zero_lambda_reports_rank() {
        let data = LabeledEmbeddings::from_rows(
            &[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]],
            vec![0, 1, 0],
            2,
        )
        .unwrap();
        let cfg = RidgeConfig {
            lambda: 0.0,
            fit_bias: false,
            standardize: false,
        };
        match ridge_fit(&data, data.labels(), &cfg) {
            Err(Error::Singular { rank, dim }) => assert_eq!((rank, dim), (1, 2)),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn single_class_fits_perfectly() {
        let data =
            LabeledEmbeddings::from_rows(&[vec![0.1], vec![2.0], vec![-3.0]], vec![0, 0, 0], 2)
                .unwrap();
        let clf = ridge_fit(&data, data.labels(), &RidgeConfig::default()).unwrap();
        assert_eq!(predict_all(&clf, &data), vec![0, 0, 0]);
    }

    #[test]
    fn rejects_non_finite_features() {
        let data = LabeledEmbeddings::from_rows(&[vec![f64::NAN], vec![1.0]], vec![0, 1], 2).unwrap();
        assert!(ridge_fit(&data, data.labels(), &RidgeConfig::default()).is_err());
    }

    #[test]
    fn margin_profile_boundaries() {
        // 80% of points at margin 0.5, 20% at margin 0.1
        let mut scores = vec![vec![0.75, 0.25]; 8];
        scores.extend(vec![vec![0.45, 0.55]; 2]);
        let prof = MarginProfile::from_scores(&scores).unwrap();
        assert_eq!(prof.fraction_at_least(0.0), 1.0);
        assert!((prof.fraction_at_least(0.3) - 0.8).abs() < 1e-15);
        let flat = MarginProfile::from_scores(vec![vec![0.2, 0.2, 0.2]; 5]).unwrap();
        assert_eq!(flat.fraction_at_least(0.0), 1.0);
        assert_eq!(flat.fraction_at_least(1e-9), 0.0);
        assert!(MarginProfile::from_scores(vec![vec![1.0]]).is_err());
    }

    fn rows_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
        (3usize..25).prop_flat_map(|n| {
            (
                proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), n),
                proptest::collection::vec(0usize..3, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residual_invariant((rows, labels) in rows_strategy(), standardize in any::<bool>()) {
            let data = LabeledEmbeddings::from_rows(&rows, labels, 3).unwrap();
            let cfg = RidgeConfig { lambda: 1e-3, fit_bias: true, standardize };
            prop_assert!(residual_ok(&data, &cfg));
        }

        #[test]
        fn permutation_invariant((rows, labels) in rows_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let data = LabeledEmbeddings::from_rows(&rows, labels, 3).unwrap();
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut crate::seed::stream_rng(seed, 0));
            let perm = data.select(&order).unwrap();
            let cfg = RidgeConfig { lambda: 1e-2, ..RidgeConfig::default() };
            let a = ridge_fit(&data, data.labels(), &cfg).unwrap().weights();
            let b = ridge_fit(&perm, perm.labels(), &cfg).unwrap().weights();
            for (wa, wb) in a.iter().flatten().zip(b.iter().flatten()) {
                prop_assert!((wa - wb).abs() <= 1e-10 * (1.0 + wa.abs()));
            }
        }

        #[test]
        fn margins_monotone(scores in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..30),
                            g1 in 0.0f64..3.0, g2 in 0.0f64..3.0) {
            let prof = MarginProfile::from_scores(&scores).unwrap();
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assert!(prof.fraction_at_least(lo) >= prof.fraction_at_least(hi));
        }
    }
}
