//! Synthetic stand-ins for frozen representations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Result};
use crate::seed::stream_rng;

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const AUGMENT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthPreset {
    /// Isotropic unit-variance Gaussians, one per class, with pairwise mean
    /// distance `sep` (in units of the noise standard deviation).
    GaussianClusters { k: usize, d: usize, sep: f64 },
    /// Informative training features, zeroed test features. Every cluster
    /// carries its own label on a `1/k + gap` fraction of its points and the
    /// next class on the rest, so a classifier that sees the features
    /// scores about `1/k + gap` while one that sees only zeros scores `1/k`.
    TrivialRepFixture { gap: f64, k: usize, d: usize, sep: f64 },
    /// One orthogonal one-hot feature per group; a group with margin `m`
    /// holds `(1 + m) / 2` of one class and the rest of the other (`k = 2`).
    /// Least squares without bias then scores each group by its label
    /// fractions, so margins are exact.
    MarginFixture { margins: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub preset: SynthPreset,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub train: LabeledEmbeddings,
    pub test: LabeledEmbeddings,
    /// For the trivial-representation fixture: the test set before its
    /// features were zeroed.
    pub test_raw: Option<LabeledEmbeddings>,
}

pub fn synth(spec: &SynthSpec) -> Result<SynthOutput> {
    if spec.n_train == 0 || spec.n_test == 0 {
        return Err(contract("n_train and n_test must be positive"));
    }
    match &spec.preset {
        SynthPreset::GaussianClusters { k, d, sep } => {
            let means = cluster_means(*k, *d, *sep)?;
            let gen = |n, stream| gaussian_sample(&means, n, *k, spec.seed, stream, |c, _| c);
            Ok(SynthOutput {
                train: gen(spec.n_train, TRAIN_STREAM)?,
                test: gen(spec.n_test, TEST_STREAM)?,
                test_raw: None,
            })
        }
        SynthPreset::TrivialRepFixture { gap, k, d, sep } => {
            let share = 1.0 / *k as f64 + gap;
            if !(*gap > 0.0 && share < 1.0) {
                return Err(contract(format!("gap must lie in (0, 1 - 1/k), got {gap}")));
            }
            let means = cluster_means(*k, *d, *sep)?;
            let gen = |n: usize, stream| {
                let per_cluster = cluster_sizes(n, *k);
                let keep: Vec<usize> = per_cluster
                    .iter()
                    .map(|&m| (share * m as f64).round() as usize)
                    .collect();
                gaussian_sample(&means, n, *k, spec.seed, stream, |c, j| {
                    if j < keep[c] {
                        c
                    } else {
                        (c + 1) % k
                    }
                })
            };
            let train = gen(spec.n_train, TRAIN_STREAM)?;
            let test_raw = gen(spec.n_test, TEST_STREAM)?;
            Ok(SynthOutput {
                train,
                test: test_raw.zeroed_features(),
                test_raw: Some(test_raw),
            })
        }
        SynthPreset::MarginFixture { margins } => Ok(SynthOutput {
            train: margin_fixture(margins, spec.n_train)?,
            test: margin_fixture(margins, spec.n_test)?,
            test_raw: None,
        }),
    }
}

fn cluster_means(k: usize, d: usize, sep: f64) -> Result<Vec<Vec<f64>>> {
    if k < 2 || d == 0 {
        return Err(contract("need k >= 2 and d >= 1"));
    }
    if !(sep >= 0.0) || !sep.is_finite() {
        return Err(contract(format!("separation must be finite and >= 0, got {sep}")));
    }
    if d >= k {
        let scale = sep / std::f64::consts::SQRT_2;
        Ok((0..k)
            .map(|c| {
                let mut m = vec![0.0; d];
                m[c] = scale;
                m
            })
            .collect())
    } else if k == 2 {
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        a[0] = -sep / 2.0;
        b[0] = sep / 2.0;
        Ok(vec![a, b])
    } else {
        Err(contract(format!("{k} equidistant means need d >= {k}, got {d}")))
    }
}

/// Cluster sizes when point `i` goes to cluster `i mod k`.
fn cluster_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// Point `i` is drawn around the mean of cluster `c = i mod k`; its label
/// is `label(c, j)` where `j` is its rank within the cluster.
fn gaussian_sample(
    means: &[Vec<f64>],
    n: usize,
    k: usize,
    seed: u64,
    stream: u64,
    label: impl Fn(usize, usize) -> usize,
) -> Result<LabeledEmbeddings> {
    let d = means[0].len();
    let mut rng = stream_rng(seed, stream);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        for &mu in &means[c] {
            let z: f64 = rng.sample(StandardNormal);
            features.push(mu + z);
        }
        labels.push(label(c, i / k));
    }
    LabeledEmbeddings::new(features, d, labels, k, None)
}

fn margin_fixture(margins: &[f64], n: usize) -> Result<LabeledEmbeddings> {
    let groups = margins.len();
    if groups == 0 || n < groups {
        return Err(contract("margin fixture needs at least one point per group"));
    }
    if margins.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(contract("margins must lie in [0, 1]"));
    }
    let size = n / groups;
    let mut features = Vec::with_capacity(size * groups * groups);
    let mut labels = Vec::with_capacity(size * groups);
    for (g, &m) in margins.iter().enumerate() {
        let major = g % 2;
        let keep = ((1.0 + m) / 2.0 * size as f64).round() as usize;
        for j in 0..size {
            features.extend((0..groups).map(|h| if h == g { 1.0 } else { 0.0 }));
            labels.push(if j < keep { major } else { 1 - major });
        }
    }
    let ids = (0..groups as u32).flat_map(|g| std::iter::repeat_n(g, size)).collect();
    LabeledEmbeddings::new(features, groups, labels, 2, Some(ids))
}

/// `t` jittered copies of every row. Copy `c` of row `i` sits at index
/// `i * t + c`, keeps the clean label, and gets group id `i`.
pub fn augment(data: &LabeledEmbeddings, t: usize, jitter: f64, seed: u64) -> Result<LabeledEmbeddings> {
    if t == 0 {
        return Err(contract("t must be at least 1"));
    }
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(contract("jitter must be finite and >= 0"));
    }
    let n = data.len();
    let mut rng = stream_rng(seed, AUGMENT_STREAM);
    let mut features = Vec::with_capacity(n * t * data.dim());
    let mut labels = Vec::with_capacity(n * t);
    let mut groups = Vec::with_capacity(n * t);
    for (i, (row, &y)) in data.rows().zip(data.labels()).enumerate() {
        for _ in 0..t {
            for &v in row {
                let z: f64 = if jitter > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                features.push(v + jitter * z);
            }
            labels.push(y);
            groups.push(i as u32);
        }
    }
    LabeledEmbeddings::new(features, data.dim(), labels, data.num_classes(), Some(groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_deterministic_and_balanced() {
        let spec = SynthSpec {
            preset: SynthPreset::GaussianClusters { k: 3, d: 4, sep: 5.0 },
            n_train: 30,
            n_test: 9,
            seed: 11,
        };
        let a = synth(&spec).unwrap();
        assert_eq!(a, synth(&spec).unwrap());
        assert_eq!(a.train.class_frequencies(), vec![1.0 / 3.0; 3]);
        assert_ne!(a.train.row(0), a.test.row(0));
    }

    #[test]
    fn means_are_separated_by_sep() {
        let m = cluster_means(3, 5, 10.0).unwrap();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((dist(&m[0], &m[1]) - 10.0).abs() < 1e-12);
        assert!((dist(&m[1], &m[2]) - 10.0).abs() < 1e-12);
        let m2 = cluster_means(2, 1, 4.0).unwrap();
        assert_eq!(m2, vec![vec![-2.0], vec![2.0]]);
        assert!(cluster_means(3, 2, 1.0).is_err());
    }

    #[test]
    fn trivial_fixture_zeroes_test_only() {
        let out = synth(&SynthSpec {
            preset: SynthPreset::TrivialRepFixture { gap: 0.2, k: 2, d: 2, sep: 8.0 },
            n_train: 200,
            n_test: 500,
            seed: 3,
        })
        .unwrap();
        assert!(out.test.features().iter().all(|&v| v == 0.0));
        let raw = out.test_raw.unwrap();
        assert_eq!(raw.labels(), out.test.labels());
        assert_eq!(out.test.class_frequencies(), vec![0.5, 0.5]);
        // cluster 0 (even indices) carries label 0 on 70 of its 100 points
        let own = (0..200).step_by(2).filter(|&i| out.train.labels()[i] == 0).count();
        assert_eq!(own, 70);
    }

    #[test]
    fn margin_fixture_groups() {
        let d = margin_fixture(&[1.0, 0.5], 8).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(), &[0, 0, 0, 0, 1, 1, 1, 0]);
        assert_eq!(d.group_ids().unwrap(), &[0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn augment_identity_and_groups() {
        let base = LabeledEmbeddings::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1], 2).unwrap();
        let same = augment(&base, 1, 0.0, 9).unwrap();
        assert_eq!(same.features(), base.features());
        assert_eq!(same.labels(), base.labels());
        assert_eq!(same.group_ids().unwrap(), &[0, 1]);

        let aug = augment(&base, 10, 0.5, 9).unwrap();
        assert_eq!(aug.len(), 20);
        for g in 0..2u32 {
            let members: Vec<usize> = (0..20).filter(|&i| aug.group_ids().unwrap()[i] == g).collect();
            assert_eq!(members.len(), 10);
            assert!(members.iter().all(|&i| aug.labels()[i] == base.labels()[g as usize]));
        }
        assert!(augment(&base, 0, 0.0, 0).is_err());
    }
}
