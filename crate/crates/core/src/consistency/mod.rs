//! Consistency of a hypothetically labeled dataset.
//!
//! A labeling is consistent when a regularized classifier trained on it
//! predicts held-out points well. The score is the cross-validated accuracy
//! of an RBF SVM; points labeled by an earlier decision are always kept in
//! the training folds and only the hypothetical points are held out.

mod kmeans;
pub mod svm;

pub use kmeans::{two_means, unsup_baseline, Clustering};
pub use svm::{median_heuristic_gamma, train_rbf_svm, DecisionFunction};

use crate::model::{EngineConfig, Gamma, Meaning};

/// One labeled point borrowed from a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint<'a> {
    pub point: &'a [f64],
    pub label: Meaning,
}

impl<'a> LabeledPoint<'a> {
    pub fn new(point: &'a [f64], label: Meaning) -> Self {
        LabeledPoint { point, label }
    }
}

/// Cross-validated accuracy of an RBF SVM on `data`.
///
/// Stratified k-fold with `config.cv_folds` folds, leave-one-out when fewer
/// than `2 * cv_folds` points are available. Returns 1.0 for fewer than two
/// points or a single class.
pub fn consistency_score(data: &[LabeledPoint<'_>], config: &EngineConfig) -> f64 {
    consistency_score_with_prior(&[], data, config)
}

/// Like [`consistency_score`], with `prior` points added to every training
/// fold and never held out.
pub fn consistency_score_with_prior(
    prior: &[LabeledPoint<'_>],
    data: &[LabeledPoint<'_>],
    config: &EngineConfig,
) -> f64 {
    let all: Vec<LabeledPoint<'_>> = prior.iter().chain(data).copied().collect();
    let has = |m: Meaning| all.iter().any(|p| p.label == m);
    if data.is_empty() || all.len() < 2 || !has(Meaning::Yellow) || !has(Meaning::Grey) {
        return 1.0;
    }

    let gamma = match config.rbf_gamma {
        Gamma::Fixed(g) => g,
        Gamma::Median => {
            let pts: Vec<&[f64]> = all.iter().map(|p| p.point).collect();
            median_heuristic_gamma(&pts)
        }
    };
    let n_all = all.len();
    let mut kernel = vec![0.0; n_all * n_all];
    for i in 0..n_all {
        for j in 0..=i {
            let k = svm::rbf(all[i].point, all[j].point, gamma);
            kernel[i * n_all + j] = k;
            kernel[j * n_all + i] = k;
        }
    }

    let folds = fold_assignment(data, config.cv_folds as usize);
    let n_folds = folds.iter().copied().max().map_or(0, |m| m + 1);
    let offset = prior.len();
    let mut correct = 0.0;
    for fold in 0..n_folds {
        // Indices into `all`.
        let train: Vec<usize> = (0..offset)
            .chain((0..data.len()).filter(|&i| folds[i] != fold).map(|i| i + offset))
            .collect();
        let test: Vec<usize> = (0..data.len())
            .filter(|&i| folds[i] == fold)
            .map(|i| i + offset)
            .collect();
        correct += fold_correct(&all, &kernel, &train, &test, config.svm_c);
    }
    correct / data.len() as f64
}

/// Correct predictions on `test` (an exact-zero decision counts one half).
fn fold_correct(all: &[LabeledPoint<'_>], kernel: &[f64], train: &[usize], test: &[usize], c: f64) -> f64 {
    let n_all = all.len();
    let yellow = train.iter().filter(|&&i| all[i].label == Meaning::Yellow).count();
    if train.is_empty() {
        return 0.5 * test.len() as f64;
    }
    if yellow == 0 || yellow == train.len() {
        let only = all[train[0]].label;
        return test.iter().filter(|&&t| all[t].label == only).count() as f64;
    }
    let y: Vec<f64> = train.iter().map(|&i| all[i].label.sign()).collect();
    let sol = svm::solve_dual(&y, c, |a, b| kernel[train[a] * n_all + train[b]]);
    test.iter()
        .map(|&t| {
            let v: f64 = train
                .iter()
                .enumerate()
                .filter(|(k, _)| sol.alpha[*k] > 0.0)
                .map(|(k, &i)| sol.alpha[k] * y[k] * kernel[i * n_all + t])
                .sum::<f64>()
                - sol.rho;
            let truth = all[t].label.sign();
            if v == 0.0 {
                0.5
            } else if v * truth > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .sum()
}

/// Stratified fold index per point, independent of the order of `data`.
///
/// Within each class points are ordered by a hash of their coordinates and
/// dealt round-robin, so swapping the two labels yields the same partition.
fn fold_assignment(data: &[LabeledPoint<'_>], k: usize) -> Vec<usize> {
    let n = data.len();
    let by_content = |a: &usize, b: &usize| {
        content_hash(data[*a].point)
            .cmp(&content_hash(data[*b].point))
            .then_with(|| lexicographic(data[*a].point, data[*b].point))
    };
    let mut folds = vec![0; n];
    if n < 2 * k {
        // Leave-one-out.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(by_content);
        for (rank, &i) in order.iter().enumerate() {
            folds[i] = rank;
        }
        return folds;
    }
    for class in Meaning::ALL {
        let mut members: Vec<usize> = (0..n).filter(|&i| data[i].label == class).collect();
        members.sort_by(by_content);
        for (rank, &i) in members.iter().enumerate() {
            folds[i] = rank % k;
        }
    }
    folds
}

fn content_hash(point: &[f64]) -> u64 {
    // FNV-1a over the IEEE bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in point {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(points: &[Vec<f64>], labels: &[Meaning]) -> Vec<(Vec<f64>, Meaning)> {
        points.iter().cloned().zip(labels.iter().copied()).collect()
    }

    fn borrow(v: &[(Vec<f64>, Meaning)]) -> Vec<LabeledPoint<'_>> {
        v.iter().map(|(p, l)| LabeledPoint::new(p, *l)).collect()
    }

    #[test]
    fn degenerate_inputs_score_one() {
        let cfg = EngineConfig::default();
        assert_eq!(consistency_score(&[], &cfg), 1.0);
        let one = labeled(&[vec![0.0, 0.0]], &[Meaning::Yellow]);
        assert_eq!(consistency_score(&borrow(&one), &cfg), 1.0);
        let mono = labeled(&[vec![0.0], vec![1.0], vec![2.0]], &[Meaning::Grey; 3]);
        assert_eq!(consistency_score(&borrow(&mono), &cfg), 1.0);
    }

    #[test]
    fn identical_points_mixed_labels_score_at_most_half() {
        let pts = vec![vec![0.3, 0.3]; 6];
        let labels = [
            Meaning::Yellow,
            Meaning::Grey,
            Meaning::Yellow,
            Meaning::Grey,
            Meaning::Yellow,
            Meaning::Grey,
        ];
        let data = labeled(&pts, &labels);
        assert!(consistency_score(&borrow(&data), &EngineConfig::default()) <= 0.5);
    }

    #[test]
    fn fold_sizes_are_stratified() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels: Vec<Meaning> = (0..20)
            .map(|i| if i < 10 { Meaning::Yellow } else { Meaning::Grey })
            .collect();
        let data = labeled(&pts, &labels);
        let folds = fold_assignment(&borrow(&data), 5);
        for f in 0..5 {
            let yellow = (0..10).filter(|&i| folds[i] == f).count();
            let grey = (10..20).filter(|&i| folds[i] == f).count();
            assert_eq!((yellow, grey), (2, 2));
        }
        // Below 2k points: leave-one-out.
        let small = &data[..9];
        let folds = fold_assignment(&borrow(small), 5);
        let mut sorted = folds.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 9);
    }

    #[test]
    fn prior_points_stay_in_training() {
        // Prior says the left is grey; a fresh yellow point on the left is
        // inconsistent with it, a fresh grey one is not.
        let prior_pts: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![if i < 5 { -1.0 } else { 1.0 }, i as f64 * 0.1])
            .collect();
        let prior_labels: Vec<Meaning> = (0..10)
            .map(|i| if i < 5 { Meaning::Grey } else { Meaning::Yellow })
            .collect();
        let prior = labeled(&prior_pts, &prior_labels);
        let fresh_pt = vec![-1.0, 0.25];
        let cfg = EngineConfig::default();
        let good = consistency_score_with_prior(
            &borrow(&prior),
            &[LabeledPoint::new(&fresh_pt, Meaning::Grey)],
            &cfg,
        );
        let bad = consistency_score_with_prior(
            &borrow(&prior),
            &[LabeledPoint::new(&fresh_pt, Meaning::Yellow)],
            &cfg,
        );
        assert_eq!(good, 1.0);
        assert_eq!(bad, 0.0);
    }
}
