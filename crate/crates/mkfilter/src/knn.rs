//! k-nearest-neighbor classification over selected metric features.
//!
//! Two multi-feature strategies:
//!
//! * **merging** — rank neighbors once under the product metric
//!   `d(u, v) = (Σ_j d_j²(u_j, v_j))^(1/2)` over the selected features;
//! * **voting** — run a separate k-NN per selected feature and combine the
//!   per-feature predictions by unweighted majority.
//!
//! Neighbor ties at equal distance break toward the smaller training-row
//! index, and vote ties break toward the configured tie label (default
//! `-1`), so predictions are a pure function of the inputs.

use crate::dataset::{Label, LabeledDataset, MetricObject};
use crate::error::{Error, Result};
use crate::metrics::{object_distance, pairwise_distances, MetricKind};
use crate::rng::substream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAG_EVAL_SPLIT: u64 = 5;

/// Neighbor-combination strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Merging,
    Voting,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merging" => Ok(Strategy::Merging),
            "voting" => Ok(Strategy::Voting),
            other => Err(Error::BadParam {
                name: "strategy",
                reason: format!("expected 'merging' or 'voting', got '{other}'"),
            }),
        }
    }
}

/// k-NN configuration over a nonempty selected feature set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub strategy: Strategy,
    /// Feature indices the classifier uses.
    pub selected: Vec<usize>,
    /// Label awarded on exact vote ties.
    pub tie_break: Label,
}

impl KnnConfig {
    pub fn new(k: usize, strategy: Strategy, selected: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadParam {
                name: "k",
                reason: "k must be at least 1".into(),
            });
        }
        if selected.is_empty() {
            return Err(Error::BadSet("selected feature set is empty".into()));
        }
        Ok(Self {
            k,
            strategy,
            selected,
            tie_break: Label::Neg,
        })
    }

    pub fn with_tie_break(mut self, tie_break: Label) -> Self {
        self.tie_break = tie_break;
        self
    }
}

/// Confusion counts and derived metrics, with `+1` as the positive class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ClassificationReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let total = tp + fp + tn + fn_;
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self {
            accuracy: ratio(tp + tn, total),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            true_pos: tp,
            false_pos: fp,
            true_neg: tn,
            false_neg: fn_,
        }
    }

    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: predicted.len(),
            });
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Pos, Label::Pos) => tp += 1,
                (Label::Neg, Label::Pos) => fp += 1,
                (Label::Neg, Label::Neg) => tn += 1,
                (Label::Pos, Label::Neg) => fn_ += 1,
            }
        }
        Ok(Self::from_counts(tp, fp, tn, fn_))
    }
}

/// Product metric over aligned feature tuples: the Euclidean combination of
/// the per-feature distances. A metric whenever every component is.
pub fn product_distance(
    u: &[MetricObject],
    v: &[MetricObject],
    metrics: &[MetricKind],
) -> Result<f64> {
    if u.len() != v.len() || u.len() != metrics.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len().max(metrics.len()),
        });
    }
    let mut sum = 0.0;
    for ((a, b), &m) in u.iter().zip(v).zip(metrics) {
        let d = object_distance(m, a.as_ref(), b.as_ref())?;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Majority vote among the k nearest of `dists` (distance to each training
/// row, in training order). Distance ties break toward the smaller index.
fn k_nearest_vote(dists: &[f64], labels: &[Label], k: usize, tie_break: Label) -> Label {
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_unstable_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    let mut score = 0i64;
    for &i in order.iter().take(k) {
        score += labels[i].sign() as i64;
    }
    match score.cmp(&0) {
        std::cmp::Ordering::Greater => Label::Pos,
        std::cmp::Ordering::Less => Label::Neg,
        std::cmp::Ordering::Equal => tie_break,
    }
}

fn majority_over_features(votes: &[Label], tie_break: Label) -> Label {
    let score: i64 = votes.iter().map(|l| l.sign() as i64).sum();
    match score.cmp(&0) {
        std::cmp::Ordering::Greater => Label::Pos,
        std::cmp::Ordering::Less => Label::Neg,
        std::cmp::Ordering::Equal => tie_break,
    }
}

fn check_train(cfg: &KnnConfig, train_rows: usize, p: usize) -> Result<()> {
    if train_rows < cfg.k {
        return Err(Error::TooFewNeighbors {
            got: train_rows,
            k: cfg.k,
        });
    }
    if let Some(&bad) = cfg.selected.iter().find(|&&j| j >= p) {
        return Err(Error::BadSet(format!(
            "selected feature {bad} out of range for p = {p}"
        )));
    }
    Ok(())
}

/// Predict labels for out-of-sample test rows.
///
/// Each test row carries one object per selected feature, in the order of
/// `cfg.selected`. Training columns must store objects (a precomputed
/// distance matrix cannot embed new points).
pub fn knn_predict(
    train: &LabeledDataset,
    cfg: &KnnConfig,
    test_rows: &[Vec<MetricObject>],
) -> Result<Vec<Label>> {
    check_train(cfg, train.n(), train.p())?;
    let labels = train.labels();
    let n = train.n();
    let mut out = Vec::with_capacity(test_rows.len());
    for row in test_rows {
        if row.len() != cfg.selected.len() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: cfg.selected.len(),
            });
        }
        // Distances from this test row to every training row, per feature.
        let mut per_feature = Vec::with_capacity(cfg.selected.len());
        for (slot, &j) in cfg.selected.iter().enumerate() {
            let col = train.column(j);
            let mut dists = Vec::with_capacity(n);
            for i in 0..n {
                let obj = col.object(i).ok_or(Error::KindMismatch {
                    metric: col.metric().name(),
                    kind: "precomputed",
                })?;
                dists.push(object_distance(col.metric(), row[slot].as_ref(), obj)?);
            }
            per_feature.push(dists);
        }
        let label = match cfg.strategy {
            Strategy::Merging => {
                let merged: Vec<f64> = (0..n)
                    .map(|i| {
                        per_feature
                            .iter()
                            .map(|d| d[i] * d[i])
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect();
                k_nearest_vote(&merged, labels, cfg.k, cfg.tie_break)
            }
            Strategy::Voting => {
                let votes: Vec<Label> = per_feature
                    .iter()
                    .map(|d| k_nearest_vote(d, labels, cfg.k, cfg.tie_break))
                    .collect();
                majority_over_features(&votes, cfg.tie_break)
            }
        };
        out.push(label);
    }
    Ok(out)
}

/// Predict the rows `test_idx` of a dataset from the rows `train_idx`, using
/// per-feature pairwise distances computed once on the whole dataset. Works
/// for every column kind, including precomputed distance matrices.
pub fn knn_predict_within(
    ds: &LabeledDataset,
    cfg: &KnnConfig,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<Vec<Label>> {
    check_train(cfg, train_idx.len(), ds.p())?;
    let dists = cfg
        .selected
        .iter()
        .map(|&j| pairwise_distances(ds.column(j)).map_err(|e| e.in_column(j)))
        .collect::<Result<Vec<_>>>()?;
    predict_within_precomputed(ds, cfg, &dists, train_idx, test_idx)
}

/// The engine behind [`knn_predict_within`], reusing distance matrices the
/// caller already holds (aligned with `cfg.selected`).
pub(crate) fn predict_within_precomputed(
    ds: &LabeledDataset,
    cfg: &KnnConfig,
    dists: &[crate::metrics::DistanceMatrix],
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<Vec<Label>> {
    let mut train = train_idx.to_vec();
    train.sort_unstable();
    let train_labels: Vec<Label> = train.iter().map(|&i| ds.labels()[i]).collect();
    let predict_one = |&t: &usize| -> Label {
        match cfg.strategy {
            Strategy::Merging => {
                let merged: Vec<f64> = train
                    .iter()
                    .map(|&r| {
                        dists
                            .iter()
                            .map(|d| {
                                let x = d.get(t, r);
                                x * x
                            })
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect();
                k_nearest_vote(&merged, &train_labels, cfg.k, cfg.tie_break)
            }
            Strategy::Voting => {
                let votes: Vec<Label> = dists
                    .iter()
                    .map(|d| {
                        let per: Vec<f64> = train.iter().map(|&r| d.get(t, r)).collect();
                        k_nearest_vote(&per, &train_labels, cfg.k, cfg.tie_break)
                    })
                    .collect();
                majority_over_features(&votes, cfg.tie_break)
            }
        }
    };
    Ok(test_idx.par_iter().map(predict_one).collect())
}

/// Mean and standard error of one metric across replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(values: &[f64]) -> MetricStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    MetricStats { mean, se }
}

/// Replicated train/test evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub accuracy: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
    pub replicates: usize,
}

/// Repeatedly split the dataset into stratified train/test parts, classify
/// the test part, and report mean ± standard error of accuracy, recall, and
/// F1. Per-feature distance matrices are computed once and shared by all
/// replicates.
pub fn evaluate_split(
    ds: &LabeledDataset,
    cfg: &KnnConfig,
    train_fraction: f64,
    seed: u64,
    replicates: usize,
) -> Result<EvaluationSummary> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::BadParam {
            name: "train_fraction",
            reason: format!("must lie strictly inside (0, 1), got {train_fraction}"),
        });
    }
    if replicates == 0 {
        return Err(Error::BadParam {
            name: "replicates",
            reason: "need at least one replicate".into(),
        });
    }
    check_train(cfg, ds.n(), ds.p())?;
    let dists = cfg
        .selected
        .iter()
        .map(|&j| pairwise_distances(ds.column(j)).map_err(|e| e.in_column(j)))
        .collect::<Result<Vec<_>>>()?;

    let pos: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels()[i] == Label::Pos).collect();
    let neg: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels()[i] == Label::Neg).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::TooFewPerClass {
            class: if pos.len() < 2 { 1 } else { -1 },
            got: pos.len().min(neg.len()),
            need: 2,
        });
    }
    let take = |count: usize| -> usize {
        ((count as f64 * train_fraction).round() as usize).clamp(1, count - 1)
    };
    let (train_pos, train_neg) = (take(pos.len()), take(neg.len()));

    let reports: Vec<Result<ClassificationReport>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, &[TAG_EVAL_SPLIT, r as u64]);
            let mut pos = pos.clone();
            let mut neg = neg.clone();
            use rand::seq::SliceRandom;
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut train: Vec<usize> = pos[..train_pos]
                .iter()
                .chain(&neg[..train_neg])
                .copied()
                .collect();
            let mut test: Vec<usize> = pos[train_pos..]
                .iter()
                .chain(&neg[train_neg..])
                .copied()
                .collect();
            train.sort_unstable();
            test.sort_unstable();
            if train.len() < cfg.k {
                return Err(Error::TooFewNeighbors {
                    got: train.len(),
                    k: cfg.k,
                });
            }
            let predicted = predict_within_precomputed(ds, cfg, &dists, &train, &test)?;
            let truth: Vec<Label> = test.iter().map(|&i| ds.labels()[i]).collect();
            ClassificationReport::from_predictions(&truth, &predicted)
        })
        .collect();

    let mut acc = Vec::with_capacity(replicates);
    let mut rec = Vec::with_capacity(replicates);
    let mut f1 = Vec::with_capacity(replicates);
    for r in reports {
        let r = r?;
        acc.push(r.accuracy);
        rec.push(r.recall);
        f1.push(r.f1);
    }
    Ok(EvaluationSummary {
        accuracy: mean_se(&acc),
        recall: mean_se(&rec),
        f1: mean_se(&f1),
        replicates,
    })
}
