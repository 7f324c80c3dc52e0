//! Ranking and classification metrics for binary node labels.
//!
//! * AUC is the Mann–Whitney statistic: the probability that a random
//!   positive scores above a random negative, ties counting one half.
//! * AP is rank based: precision at each positive in descending-score order,
//!   averaged over positives. Equal scores keep their original index order.
//! * Macro-F1 thresholds scores at `threshold` (positive when `score ≥
//!   threshold`) and averages the per-class F1, with 0/0 taken as 0.

use alloc::string::String;
use alloc::vec::Vec;

use alloc::collections::BTreeSet;

use crate::graph::{Fold, WeightedGraph};
use crate::linalg::Matrix;
use crate::math;
use crate::model::{Hipgnn, SpectralInputs};
use crate::objectives::{train, ObjectiveError, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("metric is undefined when only one class is present")]
    SingleClass,
    #[error("average precision needs at least one positive")]
    NoPositives,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("no reports to summarize")]
    Empty,
}

fn validate(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFinite(i));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    let (pos, neg) = validate(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks (1-based) over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn f1_macro(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64, MetricError> {
    let (pos, neg) = validate(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    // F1 = 2TP / (2TP + FP + FN); the 0/0 case only arises with TP = 0.
    let f1 = |tp: usize, fp: usize, fneg: usize| {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    Ok(0.5 * (f1(tp, fp, fneg) + f1(tn, fneg, fp)))
}

pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    let (pos, _) = validate(scores, labels)?;
    if pos == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort: equal scores stay in index order.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if labels[k] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / pos as f64)
}

/// One evaluation of a score vector on a node subset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub f1_macro: f64,
    pub ap: f64,
    pub threshold: f64,
    pub fold: usize,
    /// Which node subset was scored, e.g. `"test"`.
    pub split: String,
    /// Training epoch the scores came from, when applicable.
    pub epoch: Option<usize>,
}

impl EvalReport {
    pub fn compute(
        scores: &[f64],
        labels: &[bool],
        threshold: f64,
        fold: usize,
        split: impl Into<String>,
    ) -> Result<Self, MetricError> {
        Ok(Self {
            auc: auc(scores, labels)?,
            f1_macro: f1_macro(scores, labels, threshold)?,
            ap: average_precision(scores, labels)?,
            threshold,
            fold,
            split: split.into(),
            epoch: None,
        })
    }
}

/// Metric used to pick the retained checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestMetric {
    Auc,
    F1,
    #[default]
    Ap,
}

impl BestMetric {
    pub fn of(self, r: &EvalReport) -> f64 {
        match self {
            BestMetric::Auc => r.auc,
            BestMetric::F1 => r.f1_macro,
            BestMetric::Ap => r.ap,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BestMetric::Auc => "auc",
            BestMetric::F1 => "f1",
            BestMetric::Ap => "ap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricTriple {
    pub auc: f64,
    pub f1_macro: f64,
    pub ap: f64,
}

/// Per-fold reports with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CvSummary {
    pub reports: Vec<EvalReport>,
    pub mean: MetricTriple,
    pub std: MetricTriple,
}

pub fn summarize(reports: Vec<EvalReport>) -> Result<CvSummary, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::Empty);
    }
    let stat = |f: fn(&EvalReport) -> f64| {
        let xs: Vec<f64> = reports.iter().map(f).collect();
        let (m, v) = math::mean_var(&xs);
        (m, math::sqrt(v))
    };
    let (auc_m, auc_s) = stat(|r| r.auc);
    let (f1_m, f1_s) = stat(|r| r.f1_macro);
    let (ap_m, ap_s) = stat(|r| r.ap);
    Ok(CvSummary {
        reports,
        mean: MetricTriple {
            auc: auc_m,
            f1_macro: f1_m,
            ap: ap_m,
        },
        std: MetricTriple {
            auc: auc_s,
            f1_macro: f1_s,
            ap: ap_s,
        },
    })
}

/// Seed used for fold `fold` of a cross-validation run.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    crate::rng::mix_seed(seed, fold as u64)
}

/// Train once per fold and collect the test report of each fold's retained
/// checkpoint. Fold `k` trains with [`fold_seed`]`(cfg.seed, k)`.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    model: &Hipgnn,
    inputs: &SpectralInputs,
    graph: &WeightedGraph,
    features: &Matrix,
    folds: &[Fold],
    link_exclusion: &BTreeSet<(usize, usize)>,
    cfg: &TrainConfig,
) -> Result<CvSummary, ObjectiveError> {
    let mut reports = Vec::with_capacity(folds.len());
    for (k, fold) in folds.iter().enumerate() {
        let fold_cfg = TrainConfig {
            seed: fold_seed(cfg.seed, k),
            ..cfg.clone()
        };
        let outcome = train(model, inputs, graph, features, fold, link_exclusion, &fold_cfg)?;
        let mut report = outcome.best.test;
        report.fold = k;
        reports.push(report);
    }
    Ok(summarize(reports)?)
}
