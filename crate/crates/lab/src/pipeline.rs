//! Training and evaluation steps shared by the commands and the tests.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hipgnn_core::graph::Fold;
use hipgnn_core::metrics::{fold_seed, summarize, CvSummary, EvalReport};
use hipgnn_core::model::{Hipgnn, SpectralInputs};
use hipgnn_core::objectives::{train, EpochRecord, TrainConfig, TrainOutcome};
use hipgnn_core::spectral::decompose_graph;
use hipgnn_core::{Label, Matrix, WeightedGraph};

use crate::checkpoint::{Checkpoint, CheckpointMeta};
use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::io;
use crate::run::csv_string;

/// A loaded graph with everything the model needs precomputed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: WeightedGraph,
    pub features: Matrix,
    pub exclusion: BTreeSet<(usize, usize)>,
    pub model: Hipgnn,
    pub inputs: SpectralInputs,
}

impl Prepared {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let graph = cfg.data.load()?;
        let exclusion = match &cfg.data.exclusion {
            Some(p) => io::read_exclusion(p, &graph)?,
            None => BTreeSet::new(),
        };
        Self::new(cfg, graph, exclusion)
    }

    pub fn new(cfg: &RunConfig, graph: WeightedGraph, exclusion: BTreeSet<(usize, usize)>) -> Result<Self> {
        let features = graph.feature_matrix();
        let model = Hipgnn::new(cfg.model.clone(), graph.node_count(), features.cols())?;
        let decomposition = decompose_graph(&graph, cfg.spectral.laplacian, None)?;
        let inputs = model.prepare(&decomposition)?;
        Ok(Self {
            graph,
            features,
            exclusion,
            model,
            inputs,
        })
    }

    /// Rebuild the model a checkpoint was trained with on `graph`.
    pub fn from_checkpoint(ck: &Checkpoint, graph: WeightedGraph) -> Result<Self> {
        let features = graph.feature_matrix();
        if graph.node_count() != ck.meta.node_count || features.cols() != ck.meta.feature_dim {
            return Err(LabError::Data(format!(
                "checkpoint expects {} nodes with {} features, graph has {} nodes with {}",
                ck.meta.node_count,
                ck.meta.feature_dim,
                graph.node_count(),
                features.cols()
            )));
        }
        let model = Hipgnn::new(ck.meta.model.clone(), graph.node_count(), features.cols())?;
        let decomposition = decompose_graph(&graph, ck.meta.laplacian, None)?;
        let inputs = model.prepare(&decomposition)?;
        Ok(Self {
            graph,
            features,
            exclusion: BTreeSet::new(),
            model,
            inputs,
        })
    }

    pub fn single_split(&self, cfg: &RunConfig) -> Result<Fold> {
        let mut folds = self.graph.make_splits(&cfg.split.spec(1))?;
        Ok(folds.remove(0))
    }

    pub fn train(&self, fold: &Fold, cfg: &TrainConfig) -> Result<TrainOutcome> {
        Ok(train(&self.model, &self.inputs, &self.graph, &self.features, fold, &self.exclusion, cfg)?)
    }

    pub fn predict(&self, ck: &Checkpoint) -> Result<Vec<f64>> {
        Ok(self.model.predict(&ck.params, &self.inputs, &self.features)?)
    }

    pub fn checkpoint(&self, cfg: &RunConfig, outcome: &TrainOutcome) -> Checkpoint {
        Checkpoint {
            meta: CheckpointMeta {
                node_count: self.graph.node_count(),
                feature_dim: self.features.cols(),
                laplacian: cfg.spectral.laplacian,
                model: cfg.model.clone(),
                epoch: outcome.best.epoch,
            },
            params: outcome.best.params.clone(),
        }
    }

    pub fn report(&self, scores: &[f64], nodes: &[usize], threshold: f64, split: &str) -> Result<EvalReport> {
        let labels = self.graph.labels().ok_or(hipgnn_core::GraphError::MissingLabels)?;
        let s: Vec<f64> = nodes.iter().map(|&i| scores[i]).collect();
        let l: Vec<bool> = nodes.iter().map(|&i| labels[i] == Label::Positive).collect();
        Ok(EvalReport::compute(&s, &l, threshold, 0, split)?)
    }
}

pub fn history_csv(history: &[EpochRecord]) -> Result<String> {
    csv_string(
        &[
            "epoch", "L_n", "L_l", "L_w", "total", "train_auc", "train_f1", "train_ap", "test_auc", "test_f1", "test_ap",
        ],
        history.iter().map(|r| {
            [
                r.epoch as f64,
                r.loss_node,
                r.loss_link,
                r.loss_weight,
                r.total,
                r.train.auc,
                r.train.f1_macro,
                r.train.ap,
                r.test.auc,
                r.test.f1_macro,
                r.test.ap,
            ]
            .map(|v| v.to_string())
        }),
    )
}

/// All nodes sorted by descending score (node index breaks ties).
pub fn scores_csv(g: &WeightedGraph, scores: &[f64], fold: Option<&Fold>) -> Result<String> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let train: BTreeSet<usize> = fold.map(|f| f.train.iter().copied().collect()).unwrap_or_default();
    let test: BTreeSet<usize> = fold.map(|f| f.test.iter().copied().collect()).unwrap_or_default();
    let labels = g.labels();
    csv_string(
        &["node", "score", "label", "split"],
        order.into_iter().map(|i| {
            let label = labels
                .and_then(|l| l[i].as_target())
                .map(|t| (t as u8).to_string())
                .unwrap_or_default();
            let split = if train.contains(&i) {
                "train"
            } else if test.contains(&i) {
                "test"
            } else {
                ""
            };
            [g.node_name(i), scores[i].to_string(), label, split.to_string()]
        }),
    )
}

/// Outcome of one cross-validation fold.
#[derive(Debug, Clone)]
pub struct FoldRun {
    pub fold: usize,
    pub outcome: TrainOutcome,
}

/// Train every fold, `jobs` at a time. Fold `k` uses the seed
/// `fold_seed(cfg.train.seed, k)`, so results do not depend on `jobs`.
pub fn cross_validate(prepared: &Prepared, folds: &[Fold], cfg: &TrainConfig, jobs: usize) -> Result<(CvSummary, Vec<FoldRun>)> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrainOutcome>>>> = Mutex::new((0..folds.len()).map(|_| None).collect());
    let work = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        if k >= folds.len() {
            break;
        }
        let fold_cfg = TrainConfig {
            seed: fold_seed(cfg.seed, k),
            ..cfg.clone()
        };
        let r = prepared.train(&folds[k], &fold_cfg);
        results.lock().expect("no worker panicked while holding the lock")[k] = Some(r);
    };
    std::thread::scope(|s| {
        for _ in 1..jobs.clamp(1, folds.len().max(1)) {
            s.spawn(work);
        }
        work();
    });
    let mut runs = Vec::with_capacity(folds.len());
    for (k, r) in results.into_inner().expect("workers finished").into_iter().enumerate() {
        let outcome = r.expect("every fold was claimed")?;
        runs.push(FoldRun { fold: k, outcome });
    }
    let reports = runs
        .iter()
        .map(|r| EvalReport {
            fold: r.fold,
            ..r.outcome.best.test.clone()
        })
        .collect();
    Ok((summarize(reports)?, runs))
}
