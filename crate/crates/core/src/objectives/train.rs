use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{
    classification_loss, confidence_loss, interaction_loss, total_loss, BayesVars, ClassWeighting,
    LossScheme, LossWeights, ObjectiveError, Reduction,
};
use crate::autodiff::{Adam, AdamConfig, ParamStore, Tape, Tensor};
use crate::graph::{Fold, Label, WeightedGraph};
use crate::linalg::Matrix;
use crate::metrics::{BestMetric, EvalReport, MetricTriple};
use crate::model::{Hipgnn, SpectralInputs};
use crate::rng;

/// Parameter names of the learnable bayesian loss weights.
pub const BAYES_PARAMS: [&str; 3] = ["loss.alpha", "loss.beta", "loss.gamma"];

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub scheme: LossScheme,
    /// `α` of the empirical scheme.
    pub alpha: f64,
    pub class_weighting: ClassWeighting,
    pub reduction: Reduction,
    /// Fraction of edges visible to the link and confidence losses.
    pub edge_train_ratio: f64,
    /// Decision threshold for macro-F1.
    pub threshold: f64,
    /// Test metric that selects the retained checkpoint.
    pub best_metric: BestMetric,
    /// When set, only parameters whose name starts with one of these
    /// prefixes are updated.
    pub trainable: Option<Vec<String>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.01,
            seed: 42,
            scheme: LossScheme::Empirical,
            alpha: 0.01,
            class_weighting: ClassWeighting::Inverse,
            reduction: Reduction::Mean,
            edge_train_ratio: 0.8,
            threshold: 0.5,
            best_metric: BestMetric::Ap,
            trainable: None,
        }
    }
}

/// Pairs scored by the link and confidence losses: train-visible edges
/// followed by the same number of sampled non-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    pub pairs: Vec<(usize, usize)>,
    /// 1 for edges, 0 for sampled non-edges.
    pub interaction_targets: Vec<f64>,
    /// Edge weight for edges, 0 for sampled non-edges.
    pub confidence_targets: Vec<f64>,
    pub positives: usize,
}

/// Sample `round(ratio · E)` edges (at least one) as train-visible and draw
/// as many non-edges, never hitting any edge of `g` or `exclusion`.
pub fn build_link_set(
    g: &WeightedGraph,
    ratio: f64,
    seed: u64,
    exclusion: &BTreeSet<(usize, usize)>,
) -> Result<LinkSet, ObjectiveError> {
    let edges = g.edges();
    if edges.is_empty() {
        return Err(ObjectiveError::EmptyPairs("link set"));
    }
    let keep = (crate::math::round(ratio * edges.len() as f64) as usize).clamp(1, edges.len());
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.shuffle(&mut rng::seeded(rng::mix_seed(seed, 1)));
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    let negatives = g.sample_negative_edges(keep, rng::mix_seed(seed, 2), exclusion)?;
    let mut pairs = Vec::with_capacity(2 * keep);
    let mut interaction_targets = Vec::with_capacity(2 * keep);
    let mut confidence_targets = Vec::with_capacity(2 * keep);
    for &e in &chosen {
        let edge = &edges[e];
        pairs.push((edge.source, edge.target));
        interaction_targets.push(1.0);
        confidence_targets.push(edge.weight);
    }
    for p in negatives {
        pairs.push(p);
        interaction_targets.push(0.0);
        confidence_targets.push(0.0);
    }
    Ok(LinkSet {
        pairs,
        interaction_targets,
        confidence_targets,
        positives: keep,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub loss_node: f64,
    pub loss_link: f64,
    pub loss_weight: f64,
    pub total: f64,
    pub train: MetricTriple,
    pub test: MetricTriple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestCheckpoint {
    pub epoch: usize,
    /// Parameters whose forward pass produced the recorded metrics.
    pub params: ParamStore,
    pub train: EvalReport,
    pub test: EvalReport,
    /// Test-node probabilities at the best epoch, in `fold.test` order.
    pub test_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best: BestCheckpoint,
    pub final_params: ParamStore,
    pub link_pairs: usize,
}

fn labels_of(labels: &[Label], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| labels[i] == Label::Positive).collect()
}

fn triple(r: &EvalReport) -> MetricTriple {
    MetricTriple {
        auc: r.auc,
        f1_macro: r.f1_macro,
        ap: r.ap,
    }
}

/// Full-graph training: each epoch runs the forward pass, scores train and
/// test nodes, backpropagates the combined loss and takes one Adam step.
/// The checkpoint with the best test metric (AP by default, first
/// occurrence) is retained.
///
/// `inputs` comes from [`Hipgnn::prepare`] and is reused for every epoch.
#[allow(clippy::too_many_arguments)]
pub fn train(
    model: &Hipgnn,
    inputs: &SpectralInputs,
    graph: &WeightedGraph,
    features: &Matrix,
    fold: &Fold,
    link_exclusion: &BTreeSet<(usize, usize)>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ObjectiveError> {
    let labels = graph.labels().ok_or(crate::graph::GraphError::MissingLabels)?;
    if fold.train.is_empty() {
        return Err(ObjectiveError::EmptyTrainSet);
    }
    let weights = LossWeights::for_scheme(cfg.scheme, cfg.alpha)?;
    let links = build_link_set(graph, cfg.edge_train_ratio, cfg.seed, link_exclusion)?;
    let train_labels = labels_of(labels, &fold.train);
    let test_labels = labels_of(labels, &fold.test);

    let mut params = model.init_params(cfg.seed);
    if cfg.scheme == LossScheme::Bayesian {
        for (name, v) in BAYES_PARAMS.iter().zip([weights.alpha, weights.beta, weights.gamma_w]) {
            params.insert(*name, Tensor::scalar(v));
        }
    }
    let mut adam = Adam::new(AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    });
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<BestCheckpoint> = None;

    for epoch in 1..=cfg.epochs {
        let mut tape = Tape::new();
        let vars = params.attach(&mut tape);
        let fwd = model.forward(&mut tape, &vars, inputs, features, &links.pairs)?;
        let ln = classification_loss(&mut tape, fwd.node_prob, labels, &fold.train, cfg.class_weighting, cfg.reduction)?;
        let ll = interaction_loss(
            &mut tape,
            fwd.interaction_prob.expect("pairs are non-empty"),
            &links.interaction_targets,
            cfg.reduction,
        )?;
        let lw = confidence_loss(
            &mut tape,
            fwd.confidence.expect("pairs are non-empty"),
            &links.confidence_targets,
            cfg.reduction,
        )?;
        let bayes = if cfg.scheme == LossScheme::Bayesian {
            Some(BayesVars {
                alpha: vars.get(BAYES_PARAMS[0])?,
                beta: vars.get(BAYES_PARAMS[1])?,
                gamma: vars.get(BAYES_PARAMS[2])?,
            })
        } else {
            None
        };
        let total = total_loss(&mut tape, [ln, ll, lw], &weights, bayes)?;
        let scalar = |v| tape.value(v).item().unwrap_or(f64::NAN);
        let (l_n, l_l, l_w, l_total) = (scalar(ln), scalar(ll), scalar(lw), scalar(total));
        let probs = tape.value(fwd.node_prob).data();
        if ![l_n, l_l, l_w, l_total].iter().all(|v| v.is_finite()) || probs.iter().any(|p| !p.is_finite()) {
            log::warn!("non-finite loss at epoch {epoch}; aborting");
            return Err(ObjectiveError::NonFinite {
                epoch,
                last_finite: Box::new(params),
                history,
            });
        }
        let train_scores: Vec<f64> = fold.train.iter().map(|&i| probs[i]).collect();
        let test_scores: Vec<f64> = fold.test.iter().map(|&i| probs[i]).collect();
        let mut train_report = EvalReport::compute(&train_scores, &train_labels, cfg.threshold, 0, "train")?;
        let mut test_report = EvalReport::compute(&test_scores, &test_labels, cfg.threshold, 0, "test")?;
        train_report.epoch = Some(epoch);
        test_report.epoch = Some(epoch);
        history.push(EpochRecord {
            epoch,
            loss_node: l_n,
            loss_link: l_l,
            loss_weight: l_w,
            total: l_total,
            train: triple(&train_report),
            test: triple(&test_report),
        });
        if best
            .as_ref()
            .is_none_or(|b| cfg.best_metric.of(&test_report) > cfg.best_metric.of(&b.test))
        {
            best = Some(BestCheckpoint {
                epoch,
                params: params.clone(),
                train: train_report,
                test: test_report,
                test_scores,
            });
        }

        tape.backward(total)?;
        let mut grads = params.gradients(&tape, &vars);
        if let Some(prefixes) = &cfg.trainable {
            grads.retain(|name, _| prefixes.iter().any(|p| name.starts_with(p.as_str())));
        }
        let before = params.clone();
        adam.step(&mut params, &grads)?;
        if !params.is_finite() {
            log::warn!("non-finite parameters after epoch {epoch}; aborting");
            return Err(ObjectiveError::NonFinite {
                epoch,
                last_finite: Box::new(before),
                history,
            });
        }
    }

    let best = best.ok_or(ObjectiveError::EmptyTrainSet)?;
    Ok(TrainOutcome {
        history,
        best,
        final_params: params,
        link_pairs: links.pairs.len(),
    })
}
