//! Training losses, their combination, and the training loop.
//!
//! All three losses are negative log-likelihoods or squared errors to be
//! minimized, averaged over their items by default ([`Reduction::Mean`]).
//! Probabilities are clamped to `[1e−7, 1 − 1e−7]` before taking logs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::graph::{GraphError, Label};
use crate::metrics::MetricError;
use crate::model::{ModelError, PROB_EPS};
use crate::spectral::SpectralError;

mod train;

pub use train::{
    build_link_set, train, BestCheckpoint, EpochRecord, LinkSet, TrainConfig, TrainOutcome,
    BAYES_PARAMS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("cannot weight classes: training split has {positives} positives and {negatives} negatives")]
    ClassWeight { positives: usize, negatives: usize },
    #[error("node {0} is in the training split but has no label")]
    UnlabeledTrainNode(usize),
    #[error("{0}: empty pair set")]
    EmptyPairs(&'static str),
    #[error("{what}: {got} values for {expected} items")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("loss weight alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("bayesian loss weight `{name}` must be positive, got {value}")]
    NonPositiveWeight { name: String, value: f64 },
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite {
        epoch: usize,
        /// Parameters before the failing epoch.
        last_finite: alloc::boxed::Box<crate::autodiff::ParamStore>,
        history: Vec<EpochRecord>,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossScheme {
    Empirical,
    Average,
    Bayesian,
}

/// Weights on `L_n`, `L_l`, `L_w`. For the bayesian scheme the fields hold
/// the initial values of the learnable `α_l, β_l, γ_l`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub scheme: LossScheme,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_w: f64,
}

impl LossWeights {
    /// `β = 2/3 (1 − α)`, `γ_w = 1/3 (1 − α)`.
    pub fn empirical(alpha: f64) -> Result<Self, ObjectiveError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ObjectiveError::Alpha(alpha));
        }
        let rest = 1.0 - alpha;
        let beta = 2.0 * rest / 3.0;
        Ok(Self {
            scheme: LossScheme::Empirical,
            alpha,
            beta,
            // Remainder rather than rest/3 so the three sum to exactly 1.
            gamma_w: 1.0 - alpha - beta,
        })
    }

    pub fn average() -> Self {
        Self {
            scheme: LossScheme::Average,
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma_w: 1.0 / 3.0,
        }
    }

    pub fn bayesian() -> Self {
        Self {
            scheme: LossScheme::Bayesian,
            alpha: 1.0,
            beta: 1.0,
            gamma_w: 1.0,
        }
    }

    pub fn for_scheme(scheme: LossScheme, alpha: f64) -> Result<Self, ObjectiveError> {
        match scheme {
            LossScheme::Empirical => Self::empirical(alpha),
            LossScheme::Average => Ok(Self::average()),
            LossScheme::Bayesian => Ok(Self::bayesian()),
        }
    }
}

/// Positive-class weight in the node loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassWeighting {
    /// `#negatives / #positives`: up-weights the minority positives.
    Inverse,
    /// `#positives / #negatives`, the ratio as literally written.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Mean,
    Sum,
}

impl Reduction {
    fn apply(self, tape: &mut Tape, per_item: Var, count: usize) -> Var {
        let s = tape.sum(per_item);
        match self {
            Reduction::Mean => tape.scale(s, 1.0 / count as f64),
            Reduction::Sum => s,
        }
    }
}

/// Positive weight for the given train labels.
pub fn class_weight(labels: &[Label], train: &[usize], weighting: ClassWeighting) -> Result<f64, ObjectiveError> {
    let mut pos = 0usize;
    let mut neg = 0usize;
    for &i in train {
        match labels[i] {
            Label::Positive => pos += 1,
            Label::Negative => neg += 1,
            Label::Unlabeled => return Err(ObjectiveError::UnlabeledTrainNode(i)),
        }
    }
    let err = ObjectiveError::ClassWeight {
        positives: pos,
        negatives: neg,
    };
    match weighting {
        ClassWeighting::Inverse if pos > 0 => Ok(neg as f64 / pos as f64),
        ClassWeighting::Literal if pos > 0 && neg > 0 => Ok(pos as f64 / neg as f64),
        _ => Err(err),
    }
}

/// `−mean_i w_i [y_i ln p_i + (1 − y_i) ln(1 − p_i)]` per item; `targets`
/// and `weights` are constants.
fn bce(tape: &mut Tape, probs: Var, targets: &[f64], weights: Option<&[f64]>) -> Result<Var, AutodiffError> {
    let n = targets.len();
    let p = tape.clamp(probs, PROB_EPS, 1.0 - PROB_EPS);
    let y = tape.constant(Tensor::column(targets.to_vec()));
    let not_y = tape.constant(Tensor::column(targets.iter().map(|t| 1.0 - t).collect()));
    let lp = tape.log(p);
    let q = tape.scale(p, -1.0);
    let q = tape.add_scalar(q, 1.0);
    let lq = tape.log(q);
    let a = tape.mul(y, lp)?;
    let b = tape.mul(not_y, lq)?;
    let ll = tape.add(a, b)?;
    let ll = match weights {
        Some(w) => {
            debug_assert_eq!(w.len(), n);
            let w = tape.constant(Tensor::column(w.to_vec()));
            tape.mul(ll, w)?
        }
        None => ll,
    };
    Ok(tape.scale(ll, -1.0))
}

/// Weighted cross-entropy of node probabilities (`N × 1`) over `train`.
pub fn classification_loss(
    tape: &mut Tape,
    probs: Var,
    labels: &[Label],
    train: &[usize],
    weighting: ClassWeighting,
    reduction: Reduction,
) -> Result<Var, ObjectiveError> {
    if train.is_empty() {
        return Err(ObjectiveError::EmptyTrainSet);
    }
    let rows = tape.shape(probs)[0];
    if rows != labels.len() {
        return Err(ObjectiveError::Length {
            what: "classification_loss",
            expected: labels.len(),
            got: rows,
        });
    }
    let w_pos = class_weight(labels, train, weighting)?;
    let p = tape.gather_rows(probs, train)?;
    let targets: Vec<f64> = train.iter().map(|&i| labels[i].as_target().unwrap_or(0.0)).collect();
    let weights: Vec<f64> = targets.iter().map(|&t| if t == 1.0 { w_pos } else { 1.0 }).collect();
    let per = bce(tape, p, &targets, Some(&weights))?;
    Ok(reduction.apply(tape, per, train.len()))
}

/// Cross-entropy of interaction probabilities against 1 (edge) / 0 (sampled
/// non-edge).
pub fn interaction_loss(tape: &mut Tape, probs: Var, targets: &[f64], reduction: Reduction) -> Result<Var, ObjectiveError> {
    check_pairs(tape, probs, targets, "interaction_loss")?;
    let per = bce(tape, probs, targets, None)?;
    Ok(reduction.apply(tape, per, targets.len()))
}

/// Squared error of predicted confidences; sampled non-edges have target 0.
pub fn confidence_loss(tape: &mut Tape, preds: Var, targets: &[f64], reduction: Reduction) -> Result<Var, ObjectiveError> {
    check_pairs(tape, preds, targets, "confidence_loss")?;
    let t = tape.constant(Tensor::column(targets.to_vec()));
    let d = tape.sub(preds, t)?;
    let per = tape.square(d);
    Ok(reduction.apply(tape, per, targets.len()))
}

fn check_pairs(tape: &Tape, v: Var, targets: &[f64], what: &'static str) -> Result<(), ObjectiveError> {
    if targets.is_empty() {
        return Err(ObjectiveError::EmptyPairs(what));
    }
    if tape.shape(v) != [targets.len(), 1] {
        return Err(ObjectiveError::Length {
            what,
            expected: targets.len(),
            got: tape.value(v).numel(),
        });
    }
    Ok(())
}

/// Learnable bayesian weights on the tape.
#[derive(Debug, Clone, Copy)]
pub struct BayesVars {
    pub alpha: Var,
    pub beta: Var,
    pub gamma: Var,
}

/// `α L_n + β L_l + γ_w L_w`, or for the bayesian scheme
/// `L_n/α² + L_l/β² + L_w/γ² + 2 ln(αβγ)` with the weights taken from `bayes`.
pub fn total_loss(
    tape: &mut Tape,
    losses: [Var; 3],
    weights: &LossWeights,
    bayes: Option<BayesVars>,
) -> Result<Var, ObjectiveError> {
    let [ln, ll, lw] = losses;
    match (weights.scheme, bayes) {
        (LossScheme::Bayesian, Some(b)) => {
            let mut total: Option<Var> = None;
            for (name, loss, w) in [("alpha", ln, b.alpha), ("beta", ll, b.beta), ("gamma", lw, b.gamma)] {
                let value = tape.value(w).data()[0];
                if !(value > 0.0) {
                    return Err(ObjectiveError::NonPositiveWeight {
                        name: name.into(),
                        value,
                    });
                }
                let sq = tape.square(w);
                let term = tape.div(loss, sq)?;
                let lg = tape.log(w);
                let lg = tape.scale(lg, 2.0);
                let term = tape.add(term, lg)?;
                total = Some(match total {
                    Some(t) => tape.add(t, term)?,
                    None => term,
                });
            }
            Ok(total.expect("three terms"))
        }
        (LossScheme::Bayesian, None) => {
            let (a, b, g) = (weights.alpha, weights.beta, weights.gamma_w);
            for (name, value) in [("alpha", a), ("beta", b), ("gamma", g)] {
                if !(value > 0.0) {
                    return Err(ObjectiveError::NonPositiveWeight {
                        name: name.into(),
                        value,
                    });
                }
            }
            let x = tape.scale(ln, 1.0 / (a * a));
            let y = tape.scale(ll, 1.0 / (b * b));
            let z = tape.scale(lw, 1.0 / (g * g));
            let s = tape.add(x, y)?;
            let s = tape.add(s, z)?;
            Ok(tape.add_scalar(s, 2.0 * crate::math::ln(a * b * g)))
        }
        _ => {
            let x = tape.scale(ln, weights.alpha);
            let y = tape.scale(ll, weights.beta);
            let z = tape.scale(lw, weights.gamma_w);
            let s = tape.add(x, y)?;
            Ok(tape.add(s, z)?)
        }
    }
}
