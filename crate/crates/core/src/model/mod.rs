//! The HIPGNN node classifier.
//!
//! Forward pass, in order:
//!
//! 1. `Z = [λ ‖ ρ(λ)]` and `R = ρρᵀ` from the (possibly truncated) spectrum.
//! 2. Per head `m`: `Z′_m = softmax((Q Kᵀ + R)/√d_q) V` and filtered
//!    eigenvalues `λ′_m = φ(Z′_m W_λ)` with `W_λ` shared by all heads.
//! 3. Bases `S_m = U diag(λ′_m) Uᵀ`, stacked with `I_N` and mixed entrywise
//!    by a two-layer FFN into `d1` channels `Ŝ`.
//! 4. `L` convolution layers `X^l = relu(X̂ W^l / N) + X^{l−1}` where column `i`
//!    of `X̂` is `Ŝ_i X^{l−1}_{:,i}`; raw features are first projected to
//!    `d1`.
//! 5. Three independent channel blocks map the backbone output to `X^n`,
//!    `X^l`, `X^w` (width `d2`), feeding the node, interaction and
//!    confidence heads.
//!
//! `Ŝ` is never materialized: the convolution works from the FFN's hidden
//! layer (see [`Tape::basis_conv`]). [`reference`] keeps the explicit
//! per-channel evaluation for testing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::autodiff::{AutodiffError, ParamStore, ParamVars, Tape, Tensor, Var};
use crate::linalg::Matrix;
use crate::math;
use crate::rng;
use crate::spectral::SpectralDecomposition;

pub mod encoding;
pub mod reference;

pub use encoding::EigenEncoding;

/// Probability clamp used by the interaction head and the losses.
pub const PROB_EPS: f64 = 1e-7;
const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("encoding dimension must be even and at least 2, got {0}")]
    EncodingDim(usize),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("feature matrix has {got_rows}×{got_cols}, model expects {expected_rows}×{expected_cols}")]
    FeatureShape {
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("decomposition covers {got} nodes, model expects {expected}")]
    NodeCount { expected: usize, got: usize },
    #[error("node pair ({0}, {1}) out of range")]
    PairIndex(usize, usize),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterActivation {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelBlockKind {
    /// Attention up to `attention_max_nodes`, feed-forward above.
    Auto,
    Attention,
    FeedForward,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HipgnnConfig {
    /// Eigenvalue encoding width `d` (even).
    pub encoding_dim: usize,
    /// Number of spectral filters `M`.
    pub heads: usize,
    /// Convolution layers `L`.
    pub layers: usize,
    /// Keep the `q` smallest and `q` largest eigenpairs.
    pub q: usize,
    /// Backbone width `d1`.
    pub hidden: usize,
    /// Channel output width `d2`.
    pub repr: usize,
    /// Hidden width of the entrywise basis FFN.
    pub basis_hidden: usize,
    pub filter_activation: FilterActivation,
    pub channel_block: ChannelBlockKind,
    pub attention_max_nodes: usize,
    /// Query/key width of the channel-block attention.
    pub block_key_width: usize,
    /// Hidden width of the channel-block feed-forward sublayer.
    pub block_ffn_width: usize,
    /// Hidden width of the node and confidence MLP heads.
    pub head_hidden: usize,
}

impl Default for HipgnnConfig {
    fn default() -> Self {
        Self {
            encoding_dim: 32,
            heads: 4,
            layers: 2,
            q: 3000,
            hidden: 128,
            repr: 64,
            basis_hidden: 4,
            filter_activation: FilterActivation::Identity,
            channel_block: ChannelBlockKind::Auto,
            attention_max_nodes: 4096,
            block_key_width: 32,
            block_ffn_width: 128,
            head_hidden: 64,
        }
    }
}

impl HipgnnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.encoding_dim < 2 || self.encoding_dim % 2 != 0 {
            return Err(ModelError::EncodingDim(self.encoding_dim));
        }
        let positive = [
            ("heads", self.heads),
            ("layers", self.layers),
            ("q", self.q),
            ("hidden", self.hidden),
            ("repr", self.repr),
            ("basis_hidden", self.basis_hidden),
            ("block_key_width", self.block_key_width),
            ("block_ffn_width", self.block_ffn_width),
            ("head_hidden", self.head_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Per-head projection width `ceil((d + 1) / M)`.
    pub fn head_dim(&self) -> usize {
        (self.encoding_dim + 1).div_ceil(self.heads)
    }
}

/// Eigenpairs actually consumed by the model plus their encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInputs {
    pub decomposition: SpectralDecomposition,
    pub encoding: EigenEncoding,
}

/// Channel names, in output order.
pub const CHANNELS: [&str; 3] = ["node", "link", "weight"];

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `N × 1` node probabilities.
    pub node_prob: Var,
    /// `P × 1` clamped cosine interaction probabilities for the given pairs.
    pub interaction_prob: Option<Var>,
    /// `P × 1` predicted confidences for the given pairs.
    pub confidence: Option<Var>,
    /// Filtered eigenvalues per head, each `K × 1`.
    pub lambda_primes: Vec<Var>,
    /// Backbone output `X^L`.
    pub backbone: Var,
    /// `X^n`, `X^l`, `X^w`.
    pub channels: [Var; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hipgnn {
    config: HipgnnConfig,
    node_count: usize,
    feature_dim: usize,
    block: ChannelBlockKind,
}

impl Hipgnn {
    pub fn new(config: HipgnnConfig, node_count: usize, feature_dim: usize) -> Result<Self, ModelError> {
        config.validate()?;
        if node_count == 0 || feature_dim == 0 {
            return Err(ModelError::Config("graph needs at least one node and one feature".into()));
        }
        let block = match config.channel_block {
            ChannelBlockKind::Auto if node_count > config.attention_max_nodes => ChannelBlockKind::FeedForward,
            ChannelBlockKind::Auto => ChannelBlockKind::Attention,
            other => other,
        };
        Ok(Self {
            config,
            node_count,
            feature_dim,
            block,
        })
    }

    pub fn config(&self) -> &HipgnnConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Channel-block variant after resolving `Auto` against the node count.
    pub fn block_kind(&self) -> ChannelBlockKind {
        self.block
    }

    /// Truncate to `q` and encode the retained eigenvalues.
    pub fn prepare(&self, decomposition: &SpectralDecomposition) -> Result<SpectralInputs, ModelError> {
        if decomposition.node_count() != self.node_count {
            return Err(ModelError::NodeCount {
                expected: self.node_count,
                got: decomposition.node_count(),
            });
        }
        let decomposition = decomposition.truncated(self.config.q);
        let encoding = EigenEncoding::new(decomposition.eigenvalues(), self.config.encoding_dim)?;
        Ok(SpectralInputs {
            decomposition,
            encoding,
        })
    }

    /// Parameter names and shapes, in initialization order.
    pub fn parameter_shapes(&self) -> Vec<(String, [usize; 2], Init)> {
        let c = &self.config;
        let (d1, d2) = (c.hidden, c.repr);
        let width = c.heads * c.head_dim();
        let mut out: Vec<(String, [usize; 2], Init)> = vec![
            ("filter.wq".into(), [c.encoding_dim + 1, width], Init::Xavier),
            ("filter.wk".into(), [c.encoding_dim + 1, width], Init::Xavier),
            ("filter.wv".into(), [c.encoding_dim + 1, width], Init::Xavier),
            ("filter.w_lambda".into(), [c.head_dim(), 1], Init::Xavier),
            ("basis.w1".into(), [c.basis_hidden, c.heads + 1], Init::Xavier),
            ("basis.b1".into(), [c.basis_hidden, 1], Init::Zeros),
            ("basis.w2".into(), [c.basis_hidden, d1], Init::Xavier),
            ("basis.b2".into(), [1, d1], Init::Zeros),
            ("input.w".into(), [self.feature_dim, d1], Init::Xavier),
            ("input.b".into(), [1, d1], Init::Zeros),
        ];
        for l in 0..c.layers {
            out.push((format!("conv.{l}.w"), [d1, d1], Init::Xavier));
        }
        for ch in CHANNELS {
            let p = |s: &str| format!("block.{ch}.{s}");
            if self.block == ChannelBlockKind::Attention {
                out.push((p("wq"), [d1, c.block_key_width], Init::Xavier));
                out.push((p("wk"), [d1, c.block_key_width], Init::Xavier));
                out.push((p("wv"), [d1, d1], Init::Xavier));
                out.push((p("wo"), [d1, d1], Init::Xavier));
                out.push((p("ln1_g"), [1, d1], Init::Ones));
                out.push((p("ln1_b"), [1, d1], Init::Zeros));
            }
            out.push((p("ff1_w"), [d1, c.block_ffn_width], Init::Xavier));
            out.push((p("ff1_b"), [1, c.block_ffn_width], Init::Zeros));
            out.push((p("ff2_w"), [c.block_ffn_width, d1], Init::Xavier));
            out.push((p("ff2_b"), [1, d1], Init::Zeros));
            out.push((p("ln2_g"), [1, d1], Init::Ones));
            out.push((p("ln2_b"), [1, d1], Init::Zeros));
            out.push((p("proj_w"), [d1, d2], Init::Xavier));
            out.push((p("proj_b"), [1, d2], Init::Zeros));
        }
        for head in ["node", "conf"] {
            out.push((format!("head.{head}.w1"), [d2, c.head_hidden], Init::Xavier));
            out.push((format!("head.{head}.b1"), [1, c.head_hidden], Init::Zeros));
            out.push((format!("head.{head}.w2"), [c.head_hidden, 1], Init::Xavier));
            out.push((format!("head.{head}.b2"), [1, 1], Init::Zeros));
        }
        out
    }

    /// Fresh parameters: Xavier-uniform weights, zero biases, unit gains.
    pub fn init_params(&self, seed: u64) -> ParamStore {
        let mut rng = rng::seeded(seed);
        let mut store = ParamStore::new();
        for (name, [r, c], init) in self.parameter_shapes() {
            let t = match init {
                Init::Zeros => Tensor::zeros([r, c]),
                Init::Ones => Tensor::full([r, c], 1.0),
                Init::Xavier => {
                    let bound = math::sqrt(6.0 / (r + c) as f64);
                    let data = (0..r * c).map(|_| rng.random_range(-bound..=bound)).collect();
                    Tensor::new([r, c], data).expect("shape matches")
                }
            };
            store.insert(name, t);
        }
        store
    }

    /// Filtered eigenvalues `λ′_m`, one `K × 1` handle per head.
    pub fn filter_values(
        &self,
        tape: &mut Tape,
        p: &ParamVars,
        inputs: &SpectralInputs,
    ) -> Result<Vec<Var>, ModelError> {
        let c = &self.config;
        let dq = c.head_dim();
        let z = tape.constant(Tensor::from_matrix(&inputs.encoding.encoded));
        let r = tape.constant(Tensor::from_matrix(&inputs.encoding.proximity));
        let q_all = tape.matmul(z, p.get("filter.wq")?)?;
        let k_all = tape.matmul(z, p.get("filter.wk")?)?;
        let v_all = tape.matmul(z, p.get("filter.wv")?)?;
        let w_lambda = p.get("filter.w_lambda")?;
        let mut out = Vec::with_capacity(c.heads);
        for m in 0..c.heads {
            let q = tape.slice(q_all, 1, m * dq, dq)?;
            let k = tape.slice(k_all, 1, m * dq, dq)?;
            let v = tape.slice(v_all, 1, m * dq, dq)?;
            let (_, zp) = spectral_attention(tape, q, k, v, r, dq)?;
            let lam = tape.matmul(zp, w_lambda)?;
            out.push(match c.filter_activation {
                FilterActivation::Identity => lam,
                FilterActivation::Tanh => tape.tanh(lam),
            });
        }
        Ok(out)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &ParamVars,
        inputs: &SpectralInputs,
        features: &Matrix,
        pairs: &[(usize, usize)],
    ) -> Result<Forward, ModelError> {
        let n = self.node_count;
        if features.rows() != n || features.cols() != self.feature_dim {
            return Err(ModelError::FeatureShape {
                expected_rows: n,
                expected_cols: self.feature_dim,
                got_rows: features.rows(),
                got_cols: features.cols(),
            });
        }
        if inputs.decomposition.node_count() != n {
            return Err(ModelError::NodeCount {
                expected: n,
                got: inputs.decomposition.node_count(),
            });
        }
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(ModelError::PairIndex(i, j));
        }

        let lambda_primes = self.filter_values(tape, p, inputs)?;
        let hidden = build_bases(
            tape,
            inputs.decomposition.eigenvectors(),
            &lambda_primes,
            p.get("basis.w1")?,
            p.get("basis.b1")?,
        )?;

        let x_raw = tape.constant(Tensor::from_matrix(features));
        let x0 = tape.matmul(x_raw, p.get("input.w")?)?;
        let mut x = tape.add_row(x0, p.get("input.b")?)?;
        let (w2, b2) = (p.get("basis.w2")?, p.get("basis.b2")?);
        for l in 0..self.config.layers {
            x = graph_convolution(tape, hidden, x, w2, b2, p.get(&format!("conv.{l}.w"))?)?;
        }
        let backbone = x;

        let mut channels = [backbone; 3];
        for (slot, ch) in channels.iter_mut().zip(CHANNELS) {
            *slot = self.channel_block(tape, p, backbone, ch)?;
        }
        let [xn, xl, xw] = channels;

        let node_prob = {
            let logit = mlp_head(tape, p, xn, "node")?;
            tape.sigmoid(logit)
        };
        let (interaction_prob, confidence) = if pairs.is_empty() {
            (None, None)
        } else {
            let src: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
            let dst: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
            (
                Some(predict_interaction(tape, xl, &src, &dst)?),
                Some(predict_confidence(tape, p, xw, &src, &dst)?),
            )
        };
        Ok(Forward {
            node_prob,
            interaction_prob,
            confidence,
            lambda_primes,
            backbone,
            channels,
        })
    }

    fn channel_block(&self, tape: &mut Tape, p: &ParamVars, x: Var, ch: &str) -> Result<Var, ModelError> {
        let g = |s: &str| p.get(&format!("block.{ch}.{s}"));
        let y = if self.block == ChannelBlockKind::Attention {
            let q = tape.matmul(x, g("wq")?)?;
            let k = tape.matmul(x, g("wk")?)?;
            let v = tape.matmul(x, g("wv")?)?;
            let kt = tape.transpose(k)?;
            let scores = tape.matmul(q, kt)?;
            let scores = tape.scale(scores, 1.0 / math::sqrt(self.config.block_key_width as f64));
            let attn = tape.softmax(scores, 1)?;
            let ctx = tape.matmul(attn, v)?;
            let o = tape.matmul(ctx, g("wo")?)?;
            let res = tape.add(x, o)?;
            layer_norm(tape, res, g("ln1_g")?, g("ln1_b")?)?
        } else {
            x
        };
        let h = tape.matmul(y, g("ff1_w")?)?;
        let h = tape.add_row(h, g("ff1_b")?)?;
        let h = tape.relu(h);
        let f = tape.matmul(h, g("ff2_w")?)?;
        let f = tape.add_row(f, g("ff2_b")?)?;
        let res = tape.add(y, f)?;
        let z = layer_norm(tape, res, g("ln2_g")?, g("ln2_b")?)?;
        let out = tape.matmul(z, g("proj_w")?)?;
        Ok(tape.add_row(out, g("proj_b")?)?)
    }

    /// `λ′_m` values for export, one vector per head.
    pub fn filter_response(&self, params: &ParamStore, inputs: &SpectralInputs) -> Result<Vec<Vec<f64>>, ModelError> {
        let mut tape = Tape::new();
        let vars = params.attach(&mut tape);
        let heads = self.filter_values(&mut tape, &vars, inputs)?;
        Ok(heads.into_iter().map(|v| tape.value(v).data().to_vec()).collect())
    }

    /// Node probabilities with frozen parameters.
    pub fn predict(&self, params: &ParamStore, inputs: &SpectralInputs, features: &Matrix) -> Result<Vec<f64>, ModelError> {
        let mut tape = Tape::new();
        let vars = params.attach(&mut tape);
        let fwd = self.forward(&mut tape, &vars, inputs, features, &[])?;
        Ok(tape.value(fwd.node_prob).data().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Xavier,
    Zeros,
    Ones,
}

/// One attention head over eigenvalue tokens. Returns the row-stochastic
/// attention matrix and `Z′ = A V`.
pub fn spectral_attention(
    tape: &mut Tape,
    q: Var,
    k: Var,
    v: Var,
    proximity: Var,
    head_dim: usize,
) -> Result<(Var, Var), ModelError> {
    let kt = tape.transpose(k)?;
    let qk = tape.matmul(q, kt)?;
    let logits = tape.add(qk, proximity)?;
    let logits = tape.scale(logits, 1.0 / math::sqrt(head_dim as f64));
    let attn = tape.softmax(logits, 1)?;
    let out = tape.matmul(attn, v)?;
    Ok((attn, out))
}

/// Hidden layer of the entrywise basis FFN over `[I ‖ S_1 ‖ … ‖ S_M]`,
/// returned as `H × N²` (each row a flattened `N × N` matrix).
pub fn build_bases(
    tape: &mut Tape,
    eigenvectors: &Matrix,
    lambda_primes: &[Var],
    w1: Var,
    b1: Var,
) -> Result<Var, ModelError> {
    let n = eigenvectors.rows();
    let rows = lambda_primes
        .iter()
        .map(|&l| tape.transpose(l))
        .collect::<Result<Vec<_>, _>>()?;
    let lam = tape.concat(&rows, 0)?;
    let u = tape.constant(Tensor::from_matrix(eigenvectors));
    let s = tape.eigen_reconstruct(u, lam)?;
    let mut ident = vec![0.0; n * n];
    for i in 0..n {
        ident[i * n + i] = 1.0;
    }
    let ident = tape.constant(Tensor::row(ident));
    let stacked = tape.concat(&[ident, s], 0)?;
    let pre = tape.matmul(w1, stacked)?;
    let pre = tape.add_col(pre, b1)?;
    Ok(tape.relu(pre))
}

/// `relu(X̂ W / N) + X` with `X̂` from [`Tape::basis_conv`]. The `1/N` could
/// be folded into the basis output weights; keeping it explicit stops dense
/// basis entries from scaling Adam's effective step with the node count.
pub fn graph_convolution(tape: &mut Tape, hidden: Var, x: Var, w2: Var, b2: Var, w: Var) -> Result<Var, ModelError> {
    let xhat = tape.basis_conv(hidden, x, w2, b2)?;
    let nodes = tape.shape(x)[0] as f64;
    let xhat = tape.scale(xhat, 1.0 / nodes);
    let mixed = tape.matmul(xhat, w)?;
    let act = tape.relu(mixed);
    Ok(tape.add(act, x)?)
}

fn layer_norm(tape: &mut Tape, x: Var, gain: Var, bias: Var) -> Result<Var, ModelError> {
    let y = tape.layer_norm_rows(x, LAYER_NORM_EPS)?;
    let y = tape.mul_row(y, gain)?;
    Ok(tape.add_row(y, bias)?)
}

fn mlp_head(tape: &mut Tape, p: &ParamVars, x: Var, head: &str) -> Result<Var, ModelError> {
    let g = |s: &str| p.get(&format!("head.{head}.{s}"));
    let h = tape.matmul(x, g("w1")?)?;
    let h = tape.add_row(h, g("b1")?)?;
    let h = tape.relu(h);
    let o = tape.matmul(h, g("w2")?)?;
    Ok(tape.add_row(o, g("b2")?)?)
}

/// `clamp(max(cos(x_i, x_j), 0), ε, 1 − ε)` per pair.
pub fn predict_interaction(tape: &mut Tape, xl: Var, src: &[usize], dst: &[usize]) -> Result<Var, ModelError> {
    let a = tape.gather_rows(xl, src)?;
    let b = tape.gather_rows(xl, dst)?;
    let cos = tape.cosine_rows(a, b)?;
    let pos = tape.relu(cos);
    Ok(tape.clamp(pos, PROB_EPS, 1.0 - PROB_EPS))
}

/// `MLP((x_i + x_j) / 2)` per pair.
pub fn predict_confidence(tape: &mut Tape, p: &ParamVars, xw: Var, src: &[usize], dst: &[usize]) -> Result<Var, ModelError> {
    let a = tape.gather_rows(xw, src)?;
    let b = tape.gather_rows(xw, dst)?;
    let s = tape.add(a, b)?;
    let mid = tape.scale(s, 0.5);
    mlp_head(tape, p, mid, "conf")
}
