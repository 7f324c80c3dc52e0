//! Command-line definitions. Flags backed by the run configuration are
//! optional and override the file; their help text names the key and its
//! default.

use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use hipgnn_core::metrics::BestMetric;
use hipgnn_core::model::ChannelBlockKind;
use hipgnn_core::objectives::LossScheme;
use hipgnn_core::LaplacianKind;
use serde::de::value::{Error as DeError, StrDeserializer};
use serde::Deserialize;

use crate::config::RunConfig;

/// Parse a unit enum variant through its serde name.
fn serde_enum<T: for<'de> Deserialize<'de>>(s: String) -> T {
    // values reaching here were already checked against the possible list
    T::deserialize(StrDeserializer::<DeError>::new(&s)).expect("possible value matches a variant")
}

fn laplacian_parser() -> impl TypedValueParser<Value = LaplacianKind> {
    PossibleValuesParser::new(["regular", "normalized"]).map(serde_enum::<LaplacianKind>)
}

#[derive(Debug, Parser)]
#[command(
    name = "hipgnn",
    version,
    about = "Spectral-energy analysis of weighted graphs and HIPGNN node classification"
)]
pub struct Cli {
    /// Log verbosity: -v for info, -vv for debug
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an ER, BA or planted-anomaly graph
    Synth(SynthArgs),
    /// Spectral energy profile and KDE of a signal on a graph
    Spectra(SpectraArgs),
    /// Energy profiles of one topology under growing weight variance
    FlattenExperiment(FlattenArgs),
    /// Numerical checks of the spectral results; exits nonzero on failure
    Verify(VerifyArgs),
    /// Train HIPGNN on one train/test split
    Train(TrainArgs),
    /// Score a graph with a saved checkpoint
    Evaluate(EvaluateArgs),
    /// k-fold cross-validation
    Cv(CvArgs),
    /// Export the learned spectral filters of a checkpoint
    ExportFilter(ExportFilterArgs),
    /// Per-node incident weight variance with labels
    NodeVariance(NodeVarianceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphModel {
    Er,
    Ba,
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Topology {
    Er,
    Ba,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub model: GraphModel,
    /// Node count
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// ER edge probability (also the planted topology)
    #[arg(long, default_value_t = 0.04)]
    pub p: f64,
    /// BA edges per new node
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Weight mean
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Gaussian weight variance for er/ba; unit weights when absent
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub clamp_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub clamp_max: f64,
    /// planted: fraction of positive nodes
    #[arg(long, default_value_t = 0.2)]
    pub anomaly_fraction: f64,
    /// planted: weight variance on edges touching a positive node
    #[arg(long, default_value_t = 0.09)]
    pub sigma2_anom: f64,
    /// planted: weight variance on the other edges
    #[arg(long, default_value_t = 0.0)]
    pub sigma2_norm: f64,
    /// planted: width of the Gaussian noise features, 0 for none
    #[arg(long, default_value_t = 0)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// Graph input shared by every command that reads a graph.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// TOML run configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory with edges.tsv and optional features.tsv, labels.tsv [config: data.graph_dir]
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
    /// Edge file, idA<TAB>idB<TAB>weight [config: data.edges]
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Feature file, id<TAB>f1..fF [config: data.features]
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Label file, id<TAB>{0,1} [config: data.labels]
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Pairs never sampled as negatives [config: data.exclusion]
    #[arg(long)]
    pub exclusion: Option<PathBuf>,
    /// Smallest accepted weight [config: data.weight_min, default: 0]
    #[arg(long)]
    pub weight_min: Option<f64>,
    /// Largest accepted weight [config: data.weight_max, default: unbounded]
    #[arg(long)]
    pub weight_max: Option<f64>,
    /// Z-score feature columns [config: data.standardize_features, default: false]
    #[arg(long)]
    pub standardize_features: bool,
    /// Laplacian [config: spectral.laplacian, default: normalized]
    #[arg(long, value_parser = laplacian_parser())]
    pub laplacian: Option<LaplacianKind>,
}

impl DataArgs {
    /// Config file (or defaults) with these flags applied.
    pub fn resolve(&self) -> crate::error::Result<RunConfig> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        let d = &mut cfg.data;
        set(&mut d.graph_dir, &self.graph_dir);
        set(&mut d.edges, &self.edges);
        set(&mut d.features, &self.features);
        set(&mut d.labels, &self.labels);
        set(&mut d.exclusion, &self.exclusion);
        set(&mut d.weight_min, &self.weight_min);
        set(&mut d.weight_max, &self.weight_max);
        if self.standardize_features {
            d.standardize_features = true;
        }
        if let Some(k) = self.laplacian {
            cfg.spectral.laplacian = k;
        }
        cfg.absolutize()?;
        Ok(cfg)
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn over<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Eigenpairs kept at each end of the spectrum [config: model.q, default: 3000]
    #[arg(long)]
    pub q: Option<usize>,
    /// Eigenvalue encoding width [config: model.encoding_dim, default: 32]
    #[arg(long)]
    pub encoding_dim: Option<usize>,
    /// Spectral filters [config: model.heads, default: 4]
    #[arg(long)]
    pub heads: Option<usize>,
    /// Convolution layers [config: model.layers, default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Backbone width [config: model.hidden, default: 128]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Channel output width [config: model.repr, default: 64]
    #[arg(long)]
    pub repr: Option<usize>,
    /// Hidden width of the basis FFN [config: model.basis_hidden, default: 4]
    #[arg(long)]
    pub basis_hidden: Option<usize>,
    /// Channel block [config: model.channel_block, default: auto]
    #[arg(long, value_parser = PossibleValuesParser::new(["auto", "attention", "feed-forward"]).map(serde_enum::<ChannelBlockKind>))]
    pub channel_block: Option<ChannelBlockKind>,
}

#[derive(Debug, Args)]
pub struct OptimArgs {
    /// Training epochs [config: train.epochs, default: 500]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [config: train.learning_rate, default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Initialization and sampling seed [config: train.seed, default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Loss weighting [config: train.scheme, default: empirical]
    #[arg(long, value_parser = PossibleValuesParser::new(["empirical", "average", "bayesian"]).map(serde_enum::<LossScheme>))]
    pub scheme: Option<LossScheme>,
    /// Weight of the node loss under the empirical scheme [config: train.alpha, default: 0.01]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Test metric that picks the saved checkpoint [config: train.best_metric, default: ap]
    #[arg(long, value_parser = PossibleValuesParser::new(["auc", "f1", "ap"]).map(serde_enum::<BestMetric>))]
    pub best_metric: Option<BestMetric>,
    /// Share of edges seen by the link losses [config: train.edge_train_ratio, default: 0.8]
    #[arg(long)]
    pub edge_train_ratio: Option<f64>,
    /// Decision threshold for macro-F1 [config: train.threshold, default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Share of labeled nodes used for training [config: split.train_ratio, default: 0.8]
    #[arg(long)]
    pub train_ratio: Option<f64>,
    /// Split seed [config: split.seed, default: 42]
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Keep class proportions in every split [config: split.stratified, default: true]
    #[arg(long)]
    pub stratified: Option<bool>,
}

impl ModelArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let m = &mut cfg.model;
        over(&mut m.q, &self.q);
        over(&mut m.encoding_dim, &self.encoding_dim);
        over(&mut m.heads, &self.heads);
        over(&mut m.layers, &self.layers);
        over(&mut m.hidden, &self.hidden);
        over(&mut m.repr, &self.repr);
        over(&mut m.basis_hidden, &self.basis_hidden);
        over(&mut m.channel_block, &self.channel_block);
    }
}

impl OptimArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.train;
        over(&mut t.epochs, &self.epochs);
        over(&mut t.learning_rate, &self.lr);
        over(&mut t.seed, &self.seed);
        over(&mut t.scheme, &self.scheme);
        over(&mut t.alpha, &self.alpha);
        over(&mut t.best_metric, &self.best_metric);
        over(&mut t.edge_train_ratio, &self.edge_train_ratio);
        over(&mut t.threshold, &self.threshold);
    }
}

impl SplitArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.split;
        over(&mut s.train_ratio, &self.train_ratio);
        over(&mut s.seed, &self.split_seed);
        over(&mut s.stratified, &self.stratified);
    }
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Signal file, one value or id<TAB>value per node; uniform random when absent
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Seed of the uniform random signal
    #[arg(long, default_value_t = 44)]
    pub signal_seed: u64,
    /// KDE grid points
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// KDE bandwidth; Scott's rule when absent
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Leave the first eigenvalue out of the KDE
    #[arg(long)]
    pub exclude_first: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    #[arg(long, value_enum, default_value_t = Topology::Er)]
    pub topology: Topology,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// ER edge probability
    #[arg(long, default_value_t = 0.02)]
    pub p: f64,
    /// BA edges per new node
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 42)]
    pub topology_seed: u64,
}

#[derive(Debug, Args)]
pub struct FlattenArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Weight variances, ascending
    #[arg(long, value_delimiter = ',', default_value = "0,0.03,0.09")]
    pub sigma2: Vec<f64>,
    /// Weight mean
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub clamp_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub clamp_max: f64,
    #[arg(long, default_value_t = 43)]
    pub weight_seed: u64,
    #[arg(long, default_value_t = 44)]
    pub signal_seed: u64,
    #[arg(long, value_parser = laplacian_parser(), default_value = "regular")]
    pub laplacian: LaplacianKind,
    /// KDE grid points
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Percentile of the low-frequency cumulative energy
    #[arg(long, default_value_t = 5.0)]
    pub low_percentile: f64,
    /// Percentile beyond which tail energy is measured
    #[arg(long, default_value_t = 95.0)]
    pub high_percentile: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub check: VerifyCheck,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCheck {
    /// Spectral mean against the Rayleigh quotient on random graphs
    Rayleigh(RayleighArgs),
    /// Monotone growth of the spectral variance with weight variance
    Variance(VarianceArgs),
    /// Eigenvalue encoding proximity identities
    Encoding(EncodingArgs),
}

#[derive(Debug, Args)]
pub struct RayleighArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub n_min: usize,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Directory for report.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long, value_enum, default_value_t = Topology::Er)]
    pub topology: Topology,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// ER edge probability
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    /// BA edges per new node
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 42)]
    pub topology_seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Weight variances, ascending
    #[arg(long, value_delimiter = ',', default_value = "0,0.03,0.09")]
    pub sigma2: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    /// Weight-draw seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 44)]
    pub signal_seed: u64,
    #[arg(long, value_parser = laplacian_parser(), default_value = "regular")]
    pub laplacian: LaplacianKind,
    /// Required gap between consecutive means, in standard errors
    #[arg(long, default_value_t = 2.0)]
    pub stderr_multiple: f64,
    /// Directory for report.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodingArgs {
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Directory for report.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Run directory
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn resolve(&self) -> crate::error::Result<RunConfig> {
        let mut cfg = self.data.resolve()?;
        self.model.apply(&mut cfg);
        self.optim.apply(&mut cfg);
        self.split.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Fold count [config: split.folds, default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Folds trained concurrently
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Checkpoint written by train
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Decision threshold for macro-F1 [config: train.threshold, default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportFilterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by train
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NodeVarianceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}
