//! TOML run configuration. Each section mirrors one part of the pipeline;
//! command-line flags override file values, and the resolved configuration
//! is written next to every run's outputs.

use std::path::{Path, PathBuf};

use hipgnn_core::model::HipgnnConfig;
use hipgnn_core::objectives::TrainConfig;
use hipgnn_core::{LaplacianKind, SplitSpec, WeightedGraph};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::{self, GraphPaths};

pub const SNAPSHOT_FILE: &str = "config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding `edges.tsv` and optionally `features.tsv` and
    /// `labels.tsv`; explicit paths below take precedence.
    pub graph_dir: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Pairs excluded from negative sampling.
    pub exclusion: Option<PathBuf>,
    /// Accepted weight interval; unbounded above and 0 below when unset.
    pub weight_min: Option<f64>,
    pub weight_max: Option<f64>,
    /// Z-score each feature column before training.
    pub standardize_features: bool,
}

impl DataConfig {
    pub fn weight_range(&self) -> (f64, f64) {
        (self.weight_min.unwrap_or(0.0), self.weight_max.unwrap_or(f64::INFINITY))
    }

    pub fn paths(&self) -> Result<GraphPaths> {
        let mut paths = match &self.graph_dir {
            Some(dir) => GraphPaths::in_dir(dir),
            None => GraphPaths::default(),
        };
        if let Some(e) = &self.edges {
            paths.edges = e.clone();
        } else if self.graph_dir.is_none() {
            return Err(LabError::Usage("no edge file given (set data.edges or data.graph_dir)".into()));
        }
        if self.features.is_some() {
            paths.features = self.features.clone();
        }
        if self.labels.is_some() {
            paths.labels = self.labels.clone();
        }
        Ok(paths)
    }

    pub fn load(&self) -> Result<WeightedGraph> {
        let g = io::load_graph(&self.paths()?, self.weight_range())?;
        Ok(if self.standardize_features { g.standardize_features() } else { g })
    }

    /// Make relative paths relative to `base` and absolute.
    fn anchor(&mut self, base: &Path) {
        for p in [
            &mut self.graph_dir,
            &mut self.edges,
            &mut self.features,
            &mut self.labels,
            &mut self.exclusion,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub laplacian: LaplacianKind,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            laplacian: LaplacianKind::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_ratio: f64,
    /// Folds used by `cv`; `train` always makes a single split.
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_ratio: 0.8,
            folds: 5,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn spec(&self, fold_count: usize) -> SplitSpec {
        SplitSpec {
            train_ratio: self.train_ratio,
            fold_count,
            seed: self.seed,
            stratified: self.stratified,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub spectral: SpectralConfig,
    pub model: HipgnnConfig,
    pub train: TrainConfig,
    pub split: SplitConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Read a config file; relative data paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&io::read_text(path)?)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = base.canonicalize().map_err(|e| LabError::io(base, e))?;
        cfg.data.anchor(&base);
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    /// Anchor relative data paths at the working directory so a snapshot
    /// stays valid wherever it is read from.
    pub fn absolutize(&mut self) -> Result<()> {
        let cwd = std::env::current_dir().map_err(|e| LabError::io(".", e))?;
        self.data.anchor(&cwd);
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.split.folds == 0 {
            return Err(LabError::Config("split.folds must be positive".into()));
        }
        if !(self.split.train_ratio > 0.0 && self.split.train_ratio < 1.0) {
            return Err(LabError::Config("split.train_ratio must be in (0, 1)".into()));
        }
        if !(self.train.learning_rate > 0.0) {
            return Err(LabError::Config("train.learning_rate must be positive".into()));
        }
        if self.train.epochs == 0 {
            return Err(LabError::Config("train.epochs must be positive".into()));
        }
        Ok(())
    }
}
