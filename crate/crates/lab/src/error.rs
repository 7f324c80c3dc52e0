use std::path::PathBuf;

use hipgnn_core::graph::GraphError;
use hipgnn_core::metrics::MetricError;
use hipgnn_core::model::ModelError;
use hipgnn_core::objectives::ObjectiveError;
use hipgnn_core::spectral::SpectralError;
use hipgnn_core::synth::SynthError;
use hipgnn_core::theory::TheoryError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Verification(String),
}

impl LabError {
    /// Machine-readable category printed with every failure.
    pub fn category(&self) -> &'static str {
        match self {
            LabError::Usage(_) => "usage",
            LabError::Io { .. } => "io",
            LabError::Parse { .. } => "parse",
            LabError::Data(_) => "data",
            LabError::Config(_) => "config",
            LabError::Compute(_) => "compute",
            LabError::Verification(_) => "verification",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) => 2,
            LabError::Io { .. } => 3,
            LabError::Parse { .. } => 4,
            LabError::Data(_) => 5,
            LabError::Config(_) => 6,
            LabError::Compute(_) => 7,
            LabError::Verification(_) => 8,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<GraphError> for LabError {
    fn from(e: GraphError) -> Self {
        LabError::Data(e.to_string())
    }
}

impl From<SynthError> for LabError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Parameter(_) => LabError::Usage(e.to_string()),
            SynthError::Graph(g) => g.into(),
        }
    }
}

impl From<SpectralError> for LabError {
    fn from(e: SpectralError) -> Self {
        LabError::Compute(e.to_string())
    }
}

impl From<ModelError> for LabError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) | ModelError::EncodingDim(_) => LabError::Config(e.to_string()),
            _ => LabError::Compute(e.to_string()),
        }
    }
}

impl From<MetricError> for LabError {
    fn from(e: MetricError) -> Self {
        LabError::Data(e.to_string())
    }
}

impl From<TheoryError> for LabError {
    fn from(e: TheoryError) -> Self {
        match e {
            TheoryError::Parameter(_) => LabError::Usage(e.to_string()),
            TheoryError::Graph(g) => g.into(),
            TheoryError::NoPositives => LabError::Data(e.to_string()),
            _ => LabError::Compute(e.to_string()),
        }
    }
}

impl From<ObjectiveError> for LabError {
    fn from(e: ObjectiveError) -> Self {
        match e {
            ObjectiveError::Graph(g) => g.into(),
            ObjectiveError::Model(m) => m.into(),
            ObjectiveError::Metric(m) => m.into(),
            ObjectiveError::Alpha(_) => LabError::Config(e.to_string()),
            ObjectiveError::EmptyTrainSet
            | ObjectiveError::ClassWeight { .. }
            | ObjectiveError::UnlabeledTrainNode(_)
            | ObjectiveError::EmptyPairs(_) => LabError::Data(e.to_string()),
            _ => LabError::Compute(e.to_string()),
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
