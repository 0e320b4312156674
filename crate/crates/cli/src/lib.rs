//! Experiment orchestration: a manifest-driven pipeline covering phantom
//! generation, sinogram simulation, offline convergence targets, early-
//! stopped reconstructions, network training (iteration completion or plain
//! post-processing), inference and evaluation.
//!
//! Every stage records the hash of the configuration slice that produced
//! its artifacts; re-running a stage with an unchanged hash is a no-op
//! unless forced.

pub mod config;
pub mod manifest;
pub mod stages;

pub use config::{
    DatasetSource, ExperimentConfig, GeometrySource, Seeds, TrainMode,
};
pub use manifest::{Entry, ExperimentManifest, Split};
pub use stages::{
    cmd_build_ris, cmd_build_targets, cmd_evaluate, cmd_generate_data, cmd_profile,
    cmd_reconstruct, cmd_simulate, cmd_train, EvaluationOutcome, ReconstructOutcome,
    TrainOutcome,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("stage {stage} requires artifacts that are missing: {missing:?}")]
    MissingArtifacts { stage: String, missing: Vec<String> },
    #[error("checkpoint was produced for a different setup: {0}")]
    ProvenanceMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Tomo(#[from] rising_tomo::TomoError),
    #[error(transparent)]
    Phantom(#[from] rising_phantom::PhantomError),
    #[error(transparent)]
    Solver(#[from] rising_solver::SolverError),
    #[error(transparent)]
    Neural(#[from] rising_neural::NeuralError),
    #[error(transparent)]
    Metrics(#[from] rising_metrics::MetricsError),
}

impl PipelineError {
    /// Stable machine-readable category for the JSON error channel.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::Manifest(_) => "manifest",
            PipelineError::MissingArtifacts { .. } => "missing_artifacts",
            PipelineError::ProvenanceMismatch(_) => "provenance_mismatch",
            PipelineError::Io { .. } => "io",
            PipelineError::Tomo(_) => "tomo",
            PipelineError::Phantom(_) => "phantom",
            PipelineError::Solver(_) => "solver",
            PipelineError::Neural(_) => "neural",
            PipelineError::Metrics(_) => "metrics",
        }
    }
}
