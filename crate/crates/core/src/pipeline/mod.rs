//! End-to-end orchestration: files in, files out, one stage at a time.

pub mod config;
pub mod corpus;
pub mod preprocess;
mod stages;

use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::evalmetrics::MetricsError;
use crate::sampler::SampleError;
use crate::seqmodel::ModelError;

pub use config::{Overrides, PipelineConfig};
pub use corpus::{
    read_fragment_file, read_smiles_lines, write_fragment_file, Exclusion, FragmentRecord,
};
pub use preprocess::{fragment_all, preprocess, Accounting, Preprocessed};
pub use stages::{
    fragment_file, run_embed, run_eval, run_pipeline, run_preprocess, run_sample, run_stage,
    run_stats, run_train, run_vocab, stage_is_fresh, PipelineSummary, SampleMeta, StageManifest,
    TrainLog, Workdir,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    Fragment,
    Vocab,
    Embed,
    Train,
    Sample,
    Eval,
    Stats,
}

impl Stage {
    /// Pipeline order. `Fragment` is a standalone utility and not part of it.
    pub const PIPELINE: [Stage; 7] = [
        Stage::Preprocess,
        Stage::Vocab,
        Stage::Embed,
        Stage::Train,
        Stage::Sample,
        Stage::Eval,
        Stage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Fragment => "fragment",
            Stage::Vocab => "vocab",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Sample => "sample",
            Stage::Eval => "eval",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error(transparent)]
    Training(#[from] ModelError),
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl StageError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        StageError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        StageError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Config(_) => 3,
            StageError::Io { .. } => 4,
            StageError::Format { .. } => 5,
            StageError::EmptyCorpus(_) => 6,
            StageError::Training(_) => 7,
            StageError::Sampling(_) => 8,
            StageError::Metrics(_) => 9,
        }
    }
}

#[derive(Debug, Error)]
#[error("stage {stage} failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}
