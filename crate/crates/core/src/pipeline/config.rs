use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::instances::{ObjectiveSense, ProblemKind};
use crate::llmio::{MockActivationConfig, MockAnswers, QueryLimits};
use crate::pooling::PoolingStrategy;
use crate::probes::{ClassifierKind, RegressorKind, TrainConfig};
use crate::render::Representation;

/// Inputs a selection classifier can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Embeddings,
    Isa,
    Handcrafted,
}

impl InputSource {
    pub const ALL: [InputSource; 3] = [
        InputSource::Embeddings,
        InputSource::Isa,
        InputSource::Handcrafted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InputSource::Embeddings => "embeddings",
            InputSource::Isa => "isa",
            InputSource::Handcrafted => "handcrafted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// Deterministic in-process mock.
    Mock {
        #[serde(default = "default_answers")]
        answers: MockAnswers,
        #[serde(default)]
        activations: MockActivationConfig,
    },
    /// OpenAI-compatible server. `COPA_ENDPOINT` and `COPA_API_KEY`
    /// override `endpoint` and `api_key`.
    Openai {
        endpoint: String,
        model: String,
        #[serde(default)]
        api_key: Option<String>,
    },
    /// No model access; activations must already be cached.
    Offline,
}

fn default_answers() -> MockAnswers {
    MockAnswers::Regex
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Mock {
            answers: MockAnswers::Regex,
            activations: MockActivationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problems: Vec<ProblemKind>,
    pub representations: Vec<Representation>,
    pub pooling: Vec<PoolingStrategy>,
    pub regressors: Vec<RegressorKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub selection_sources: Vec<InputSource>,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Activation cache; read first, filled from the provider on a miss.
    pub activations_dir: Option<PathBuf>,
    /// Direct-query journal (JSON lines) for resumable runs.
    pub journal: Option<PathBuf>,
    pub provider: ProviderConfig,
    /// Expected hidden-state width; mismatching matrices are rejected.
    pub hidden_dim: Option<usize>,
    pub seed: u64,
    pub replicates: usize,
    pub split_ratio: f64,
    pub folds: usize,
    pub tie_tolerance: f64,
    /// Objective direction per problem; defaults to maximize for KP and
    /// minimize otherwise.
    pub senses: BTreeMap<ProblemKind, ObjectiveSense>,
    pub query: QueryLimits,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problems: ProblemKind::ALL.to_vec(),
            representations: Representation::ALL.to_vec(),
            pooling: PoolingStrategy::ALL.to_vec(),
            regressors: RegressorKind::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            selection_sources: InputSource::ALL.to_vec(),
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            activations_dir: None,
            journal: None,
            provider: ProviderConfig::default(),
            hidden_dim: None,
            seed: 0,
            replicates: 1,
            split_ratio: 0.7,
            folds: 5,
            tie_tolerance: crate::eval::DEFAULT_TIE_TOLERANCE,
            senses: BTreeMap::new(),
            query: QueryLimits::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads the file, resolves relative paths against its directory, applies
    /// environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Io(path.to_owned(), e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        fix(&mut self.output_dir);
        if let Some(p) = self.activations_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.journal.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let ProviderConfig::Openai {
            endpoint, api_key, ..
        } = &mut self.provider
        {
            if let Some(e) = get("COPA_ENDPOINT") {
                *endpoint = e;
            }
            if let Some(k) = get("COPA_API_KEY") {
                *api_key = Some(k);
            }
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_owned()));
        if self.problems.is_empty() {
            return bad("`problems` is empty");
        }
        if self.representations.is_empty() {
            return bad("`representations` is empty");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("`split_ratio` must lie in (0, 1)");
        }
        if self.folds < 2 {
            return bad("`folds` must be at least 2");
        }
        if self.replicates == 0 {
            return bad("`replicates` must be at least 1");
        }
        if !(self.tie_tolerance >= 0.0) {
            return bad("`tie_tolerance` must be non-negative");
        }
        let t = &self.train;
        if t.mlp.hidden_width == 0
            || t.mlp.epochs == 0
            || t.mlp.batch_size == 0
            || !(t.mlp.learning_rate > 0.0)
        {
            return bad("mlp settings must be positive");
        }
        if t.gbdt.n_trees == 0
            || t.gbdt.max_depth == 0
            || t.gbdt.min_leaf == 0
            || !(t.gbdt.learning_rate > 0.0)
        {
            return bad("gbdt settings must be positive");
        }
        if let ProviderConfig::Mock { activations, .. } = &self.provider {
            if activations.dim == 0 || activations.max_tokens == 0 {
                return bad("mock activation `dim` and `max_tokens` must be positive");
            }
        }
        Ok(())
    }

    pub fn sense(&self, kind: ProblemKind) -> ObjectiveSense {
        self.senses
            .get(&kind)
            .copied()
            .unwrap_or_else(|| crate::synth::default_sense(kind))
    }

    /// Seed for replicate `r`; replicate 0 uses the configured seed itself.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        if r == 0 {
            self.seed
        } else {
            crate::util::stable_hash(&[&self.seed.to_le_bytes(), &(r as u64).to_le_bytes()])
        }
    }
}
