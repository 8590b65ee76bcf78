//! The three experiments (direct querying, feature probing, algorithm
//! selection) driven by a [`RunConfig`], and report emission.

mod config;
mod dataset;
mod direct;
mod probing;
mod report;
mod selection;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub use config::{InputSource, ProviderConfig, RunConfig};
pub use dataset::{Dataset, IsaTable};
pub use report::{
    bar_chart_svg, emit_report, long_csv, probing_csv, selection_csv, table3_csv, CellFailure,
    ExperimentKind, MetricsReport, ProblemSplits, Record,
};

use crate::instances::{Instance, ParseError, ProblemKind, TableError};
use crate::llmio::{run_bounded, ActivationStore, MockProvider, OpenAiClient, Provider};
use crate::matrix::Matrix;
use crate::pooling::{pool, PoolingStrategy};
use crate::render::{render, Representation};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, #[source] ParseError),
    #[error("{0}: {1}")]
    Table(PathBuf, #[source] TableError),
    #[error("a model provider is required for {0}")]
    NoProvider(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    DirectQuerying,
    FeatureProbing,
    AlgorithmSelection,
}

/// Pooled embedding matrices (rows follow the dataset's instance order),
/// keyed by problem, representation and pooling.
#[derive(Debug, Clone, Default)]
pub struct Embeddings {
    pub matrices: BTreeMap<(ProblemKind, Representation, PoolingStrategy), Matrix>,
    pub failures: Vec<CellFailure>,
}

/// Loads every configured problem from `cfg.data_dir`.
pub fn load_datasets(cfg: &RunConfig) -> Result<Vec<Dataset>, PipelineError> {
    cfg.problems
        .iter()
        .map(|&k| Dataset::load(&cfg.data_dir, k, cfg.sense(k)))
        .collect()
}

/// The provider described by the configuration. The mock is seeded with
/// the datasets' instances so it can answer for them.
pub fn build_provider(cfg: &RunConfig, datasets: &[Dataset]) -> Option<Box<dyn Provider>> {
    match &cfg.provider {
        ProviderConfig::Mock {
            answers,
            activations,
        } => {
            let all: Vec<Instance> = datasets
                .iter()
                .flat_map(|d| d.instances.iter().cloned())
                .collect();
            Some(Box::new(MockProvider::new(*answers, *activations, &all)))
        }
        ProviderConfig::Openai {
            endpoint,
            model,
            api_key,
        } => Some(Box::new(OpenAiClient::new(
            endpoint.clone(),
            model.clone(),
            api_key.clone(),
            Duration::from_secs(cfg.query.timeout_secs),
        ))),
        ProviderConfig::Offline => None,
    }
}

/// A configured run over loaded datasets.
pub struct Experiment<'a> {
    pub cfg: &'a RunConfig,
    pub datasets: &'a [Dataset],
    provider: Option<&'a dyn Provider>,
}

impl<'a> Experiment<'a> {
    pub fn new(
        cfg: &'a RunConfig,
        datasets: &'a [Dataset],
        provider: Option<&'a dyn Provider>,
    ) -> Self {
        Experiment {
            cfg,
            datasets,
            provider,
        }
    }

    pub fn provider(&self) -> Option<&'a dyn Provider> {
        self.provider
    }

    pub fn direct_querying(&self) -> Result<MetricsReport, PipelineError> {
        direct::run(self)
    }

    /// Fetches (or loads from cache) and pools activations for every
    /// configured problem, representation and pooling strategy.
    pub fn embeddings(&self) -> Embeddings {
        let store = ActivationStore::new(
            self.cfg.activations_dir.clone(),
            self.provider,
            self.cfg.hidden_dim,
        );
        let mut out = Embeddings::default();
        for ds in self.datasets {
            for &rep in &self.cfg.representations {
                let fetched = run_bounded(&ds.instances, self.cfg.query.max_in_flight, |inst| {
                    store.fetch_activations(ds.kind, &render(inst, rep))
                });
                let mut mats = Vec::with_capacity(fetched.len());
                let mut error = None;
                for (inst, r) in ds.instances.iter().zip(fetched) {
                    match r {
                        Ok(m) => mats.push(m),
                        Err(e) => {
                            error = Some(format!("{}: {e}", inst.name()));
                            break;
                        }
                    }
                }
                if let Some(reason) = error {
                    out.failures.push(CellFailure {
                        experiment: ExperimentKind::FeatureProbing,
                        problem: ds.kind,
                        cell: format!("activations/{}", rep.as_str()),
                        reason,
                    });
                    continue;
                }
                for &strategy in &self.cfg.pooling {
                    let pooled: Result<Vec<Vec<f64>>, _> = mats
                        .iter()
                        .map(|m| pool(m, strategy).map(|p| p.vector))
                        .collect();
                    match pooled {
                        Ok(rows) => {
                            let dim = rows.first().map_or(0, Vec::len);
                            out.matrices
                                .insert((ds.kind, rep, strategy), Matrix::from_rows(dim, rows));
                        }
                        Err(e) => out.failures.push(CellFailure {
                            experiment: ExperimentKind::FeatureProbing,
                            problem: ds.kind,
                            cell: format!("pooling/{}/{}", rep.as_str(), strategy.as_str()),
                            reason: e.to_string(),
                        }),
                    }
                }
            }
        }
        out
    }

    pub fn feature_probing(&self, embeddings: &Embeddings) -> MetricsReport {
        probing::run(self, embeddings)
    }

    pub fn algorithm_selection(&self, embeddings: Option<&Embeddings>) -> MetricsReport {
        selection::run(self, embeddings)
    }

    /// Runs the requested stages in order and merges their reports.
    pub fn run(&self, stages: &[Stage]) -> Result<MetricsReport, PipelineError> {
        let mut report = MetricsReport::default();
        if stages.contains(&Stage::DirectQuerying) {
            report.merge(self.direct_querying()?);
        }
        let wants_embeddings = stages.contains(&Stage::FeatureProbing)
            || (stages.contains(&Stage::AlgorithmSelection)
                && self
                    .cfg
                    .selection_sources
                    .contains(&InputSource::Embeddings));
        let embeddings = wants_embeddings.then(|| self.embeddings());
        if let Some(e) = &embeddings {
            report.failures.extend(e.failures.iter().cloned());
        }
        if stages.contains(&Stage::FeatureProbing) {
            report.merge(self.feature_probing(embeddings.as_ref().expect("embeddings collected")));
        }
        if stages.contains(&Stage::AlgorithmSelection) {
            report.merge(self.algorithm_selection(embeddings.as_ref()));
        }
        Ok(report)
    }
}

/// Loads the datasets, builds the provider and runs `stages`.
pub fn run_stages(cfg: &RunConfig, stages: &[Stage]) -> Result<MetricsReport, PipelineError> {
    cfg.validate()?;
    let datasets = load_datasets(cfg)?;
    let provider = build_provider(cfg, &datasets);
    Experiment::new(cfg, &datasets, provider.as_deref()).run(stages)
}

pub fn run_direct_querying(cfg: &RunConfig) -> Result<MetricsReport, PipelineError> {
    run_stages(cfg, &[Stage::DirectQuerying])
}

pub fn run_feature_probing(cfg: &RunConfig) -> Result<MetricsReport, PipelineError> {
    run_stages(cfg, &[Stage::FeatureProbing])
}

pub fn run_algorithm_selection(cfg: &RunConfig) -> Result<MetricsReport, PipelineError> {
    run_stages(cfg, &[Stage::AlgorithmSelection])
}
