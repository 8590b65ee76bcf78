//! Toolkit for measuring what large language models capture about
//! combinatorial-optimization instances.
//!
//! The crate covers the whole experimental loop:
//!
//! * [`instances`] parses bin-packing, graph-coloring, job-shop and knapsack
//!   benchmark files and per-instance algorithm performance tables;
//! * [`render`] turns an instance into its `standard`, `natural_language`
//!   and `code_like` textual representations;
//! * [`features`] computes the ground-truth handcrafted features, tiered by
//!   extraction complexity;
//! * [`llmio`] builds constrained-decoding prompts, talks to an
//!   OpenAI-compatible endpoint (or the deterministic [`llmio::MockProvider`]),
//!   and caches hidden-state activations on disk;
//! * [`pooling`] collapses token activations into one vector per instance;
//! * [`probes`] trains linear, MLP and gradient-boosted probes;
//! * [`eval`] holds the metrics and the winner-set stratified splitters;
//! * [`pipeline`] wires everything into the direct-querying, feature-probing
//!   and algorithm-selection experiments and writes the reports.

pub mod eval;
pub mod features;
pub mod instances;
pub mod llmio;
pub mod matrix;
pub mod pipeline;
pub mod pooling;
pub mod probes;
pub mod render;
pub mod synth;
mod util;

pub use features::{
    extract_features, feature_catalog, Complexity, FeatureSpec, FeatureVector, ValueType,
};
pub use instances::{parse_instance, Instance, ObjectiveSense, PerformanceTable, ProblemKind};
pub use matrix::Matrix;
pub use pooling::{pool, PooledEmbedding, PoolingStrategy};
pub use render::{render, Rendering, Representation};
