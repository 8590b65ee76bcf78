//! Prompting, constrained decoding, model transport and activation caching.

mod activations;
mod client;
mod journal;
mod mock;
mod prompt;
mod store;

pub use activations::{
    activation_cache_load, activation_cache_store, activation_path, decode as decode_activations,
    encode as encode_activations, ActivationError, ActivationMatrix,
};
pub use client::{
    query_feature, run_bounded, OpenAiClient, Provider, ProviderError, QueryLimits, QueryOutcome,
    QueryResult,
};
pub use journal::{QueryJournal, QueryKey};
pub use mock::{MockActivationConfig, MockAnswers, MockProvider};
pub use prompt::{
    build_feature_prompt, build_value_schema, parse_feature_response, value_schema_json,
    FeatureValue, Prompt, ResponseError,
};
pub use store::{ActivationStore, FetchError};
