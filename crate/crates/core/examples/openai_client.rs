//! Query an OpenAI-compatible server for one feature.
//!
//! ```sh
//! COPA_ENDPOINT=http://localhost:8000/v1 COPA_MODEL=meta-llama/Llama-3.2-3B-Instruct \
//!     cargo run --example openai_client
//! ```
//! Without `COPA_ENDPOINT` the request body is printed instead.

use std::time::Duration;

use copa::features::find_feature;
use copa::instances::{parse_instance, ProblemKind};
use copa::llmio::{
    build_feature_prompt, query_feature, value_schema_json, OpenAiClient, QueryLimits,
};
use copa::render::render_standard;

fn main() {
    let inst = parse_instance(ProblemKind::Gcp, "path3", "p edge 3 2\ne 1 2\ne 2 3\n").unwrap();
    let spec = find_feature(ProblemKind::Gcp, "feat_density").unwrap();
    let prompt = build_feature_prompt(ProblemKind::Gcp, spec, &render_standard(&inst));
    let schema = value_schema_json(spec.value_type);

    let model = std::env::var("COPA_MODEL").unwrap_or_else(|_| "default".into());
    let Ok(endpoint) = std::env::var("COPA_ENDPOINT") else {
        let client = OpenAiClient::new("http://unused", model, None, Duration::from_secs(1));
        println!(
            "{}",
            serde_json::to_string_pretty(&client.completion_body(&prompt.text, &schema)).unwrap()
        );
        return;
    };
    let client = OpenAiClient::new(
        endpoint,
        model,
        std::env::var("COPA_API_KEY").ok(),
        Duration::from_secs(120),
    );
    let res = query_feature(&client, &prompt, &schema, &QueryLimits::default());
    println!(
        "{:?} -> {:?} after {} attempt(s), {} ms",
        res.raw, res.outcome, res.attempts, res.latency_ms
    );
}
