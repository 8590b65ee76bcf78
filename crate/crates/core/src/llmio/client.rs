//! Talking to a model service.
//!
//! Generation goes through an OpenAI-compatible `POST {base}/chat/completions`
//! with a `response_format` JSON-schema constraint and temperature 0.
//! Hidden states come from a sidecar `POST {base}/hidden_states` returning
//! `{"tokens": T, "dim": D, "data": [T*D floats, row-major]}`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::activations::ActivationMatrix;
use super::prompt::{parse_feature_response, FeatureValue, Prompt, ResponseError};
use crate::render::Rendering;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider refused: {0}")]
    Refusal(String),
    #[error("malformed provider reply: {0}")]
    BadReply(String),
    #[error("provider does not export hidden states")]
    Unsupported,
}

impl ProviderError {
    fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A model backend: constrained generation plus hidden-state export.
pub trait Provider: Send + Sync {
    /// Returns the raw text of the model's answer to `prompt`, decoded under
    /// `schema`.
    fn complete(&self, prompt: &str, schema: &serde_json::Value) -> Result<String, ProviderError>;

    /// Final-layer activations for the rendering's token sequence, without
    /// generating.
    fn hidden_states(&self, rendering: &Rendering) -> Result<ActivationMatrix, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, prompt: &str, schema: &serde_json::Value) -> Result<String, ProviderError> {
        (**self).complete(prompt, schema)
    }

    fn hidden_states(&self, rendering: &Rendering) -> Result<ActivationMatrix, ProviderError> {
        (**self).hidden_states(rendering)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryLimits {
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_factor: f64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for QueryLimits {
    fn default() -> Self {
        QueryLimits {
            retries: 3,
            backoff_initial_ms: 500,
            backoff_factor: 2.0,
            max_in_flight: 8,
            timeout_secs: 600,
        }
    }
}

impl QueryLimits {
    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.backoff_initial_ms as f64 * self.backoff_factor.powi(attempt as i32);
        Duration::from_millis(ms.min(60_000.0) as u64)
    }
}

/// Every query ends in exactly one of these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum QueryOutcome {
    Value,
    Null,
    ParseFailure(ResponseError),
    TransportFailure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub raw: Option<String>,
    pub value: Option<FeatureValue>,
    pub outcome: QueryOutcome,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Sends one feature query. Failures are recorded in the result, never
/// returned as errors, so a batch always completes.
pub fn query_feature(
    provider: &dyn Provider,
    prompt: &Prompt,
    schema: &serde_json::Value,
    limits: &QueryLimits,
) -> QueryResult {
    let start = Instant::now();
    let mut attempts = 0;
    let reply = loop {
        attempts += 1;
        match provider.complete(&prompt.text, schema) {
            Ok(text) => break Ok(text),
            Err(e) if e.retryable() && attempts <= limits.retries => {
                log::debug!("attempt {attempts} for {} failed: {e}", prompt.feature.name);
                std::thread::sleep(limits.backoff(attempts - 1));
            }
            Err(e) => break Err(e),
        }
    };
    let latency_ms = start.elapsed().as_millis() as u64;
    match reply {
        Err(e) => QueryResult {
            raw: None,
            value: None,
            outcome: QueryOutcome::TransportFailure(e.to_string()),
            latency_ms,
            attempts,
        },
        Ok(raw) => {
            let (value, outcome) = match parse_feature_response(&raw, &prompt.feature) {
                Ok(Some(v)) => (Some(v), QueryOutcome::Value),
                Ok(None) => (None, QueryOutcome::Null),
                Err(e) => (None, QueryOutcome::ParseFailure(e)),
            };
            QueryResult {
                raw: Some(raw),
                value,
                outcome,
                latency_ms,
                attempts,
            }
        }
    }
}

/// Runs `f` over `items` on at most `max_in_flight` worker threads and
/// returns the results in input order.
pub fn run_bounded<T: Sync, R: Send>(
    items: &[T],
    max_in_flight: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let workers = max_in_flight.max(1).min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Blocking client for OpenAI-compatible servers (vLLM and friends).
pub struct OpenAiClient {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl OpenAiClient {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        OpenAiClient {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            model: model.into(),
            api_key,
            agent,
        }
    }

    /// Request body sent for one constrained completion.
    pub fn completion_body(&self, prompt: &str, schema: &serde_json::Value) -> serde_json::Value {
        json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": 0,
            "response_format": {
                "type": "json_schema",
                "json_schema": { "name": "feature_value", "schema": schema, "strict": true }
            }
        })
    }

    fn post(
        &self,
        path: &str,
        body: &serde_json::Value,
    ) -> Result<serde_json::Value, ProviderError> {
        let mut req = self
            .agent
            .post(&format!("{}/{path}", self.base_url))
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body) {
            Ok(resp) => resp
                .into_json()
                .map_err(|e| ProviderError::BadReply(e.to_string())),
            Err(ureq::Error::Status(status, resp)) => Err(ProviderError::Status {
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                if msg.contains("timed out") {
                    Err(ProviderError::Timeout)
                } else {
                    Err(ProviderError::Transport(msg))
                }
            }
        }
    }
}

#[derive(Deserialize)]
struct HiddenStates {
    tokens: usize,
    dim: usize,
    data: Vec<f32>,
}

impl Provider for OpenAiClient {
    fn complete(&self, prompt: &str, schema: &serde_json::Value) -> Result<String, ProviderError> {
        let reply = self.post("chat/completions", &self.completion_body(prompt, schema))?;
        let choice = &reply["choices"][0];
        if let Some(refusal) = choice["message"]["refusal"].as_str() {
            return Err(ProviderError::Refusal(refusal.to_owned()));
        }
        if choice["finish_reason"].as_str() == Some("content_filter") {
            return Err(ProviderError::Refusal("content_filter".into()));
        }
        choice["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| ProviderError::BadReply("missing choices[0].message.content".into()))
    }

    fn hidden_states(&self, rendering: &Rendering) -> Result<ActivationMatrix, ProviderError> {
        let reply = self.post(
            "hidden_states",
            &json!({ "model": self.model, "prompt": rendering.text }),
        )?;
        let hs: HiddenStates =
            serde_json::from_value(reply).map_err(|e| ProviderError::BadReply(e.to_string()))?;
        ActivationMatrix::new(
            rendering.instance_name.clone(),
            rendering.representation,
            hs.tokens,
            hs.dim,
            hs.data,
        )
        .map_err(|e| ProviderError::BadReply(e.to_string()))
    }
}
