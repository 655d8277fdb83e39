//! OpenAI-compatible chat and embeddings clients.
//!
//! The wire shapes:
//!
//! * `POST {base_url}/v1/chat/completions` with
//!   `{"model", "temperature", "messages": [{"role": "system", ...}, {"role": "user", ...}]}`;
//!   the reply text is `choices[0].message.content`.
//! * `POST {base_url}/v1/embeddings` with `{"model", "input": [texts]}`;
//!   replies are aligned to the input order via `data[i].index`.
//!
//! A bearer token is read from the `STYLE_AUDIT_API_KEY` environment variable
//! when present; local endpoints work without one. Retry policy lives at the
//! call sites ([`crate::stylegen`] and [`crate::scorers`]), not here, so a
//! failed request surfaces as a single [`AuditError::Endpoint`].

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::error::{AuditError, Result};

/// Environment variable holding the bearer token for remote endpoints.
pub const API_KEY_ENV: &str = "STYLE_AUDIT_API_KEY";

/// One chat-completion request: a system persona (possibly empty) and the
/// user task.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
}

/// Chat-completion transport. Implemented by the HTTP client and by test
/// stubs.
pub trait ChatApi: Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String>;
}

/// Embeddings transport. Returns one vector per input, in input order.
pub trait EmbeddingApi: Sync {
    fn embed(&self, model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Blocking HTTP client for OpenAI-compatible endpoints.
pub struct HttpEndpoint {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    /// Build a client for `base_url` (scheme + host, no trailing `/v1`).
    /// The bearer token is taken from [`API_KEY_ENV`] if set.
    pub fn new(base_url: &str) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|err| AuditError::Endpoint(format!("building HTTP client: {err}")))?;
        Ok(HttpEndpoint {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            client,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<serde_json::Value> {
        let url = format!("{}{path}", self.base_url);
        let mut request = self.client.post(&url).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|err| AuditError::Endpoint(format!("POST {url}: {err}")))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|err| AuditError::Endpoint(format!("POST {url}: reading body: {err}")))?;
        if !status.is_success() {
            let snippet: String = text.chars().take(300).collect();
            return Err(AuditError::Endpoint(format!(
                "POST {url}: HTTP {status}: {snippet}"
            )));
        }
        serde_json::from_str(&text)
            .map_err(|err| AuditError::Endpoint(format!("POST {url}: non-parsable reply: {err}")))
    }
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Deserialize)]
struct EmbeddingsReply {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

impl ChatApi for HttpEndpoint {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        let body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let reply = self.post("/v1/chat/completions", &body)?;
        let parsed: ChatReply = serde_json::from_value(reply).map_err(|err| {
            AuditError::Endpoint(format!("chat reply missing choices[0].message.content: {err}"))
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|choice| choice.message.content)
            .ok_or_else(|| AuditError::Endpoint("chat reply has no choices".into()))
    }
}

impl EmbeddingApi for HttpEndpoint {
    fn embed(&self, model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = json!({"model": model, "input": inputs});
        let reply = self.post("/v1/embeddings", &body)?;
        let parsed: EmbeddingsReply = serde_json::from_value(reply).map_err(|err| {
            AuditError::Endpoint(format!("embeddings reply missing data[].embedding: {err}"))
        })?;
        if parsed.data.len() != inputs.len() {
            return Err(AuditError::Endpoint(format!(
                "embeddings reply has {} entries for {} inputs",
                parsed.data.len(),
                inputs.len()
            )));
        }
        let mut vectors: Vec<Option<Vec<f64>>> = vec![None; inputs.len()];
        for datum in parsed.data {
            let slot = vectors.get_mut(datum.index).ok_or_else(|| {
                AuditError::Endpoint(format!(
                    "embeddings reply index {} out of range (0..{})",
                    datum.index,
                    inputs.len()
                ))
            })?;
            if slot.replace(datum.embedding).is_some() {
                return Err(AuditError::Endpoint(format!(
                    "embeddings reply repeats index {}",
                    datum.index
                )));
            }
        }
        vectors
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                slot.ok_or_else(|| {
                    AuditError::Endpoint(format!("embeddings reply missing index {i}"))
                })
            })
            .collect()
    }
}
