//! reqwest-based backends speaking small JSON protocols.
//!
//! * chat — OpenAI-style chat completions: posts `{model, messages}` and reads
//!   `choices[0].message.content`.
//! * embeddings — OpenAI-style: posts `{model?, input}` and reads
//!   `data[0].embedding`.
//! * NLI — a flat scorer: posts `{premise, hypothesis}` and reads
//!   `{entailment, neutral, contradiction}`.
//!
//! All three share one transport policy: optional bearer auth, bounded
//! exponential backoff (base delay doubling per attempt) for transport
//! failures / 429 / 5xx, no retries for anything else, and a per-backend
//! semaphore bounding in-flight requests.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use super::{BackendError, ChatBackend, EmbeddingBackend, NliBackend, NliTriple};

fn snippet(text: &str) -> String {
    const LIMIT: usize = 200;
    if text.chars().count() <= LIMIT {
        text.to_string()
    } else {
        let head: String = text.chars().take(LIMIT).collect();
        format!("{head}…")
    }
}

/// Transport knobs shared by the HTTP backends.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpOptions {
    pub timeout: Duration,
    /// Delay before the first retry; doubles on each subsequent one.
    pub retry_base: Duration,
    /// Retries allowed after the initial attempt, for retryable failures only.
    pub max_retries: u32,
    /// Maximum in-flight requests for this backend.
    pub concurrency: usize,
}

impl Default for HttpOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            retry_base: Duration::from_millis(500),
            max_retries: 3,
            concurrency: 4,
        }
    }
}

/// POSTs JSON to one endpoint with auth, retry, and concurrency handling.
struct JsonClient {
    client: reqwest::Client,
    endpoint: reqwest::Url,
    token: Option<String>,
    options: HttpOptions,
    permits: Arc<Semaphore>,
}

impl JsonClient {
    fn new(
        endpoint: &str,
        token: Option<String>,
        options: HttpOptions,
    ) -> Result<Self, BackendError> {
        let endpoint = reqwest::Url::parse(endpoint).map_err(|err| {
            BackendError::Configuration(format!("invalid endpoint {endpoint:?}: {err}"))
        })?;
        if options.concurrency == 0 {
            return Err(BackendError::Configuration(
                "concurrency must be at least 1".into(),
            ));
        }
        let client = reqwest::Client::builder()
            .timeout(options.timeout)
            .build()
            .map_err(|err| BackendError::Configuration(err.to_string()))?;
        let permits = Arc::new(Semaphore::new(options.concurrency));
        Ok(Self {
            client,
            endpoint,
            token,
            options,
            permits,
        })
    }

    async fn post(&self, body: &Value) -> Result<Value, BackendError> {
        // Held across retries so a struggling request still counts against the
        // in-flight budget.
        let _permit = self.permits.acquire().await.expect("semaphore closed");
        let mut delay = self.options.retry_base;
        let mut retries_left = self.options.max_retries;
        loop {
            match self.post_once(body).await {
                Err(err) if retries_left > 0 && err.retryable() => {
                    log::debug!("retrying {} after {err} (delay {delay:?})", self.endpoint);
                    tokio::time::sleep(delay).await;
                    delay *= 2;
                    retries_left -= 1;
                }
                other => return other,
            }
        }
    }

    async fn post_once(&self, body: &Value) -> Result<Value, BackendError> {
        let mut request = self.client.post(self.endpoint.clone()).json(body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .await
            .map_err(|err| BackendError::Transport(err.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let body_snippet = snippet(&response.text().await.unwrap_or_default());
            return Err(BackendError::HttpStatus {
                status: status.as_u16(),
                body_snippet,
            });
        }
        response
            .json()
            .await
            .map_err(|err| BackendError::ResponseShape(format!("body is not JSON: {err}")))
    }
}

/// OpenAI-style chat completions endpoint.
pub struct HttpChat {
    client: JsonClient,
    model: String,
}

impl HttpChat {
    pub fn new(
        endpoint: &str,
        model: impl Into<String>,
        token: Option<String>,
        options: HttpOptions,
    ) -> Result<Self, BackendError> {
        Ok(Self {
            client: JsonClient::new(endpoint, token, options)?,
            model: model.into(),
        })
    }
}

#[async_trait]
impl ChatBackend for HttpChat {
    fn model_name(&self) -> &str {
        &self.model
    }

    async fn complete(&self, prompt: &str, _sample_index: u32) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let reply = self.client.post(&body).await?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| BackendError::ResponseShape("missing choices[0].message.content".into()))
    }
}

/// OpenAI-style embeddings endpoint.
pub struct HttpEmbedding {
    client: JsonClient,
    model: Option<String>,
}

impl HttpEmbedding {
    pub fn new(
        endpoint: &str,
        model: Option<String>,
        token: Option<String>,
        options: HttpOptions,
    ) -> Result<Self, BackendError> {
        Ok(Self {
            client: JsonClient::new(endpoint, token, options)?,
            model,
        })
    }
}

#[async_trait]
impl EmbeddingBackend for HttpEmbedding {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let body = match &self.model {
            Some(model) => json!({ "model": model, "input": text }),
            None => json!({ "input": text }),
        };
        let reply = self.client.post(&body).await?;
        let components = reply
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::ResponseShape("missing data[0].embedding".into()))?;
        components
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    BackendError::ResponseShape(format!("non-numeric embedding component: {v}"))
                })
            })
            .collect()
    }
}

/// Flat NLI scoring endpoint.
pub struct HttpNli {
    client: JsonClient,
}

impl HttpNli {
    pub fn new(
        endpoint: &str,
        token: Option<String>,
        options: HttpOptions,
    ) -> Result<Self, BackendError> {
        Ok(Self {
            client: JsonClient::new(endpoint, token, options)?,
        })
    }
}

#[async_trait]
impl NliBackend for HttpNli {
    async fn infer(&self, premise: &str, hypothesis: &str) -> Result<NliTriple, BackendError> {
        let body = json!({ "premise": premise, "hypothesis": hypothesis });
        let reply = self.client.post(&body).await?;
        let component = |key: &str| -> Result<f64, BackendError> {
            reply
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| BackendError::ResponseShape(format!("missing numeric {key:?}")))
        };
        NliTriple::new(
            component("entailment")?,
            component("neutral")?,
            component("contradiction")?,
        )
    }
}
