//! Client for the transformer embedding sidecar.
//!
//! `POST {url}/embed` with `{"texts": [...], "normalize": false}` answers
//! `{"vectors": [[...]], "model_id": "...", "truncated": [...]}`. Requests
//! carry at most [`MAX_BATCH`] texts; larger inputs are split and sent with a
//! bounded number of requests in flight.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

use super::{EmbeddingBackend, DEFAULT_DIM};

/// Environment variable holding the sidecar base URL.
pub const SIDECAR_URL_ENV: &str = "ONTOREL_EMBED_URL";

/// Largest batch the sidecar accepts in one request.
pub const MAX_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub model_id: String,
    #[serde(default)]
    pub truncated: Vec<bool>,
}

/// `GET {url}/health` answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_id: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub url: String,
    pub dim: usize,
    pub timeout: Duration,
    pub retries: usize,
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            url: String::new(),
            dim: DEFAULT_DIM,
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(250),
            max_in_flight: 4,
        }
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retryable(String),
    Fatal(Error),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { config, agent }
    }

    fn endpoint(&self) -> String {
        format!("{}/embed", self.config.url.trim_end_matches('/'))
    }

    /// Queries the sidecar status and checks that it serves the configured
    /// dimension.
    pub fn health(&self) -> Result<Health> {
        let url = format!("{}/health", self.config.url.trim_end_matches('/'));
        let mut response = self.agent.get(&url).call().map_err(|e| Error::Transport {
            retries: 0,
            message: e.to_string(),
        })?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(Error::Contract(format!("health check answered HTTP {status}")));
        }
        let health: Health = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Contract(format!("malformed health response: {e}")))?;
        if health.dim != self.config.dim {
            return Err(Error::Contract(format!(
                "sidecar serves dim {}, expected {}",
                health.dim, self.config.dim
            )));
        }
        Ok(health)
    }

    fn attempt(&self, request: &EmbedRequest) -> std::result::Result<EmbedResponse, Attempt> {
        let mut response = self
            .agent
            .post(&self.endpoint())
            .send_json(request)
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Retryable(format!("sidecar answered HTTP {status}")));
        }
        if status != 200 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(Error::Contract(format!(
                "sidecar rejected request with HTTP {status}: {}",
                body.trim()
            ))));
        }
        response
            .body_mut()
            .read_json::<EmbedResponse>()
            .map_err(|e| Attempt::Fatal(Error::Contract(format!("malformed sidecar response: {e}"))))
    }

    fn send(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let request = EmbedRequest {
            texts: texts.to_vec(),
            normalize: false,
        };
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(self.config.backoff * (1 << (attempt - 1)));
            }
            match self.attempt(&request) {
                Ok(response) => return self.check(texts.len(), response),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(message)) => last = message,
            }
        }
        Err(Error::Transport {
            retries: self.config.retries,
            message: last,
        })
    }

    fn check(&self, expected: usize, response: EmbedResponse) -> Result<Vec<EmbeddingVector>> {
        if response.vectors.len() != expected {
            return Err(Error::Contract(format!(
                "sidecar returned {} vectors for {expected} texts",
                response.vectors.len()
            )));
        }
        response
            .vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.len() != self.config.dim {
                    return Err(Error::Contract(format!(
                        "sidecar vector {i} has dim {}, expected {}",
                        v.len(),
                        self.config.dim
                    )));
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl EmbeddingBackend for RemoteBackend {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let chunks: Vec<&[String]> = texts.chunks(MAX_BATCH).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.config.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<EmbeddingVector>>> = thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| scope.spawn(move || self.send(chunk)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding request thread panicked"))
                    .collect()
            });
            for result in results {
                out.extend(result?);
            }
        }
        Ok(out)
    }
}
