use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::*;
use super::{BackendDescriptor, BackendError, StateVersion, StochasticBatch, SummarizationBackend};
use crate::corpus::Document;

/// HTTP client for an external model server.
///
/// Every response is checked against the request (row counts, vector
/// dimension, number of samples) before it is handed back, so a misbehaving
/// server surfaces as [`BackendError::Protocol`] rather than bad scores.
#[derive(Debug)]
pub struct RemoteBackend {
    descriptor: BackendDescriptor,
    endpoint: String,
    agent: ureq::Agent,
    model: String,
    sequence: u64,
}

impl RemoteBackend {
    /// Connect and read `/health` to learn the model name and embedding size.
    pub fn connect(mut descriptor: BackendDescriptor) -> Result<Self, BackendError> {
        let endpoint = descriptor.endpoint.clone().ok_or_else(|| {
            BackendError::InvalidArgument("remote backend needs an endpoint".into())
        })?;
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .build();
        let mut backend = RemoteBackend {
            descriptor: descriptor.clone(),
            endpoint,
            agent,
            model: String::new(),
            sequence: 0,
        };
        let health = backend.health()?;
        if !health.ok {
            return Err(BackendError::Model {
                doc_id: None,
                message: format!("server reports unhealthy model {}", health.model),
            });
        }
        if health.dim == 0 {
            return Err(BackendError::Protocol(
                "health reports embedding dimension 0".into(),
            ));
        }
        descriptor.dim = health.dim;
        backend.descriptor = descriptor;
        backend.model = health.model;
        Ok(backend)
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let resp = self
            .agent
            .get(&format!("{}/health", self.endpoint))
            .call()
            .map_err(|e| self.transport(e))?;
        resp.into_json()
            .map_err(|e| BackendError::Protocol(format!("/health: {e}")))
    }

    fn transport(&self, e: ureq::Error) -> BackendError {
        match e {
            ureq::Error::Status(code, resp) => BackendError::Model {
                doc_id: None,
                message: format!(
                    "server returned {code}: {}",
                    resp.into_string().unwrap_or_default()
                ),
            },
            other => BackendError::Transport {
                endpoint: self.endpoint.clone(),
                message: other.to_string(),
            },
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, BackendError> {
        let resp = self
            .agent
            .post(&format!("{}{path}", self.endpoint))
            .send_json(body)
            .map_err(|e| self.transport(e))?;
        resp.into_json()
            .map_err(|e| BackendError::Protocol(format!("{path}: {e}")))
    }
}

impl SummarizationBackend for RemoteBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::InvalidArgument(
                "embed needs at least one text".into(),
            ));
        }
        let resp: EmbedResponse = self.post(
            "/embed",
            &EmbedRequest {
                texts: texts.to_vec(),
            },
        )?;
        if resp.dim != self.descriptor.dim {
            return Err(BackendError::Protocol(format!(
                "/embed dim {} differs from advertised {}",
                resp.dim, self.descriptor.dim
            )));
        }
        if resp.vectors.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "/embed returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        if let Some(bad) = resp.vectors.iter().position(|v| v.len() != resp.dim) {
            return Err(BackendError::Protocol(format!(
                "/embed vector {bad} has length {} instead of {}",
                resp.vectors[bad].len(),
                resp.dim
            )));
        }
        if resp.vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(BackendError::Protocol(
                "/embed returned a non-finite value".into(),
            ));
        }
        Ok(resp.vectors)
    }

    fn generate_stochastic(
        &self,
        doc: &Document,
        n: usize,
        noise_seed: u64,
    ) -> Result<StochasticBatch, BackendError> {
        if n < 2 {
            return Err(BackendError::InvalidArgument(format!(
                "need at least 2 passes, got {n}"
            )));
        }
        let req = GenerateRequest {
            text: doc.source.clone(),
            n,
            seed: noise_seed,
            dropout: true,
        };
        let resp: GenerateResponse = self
            .post("/generate", &req)
            .map_err(|e| e.for_doc(&doc.id))?;
        if resp.summaries.len() != n {
            return Err(BackendError::Protocol(format!(
                "/generate returned {} summaries for n={n} on {}",
                resp.summaries.len(),
                doc.id
            )));
        }
        Ok(StochasticBatch {
            doc_id: doc.id.clone(),
            summaries: resp.summaries,
        })
    }

    fn reset_and_finetune(
        &mut self,
        labeled: &[(String, String)],
        seed: u64,
    ) -> Result<StateVersion, BackendError> {
        if labeled.is_empty() {
            return Err(BackendError::InvalidArgument(
                "finetune needs a non-empty labeled set".into(),
            ));
        }
        let req = FinetuneRequest {
            pairs: labeled
                .iter()
                .map(|(s, r)| Pair {
                    source: s.clone(),
                    summary: r.clone(),
                })
                .collect(),
            seed,
            reset: true,
        };
        let resp: FinetuneResponse = self.post("/finetune", &req)?;
        if resp.state_version.is_empty() {
            return Err(BackendError::Protocol(
                "/finetune returned an empty state_version".into(),
            ));
        }
        self.sequence += 1;
        Ok(StateVersion {
            sequence: self.sequence,
            fingerprint: resp.state_version,
        })
    }

    fn summarize(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp: SummarizeResponse = self.post(
            "/summarize",
            &SummarizeRequest {
                texts: texts.to_vec(),
            },
        )?;
        if resp.summaries.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "/summarize returned {} summaries for {} texts",
                resp.summaries.len(),
                texts.len()
            )));
        }
        Ok(resp.summaries)
    }
}
