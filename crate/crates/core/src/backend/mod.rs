//! The summarization-model contract used by the selection strategies and the
//! experiment harness.
//!
//! A backend embeds documents, samples several summaries per document with
//! dropout active, retrains from its initial weights on a labeled set, and
//! produces deterministic summaries for evaluation. [`MockBackend`] implements
//! this in-process and deterministically; [`RemoteBackend`] speaks the JSON
//! wire protocol to an external model server.

mod conformance;
mod mock;
mod remote;
mod server;
pub mod wire;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocId, Document};
use crate::embedspace::{EmbedError, EmbeddingMatrix};

pub use conformance::{run_conformance, ConformanceCheck, ConformanceReport};
pub use mock::MockBackend;
pub use remote::RemoteBackend;
pub use server::{serve, ServerHandle};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("model error{}: {message}", doc_id.as_ref().map(|d| format!(" on {d}")).unwrap_or_default())]
    Model {
        doc_id: Option<DocId>,
        message: String,
    },
    #[error("invalid request: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Embedding(#[from] EmbedError),
}

impl BackendError {
    /// Attach a document id to model and transport failures.
    pub fn for_doc(self, id: &DocId) -> Self {
        match self {
            BackendError::Model {
                doc_id: None,
                message,
            } => BackendError::Model {
                doc_id: Some(id.clone()),
                message,
            },
            BackendError::Transport { endpoint, message } => BackendError::Model {
                doc_id: Some(id.clone()),
                message: format!("transport error talking to {endpoint}: {message}"),
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Remote,
}

/// Which model to talk to and how to decode with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Base URL, remote backends only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub beams: usize,
    pub max_summary_tokens: usize,
    pub mc_passes_default: usize,
    /// Embedding dimension; for remote backends this is learned from `/health`.
    pub dim: usize,
}

impl BackendDescriptor {
    pub fn mock() -> Self {
        BackendDescriptor {
            kind: BackendKind::Mock,
            endpoint: None,
            beams: 1,
            max_summary_tokens: 64,
            mc_passes_default: 10,
            dim: 768,
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Result<Self, BackendError> {
        let endpoint = endpoint.into();
        let ok = (endpoint.starts_with("http://") || endpoint.starts_with("https://"))
            && endpoint
                .split("://")
                .nth(1)
                .is_some_and(|rest| !rest.is_empty() && !rest.contains(' '));
        if !ok {
            return Err(BackendError::InvalidArgument(format!(
                "malformed endpoint {endpoint:?}"
            )));
        }
        Ok(BackendDescriptor {
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.trim_end_matches('/').to_string()),
            beams: 4,
            max_summary_tokens: 128,
            mc_passes_default: 10,
            dim: 0,
        })
    }

    /// `mock` or an `http(s)://` URL.
    pub fn parse(spec: &str) -> Result<Self, BackendError> {
        if spec == "mock" {
            Ok(Self::mock())
        } else {
            Self::remote(spec)
        }
    }
}

/// `n` summaries sampled for one document with dropout active.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticBatch {
    pub doc_id: DocId,
    pub summaries: Vec<String>,
}

/// Identifies the model weights after a reset-and-finetune.
///
/// `sequence` grows by one per finetune call on a backend instance;
/// `fingerprint` depends only on the training data and seed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateVersion {
    pub sequence: u64,
    pub fingerprint: String,
}

impl fmt::Display for StateVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.fingerprint, self.sequence)
    }
}

pub trait SummarizationBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// One row per text, all of the same dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// Sample `n` summaries of `doc` with dropout enabled.
    fn generate_stochastic(
        &self,
        doc: &Document,
        n: usize,
        noise_seed: u64,
    ) -> Result<StochasticBatch, BackendError>;

    /// Reload the initial weights and train on `labeled` (source, reference) pairs.
    fn reset_and_finetune(
        &mut self,
        labeled: &[(String, String)],
        seed: u64,
    ) -> Result<StateVersion, BackendError>;

    /// Deterministic decoding, one summary per text, order preserved.
    fn summarize(&self, texts: &[String]) -> Result<Vec<String>, BackendError>;
}

/// Embed the source text of each document into a matrix keyed by doc id.
pub fn embed_documents(
    backend: &dyn SummarizationBackend,
    docs: &[Document],
) -> Result<EmbeddingMatrix, BackendError> {
    if docs.is_empty() {
        return Err(BackendError::InvalidArgument("nothing to embed".into()));
    }
    let texts: Vec<String> = docs.iter().map(|d| d.source.clone()).collect();
    let rows = backend.embed(&texts)?;
    if rows.len() != docs.len() {
        return Err(BackendError::Protocol(format!(
            "embed returned {} rows for {} texts",
            rows.len(),
            docs.len()
        )));
    }
    let dim = rows[0].len();
    Ok(EmbeddingMatrix::from_rows(
        dim,
        docs.iter().map(|d| d.id.clone()).zip(rows),
    )?)
}
