//! JSON bodies of the model-server protocol.
//!
//! | method | path         | request                | response              |
//! |--------|--------------|------------------------|-----------------------|
//! | POST   | `/embed`     | [`EmbedRequest`]       | [`EmbedResponse`]     |
//! | POST   | `/generate`  | [`GenerateRequest`]    | [`GenerateResponse`]  |
//! | POST   | `/finetune`  | [`FinetuneRequest`]    | [`FinetuneResponse`]  |
//! | POST   | `/summarize` | [`SummarizeRequest`]   | [`SummarizeResponse`] |
//! | GET    | `/health`    | –                      | [`HealthResponse`]    |

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub text: String,
    pub n: usize,
    pub seed: u64,
    pub dropout: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub summaries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub source: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRequest {
    pub pairs: Vec<Pair>,
    pub seed: u64,
    pub reset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneResponse {
    pub state_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeResponse {
    pub summaries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub ok: bool,
    pub model: String,
    pub dim: usize,
}
