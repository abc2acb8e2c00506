//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Mutex;

use rand::Rng;

use dual_al::backend::{
    BackendDescriptor, BackendError, MockBackend, StateVersion, StochasticBatch,
    SummarizationBackend,
};
use dual_al::corpus::{DocId, Document};
use dual_al::embedspace::EmbeddingMatrix;
use dual_al::textmetrics::{bleu, TokenSequence};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// `(candidate, reference, bleu)` rows computed by NLTK.
pub fn bleu_fixture() -> Vec<(String, String, f64)> {
    let text = std::fs::read_to_string(fixture_path("bleu_oracle.tsv")).expect("bleu fixture");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().expect("bleu value"),
            )
        })
        .collect()
}

/// Gaussian-ish rows with ids `{prefix}{i}`, never the zero vector.
pub fn random_matrix(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    let rows = (0..n).map(|i| {
        let mut row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        row[0] += if rng.gen_bool(0.5) { 1.5 } else { -1.5 };
        (DocId::new(format!("{prefix}{i:03}")), row)
    });
    EmbeddingMatrix::from_rows(dim, rows).expect("valid rows")
}

pub fn concat(parts: &[&EmbeddingMatrix]) -> EmbeddingMatrix {
    let mut out = EmbeddingMatrix::new(parts[0].dim());
    for m in parts {
        for (id, r) in m.rows() {
            out.push(id.clone(), r).expect("distinct ids");
        }
    }
    out
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise cosine double loop; the unlabeled mean includes the point itself.
pub fn idds_oracle(unlabeled: &[Vec<f64>], penalty: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    unlabeled
        .iter()
        .map(|x| {
            let mu = unlabeled.iter().map(|u| cosine(x, u)).sum::<f64>() / unlabeled.len() as f64;
            let mp = if penalty.is_empty() {
                0.0
            } else {
                penalty.iter().map(|p| cosine(x, p)).sum::<f64>() / penalty.len() as f64
            };
            lambda * mu - (1.0 - lambda) * mp
        })
        .collect()
}

pub fn diversity_oracle(rows: &[Vec<f64>]) -> f64 {
    let d = rows[0].len();
    let centroid: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect();
    rows.iter().map(|r| euclid(r, &centroid)).sum::<f64>() / rows.len() as f64
}

/// Full sort of every distance; a labeled point never neighbors itself.
pub fn outlier_oracle(
    labeled: &[(String, Vec<f64>)],
    pool: &[(String, Vec<f64>)],
    k: usize,
) -> f64 {
    let mut total = 0.0;
    for (id, x) in labeled {
        let mut d: Vec<f64> = pool
            .iter()
            .filter(|(pid, _)| pid != id)
            .map(|(_, p)| euclid(x, p))
            .collect();
        d.sort_by(f64::total_cmp);
        let take = k.min(d.len());
        total += d[..take].iter().sum::<f64>() / take as f64;
    }
    total / labeled.len() as f64
}

/// Mean of (1 − BLEU)² over every ordered pair i ≠ j.
pub fn bleuvar_oracle(summaries: &[TokenSequence]) -> f64 {
    let n = summaries.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += (1.0 - bleu(&summaries[i], &summaries[j])).powi(2);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Mock backend that records which documents it was asked to sample.
pub struct AuditBackend {
    pub inner: MockBackend,
    pub generated: Mutex<Vec<DocId>>,
}

impl AuditBackend {
    pub fn new(inner: MockBackend) -> Self {
        AuditBackend {
            inner,
            generated: Mutex::new(Vec::new()),
        }
    }

    pub fn take_generated(&self) -> Vec<DocId> {
        std::mem::take(&mut *self.generated.lock().unwrap())
    }
}

impl SummarizationBackend for AuditBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        self.inner.descriptor()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        self.inner.embed(texts)
    }

    fn generate_stochastic(
        &self,
        doc: &Document,
        n: usize,
        noise_seed: u64,
    ) -> Result<StochasticBatch, BackendError> {
        self.generated.lock().unwrap().push(doc.id.clone());
        self.inner.generate_stochastic(doc, n, noise_seed)
    }

    fn reset_and_finetune(
        &mut self,
        labeled: &[(String, String)],
        seed: u64,
    ) -> Result<StateVersion, BackendError> {
        self.inner.reset_and_finetune(labeled, seed)
    }

    fn summarize(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        self.inner.summarize(texts)
    }
}

/// Strip the wall-clock fields from a `records.jsonl` stream.
pub fn strip_timing(jsonl: &str) -> String {
    jsonl
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).expect("record json");
            let obj = v.as_object_mut().expect("record object");
            for f in dual_al::harness::TIMING_FIELDS {
                obj.remove(f);
            }
            v.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}
