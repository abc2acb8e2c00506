use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{BackendDescriptor, BackendError, StateVersion, StochasticBatch, SummarizationBackend};
use crate::corpus::{DocId, Document};
use crate::seed::{rng_for, stable_hash};
use crate::textmetrics::tokenize;

/// Deterministic in-process stand-in for a summarization model.
///
/// Every document has a latent noise level in `[0, 1]`, either configured or
/// hashed from its id. Sampling a summary starts from the reference tokens;
/// each position is marked uncertain with probability equal to the noise
/// level (one mask per document, model state and seed), and every sampled
/// pass fills the uncertain positions with fresh random tokens. Raising the
/// noise level only ever grows the uncertain set, so BLEU variance is
/// monotone in it: 0 at noise 0, and fully disjoint samples at noise 1.
///
/// Finetuning records a fingerprint of the labeled multiset and seed and
/// learns the reference vocabulary; `summarize` keeps the source tokens that
/// fall in that vocabulary.
#[derive(Debug, Clone)]
pub struct MockBackend {
    descriptor: BackendDescriptor,
    noise: HashMap<DocId, f64>,
    by_source: HashMap<String, (DocId, String)>,
    sequence: u64,
    fingerprint: String,
    vocab: BTreeSet<String>,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend::new(BackendDescriptor::mock())
    }
}

impl MockBackend {
    pub fn new(descriptor: BackendDescriptor) -> Self {
        MockBackend {
            descriptor,
            noise: HashMap::new(),
            by_source: HashMap::new(),
            sequence: 0,
            fingerprint: "pretrained".to_string(),
            vocab: BTreeSet::new(),
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.descriptor.dim = dim;
        self
    }

    /// Override the hashed noise level of specific documents.
    pub fn with_noise_levels(mut self, levels: impl IntoIterator<Item = (DocId, f64)>) -> Self {
        for (id, level) in levels {
            self.noise.insert(id, level.clamp(0.0, 1.0));
        }
        self
    }

    /// Register documents so requests that carry only source text (as the
    /// wire protocol does) resolve to the right id and reference.
    pub fn with_documents<'a>(mut self, docs: impl IntoIterator<Item = &'a Document>) -> Self {
        for d in docs {
            self.by_source
                .insert(d.source.clone(), (d.id.clone(), d.reference.clone()));
        }
        self
    }

    pub fn noise_level(&self, id: &DocId) -> f64 {
        self.noise.get(id).copied().unwrap_or_else(|| {
            (stable_hash(&[b"noise", id.as_str().as_bytes()]) >> 11) as f64 / (1u64 << 53) as f64
        })
    }

    pub fn state(&self) -> StateVersion {
        StateVersion {
            sequence: self.sequence,
            fingerprint: self.fingerprint.clone(),
        }
    }

    fn resolve<'a>(&'a self, doc: &'a Document) -> (&'a DocId, &'a str) {
        match self.by_source.get(&doc.source) {
            Some((id, reference)) if doc.reference.is_empty() => (id, reference),
            _ => (&doc.id, &doc.reference),
        }
    }
}

fn random_token(rng: &mut impl Rng) -> String {
    format!("x{:016x}", rng.gen::<u64>())
}

impl SummarizationBackend for MockBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::InvalidArgument(
                "embed needs at least one text".into(),
            ));
        }
        let dim = self.descriptor.dim;
        Ok(texts
            .iter()
            .map(|t| {
                let mut rng = rng_for(stable_hash(&[b"embed", t.as_bytes()]), "embed", &[]);
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = v
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
                    .max(f64::MIN_POSITIVE);
                v.iter_mut().for_each(|x| *x /= norm);
                v
            })
            .collect())
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
        let (id, reference) = self.resolve(doc);
        let noise = self.noise_level(id);
        let base = tokenize(reference);
        let doc_seed = stable_hash(&[
            id.as_str().as_bytes(),
            self.fingerprint.as_bytes(),
            &noise_seed.to_le_bytes(),
        ]);
        let mut mask_rng = rng_for(doc_seed, "mask", &[]);
        let uncertain: Vec<bool> = base
            .tokens()
            .iter()
            .map(|_| mask_rng.gen::<f64>() < noise)
            .collect();
        let summaries = (0..n as u64)
            .map(|pass| {
                let mut rng = rng_for(doc_seed, "pass", &[pass]);
                base.tokens()
                    .iter()
                    .zip(&uncertain)
                    .map(|(tok, &u)| {
                        if u {
                            random_token(&mut rng)
                        } else {
                            tok.clone()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        Ok(StochasticBatch {
            doc_id: id.clone(),
            summaries,
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
        let mut pairs: Vec<&(String, String)> = labeled.iter().collect();
        pairs.sort();
        let mut h = Sha256::new();
        for (src, reference) in &pairs {
            for part in [src.as_bytes(), reference.as_bytes()] {
                h.update((part.len() as u64).to_le_bytes());
                h.update(part);
            }
        }
        h.update(seed.to_le_bytes());
        let digest = h.finalize();
        self.fingerprint = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
        self.vocab = pairs
            .iter()
            .flat_map(|(_, r)| tokenize(r).tokens().to_vec())
            .collect();
        self.sequence += 1;
        Ok(self.state())
    }

    fn summarize(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        let max = self.descriptor.max_summary_tokens;
        Ok(texts
            .iter()
            .map(|t| {
                let toks = tokenize(t);
                let kept: Vec<&str> = toks
                    .tokens()
                    .iter()
                    .filter(|w| self.vocab.contains(*w))
                    .take(max)
                    .map(String::as_str)
                    .collect();
                if kept.is_empty() {
                    toks.tokens()
                        .iter()
                        .take(max)
                        .map(String::as_str)
                        .collect::<Vec<_>>()
                        .join(" ")
                } else {
                    kept.join(" ")
                }
            })
            .collect())
    }
}
