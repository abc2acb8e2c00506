//! Seeded synthetic corpora with hand-placed embeddings: two Gaussian
//! clusters of unequal size plus scattered outliers. Each cluster has its own
//! vocabulary, so a model trained on one cluster summarizes the other poorly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, DocId, Document};
use crate::embedspace::{EmbedError, EmbeddingMatrix};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cluster {
    A,
    B,
    Outlier,
}

impl Cluster {
    pub fn as_str(&self) -> &'static str {
        match self {
            Cluster::A => "a",
            Cluster::B => "b",
            Cluster::Outlier => "outlier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub outliers: usize,
    /// Test documents per cluster.
    pub test_per_cluster: usize,
    pub dim: usize,
    /// Distance of each cluster center from the origin. Centers lie on
    /// orthogonal axes; a center closer to the origin makes that cluster
    /// angularly wider at the same Euclidean spread.
    pub center_norm_a: f64,
    pub center_norm_b: f64,
    /// Radius at which outliers are scattered in random directions.
    pub outlier_radius: f64,
    /// Per-coordinate standard deviation inside a cluster.
    pub spread: f64,
    /// Noise level range of cluster documents; outliers draw from `outlier_noise`.
    pub noise: (f64, f64),
    pub outlier_noise: (f64, f64),
    pub summary_tokens: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            cluster_a: 120,
            cluster_b: 60,
            outliers: 20,
            test_per_cluster: 20,
            dim: 32,
            center_norm_a: 10.0,
            center_norm_b: 2.0,
            outlier_radius: 20.0,
            spread: 1.0,
            noise: (0.05, 0.5),
            outlier_noise: (0.85, 1.0),
            summary_tokens: 30,
            seed: 0,
        }
    }
}

pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Rows for every train and test document.
    pub embeddings: EmbeddingMatrix,
    pub noise: BTreeMap<DocId, f64>,
    pub clusters: BTreeMap<DocId, Cluster>,
}

impl SyntheticCorpus {
    pub fn cluster_of(&self, id: &DocId) -> Option<Cluster> {
        self.clusters.get(id).copied()
    }

    /// Count of `ids` per cluster, in A, B, outlier order.
    pub fn cluster_counts<'a>(&self, ids: impl IntoIterator<Item = &'a DocId>) -> [usize; 3] {
        let mut counts = [0; 3];
        for id in ids {
            match self.cluster_of(id) {
                Some(Cluster::A) => counts[0] += 1,
                Some(Cluster::B) => counts[1] += 1,
                Some(Cluster::Outlier) => counts[2] += 1,
                None => {}
            }
        }
        counts
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbedError),
}

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SyntheticError> {
    if spec.dim < 2 || spec.cluster_a == 0 || spec.cluster_b == 0 || spec.summary_tokens == 0 {
        return Err(SyntheticError::Spec(
            "need dim >= 2, two non-empty clusters and summaries of at least one token".into(),
        ));
    }
    if !(spec.spread > 0.0
        && spec.center_norm_a > 0.0
        && spec.center_norm_b > 0.0
        && spec.outlier_radius > 0.0)
    {
        return Err(SyntheticError::Spec(
            "spread, center norms and outlier radius must be positive".into(),
        ));
    }
    let mut rng = rng_for(spec.seed, "synthetic", &[]);
    let jitter = Normal::new(0.0, spec.spread).expect("positive spread");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut center_a = vec![0.0; spec.dim];
    let mut center_b = vec![0.0; spec.dim];
    center_a[0] = spec.center_norm_a;
    center_b[1] = spec.center_norm_b;

    let vocab_a = words("alpha", 60);
    let vocab_b = words("beta", 60);
    let vocab_o = words("omega", 60);
    let filler = words("the", 30);

    let mut embeddings = EmbeddingMatrix::new(spec.dim);
    let mut noise = BTreeMap::new();
    let mut clusters = BTreeMap::new();
    let mut train = Vec::new();
    let mut test = Vec::new();

    let mut emit = |id: String,
                    cluster: Cluster,
                    is_test: bool,
                    rng: &mut rand_chacha::ChaCha8Rng|
     -> Result<(), SyntheticError> {
        let (center, vocab, range) = match cluster {
            Cluster::A => (Some(&center_a), &vocab_a, spec.noise),
            Cluster::B => (Some(&center_b), &vocab_b, spec.noise),
            Cluster::Outlier => (None, &vocab_o, spec.outlier_noise),
        };
        let row: Vec<f64> = match center {
            Some(c) => c.iter().map(|x| x + jitter.sample(rng)).collect(),
            None => {
                // random direction at the cluster radius
                let v: Vec<f64> = (0..spec.dim).map(|_| unit.sample(rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / norm * spec.outlier_radius).collect()
            }
        };
        let reference: Vec<&String> = vocab.choose_multiple(rng, spec.summary_tokens).collect();
        let mut source: Vec<&String> = reference.clone();
        source.extend(filler.choose_multiple(rng, spec.summary_tokens));
        source.shuffle(rng);
        let doc = Document::new(
            id.as_str(),
            source
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(" "),
            reference
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        );
        let did = doc.id.clone();
        embeddings.push(did.clone(), &row)?;
        clusters.insert(did.clone(), cluster);
        if !is_test {
            noise.insert(did, rng.gen_range(range.0..=range.1));
        }
        if is_test {
            test.push(doc);
        } else {
            train.push(doc);
        }
        Ok(())
    };

    for i in 0..spec.cluster_a {
        emit(format!("a{i:04}"), Cluster::A, false, &mut rng)?;
    }
    for i in 0..spec.cluster_b {
        emit(format!("b{i:04}"), Cluster::B, false, &mut rng)?;
    }
    for i in 0..spec.outliers {
        emit(format!("o{i:04}"), Cluster::Outlier, false, &mut rng)?;
    }
    for i in 0..spec.test_per_cluster {
        emit(format!("ta{i:04}"), Cluster::A, true, &mut rng)?;
        emit(format!("tb{i:04}"), Cluster::B, true, &mut rng)?;
    }

    Ok(SyntheticCorpus {
        corpus: Corpus::new(train, test)?,
        embeddings,
        noise,
        clusters,
    })
}
