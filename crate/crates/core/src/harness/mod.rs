//! Experiment driver: warm start, the AL loop (select → reveal → retrain →
//! evaluate), analysis metrics per iteration, multi-seed repeats and export.

mod export;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    embed_documents, BackendDescriptor, BackendError, BackendKind, MockBackend, RemoteBackend,
    SummarizationBackend,
};
use crate::corpus::{Corpus, CorpusError, DocId, Document};
use crate::embedspace::{
    diversity_score, outlier_score, EmbedError, EmbeddingMatrix, DEFAULT_KNN_K,
};
use crate::seed::{derive_seed, rng_for};
use crate::strategies::{
    finetune_on_labeled, run_bas_baseline, run_idds_baseline, select_dual, select_random_baseline,
    DualConfig, PoolState, Provenance, Selection, StepContext, StepSelections, StrategyError,
    WarmupMethod,
};
use crate::synthetic::{self, SyntheticError, SyntheticSpec};
use crate::textmetrics::rouge_all;

pub use export::{
    export_results, export_viz, read_records, read_selections, summarize_records, write_viz,
    SummaryRow, VizRow,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbedError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Strategy(StrategyError),
}

impl From<StrategyError> for HarnessError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Backend(b) => HarnessError::Backend(b),
            StrategyError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Strategy(other),
        }
    }
}

impl From<SyntheticError> for HarnessError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::Spec(m) => HarnessError::Config(m),
            SyntheticError::Corpus(c) => HarnessError::Corpus(c),
            SyntheticError::Embedding(e) => HarnessError::Embedding(e),
        }
    }
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 1 configuration, 2 backend, 3 pool exhausted.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Backend(_) => 2,
            HarnessError::Strategy(StrategyError::PoolExhausted { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Bas,
    Idds,
    Dual,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Random,
        StrategyKind::Bas,
        StrategyKind::Idds,
        StrategyKind::Dual,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Bas => "bas",
            StrategyKind::Idds => "idds",
            StrategyKind::Dual => "dual",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown strategy {s:?}; expected random, bas, idds or dual"))
    }
}

/// Everything needed to reproduce a run. Serialized as TOML; the fully
/// resolved copy is written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: StrategyKind,
    pub repeats: usize,
    /// `mock` or the base URL of a model server.
    pub backend: String,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Embedding file; when absent the backend embeds the sources.
    pub embeddings: Option<PathBuf>,
    /// CSV with `id,noise` columns overriding the mock's hashed noise levels.
    pub noise: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Evaluate on the test set every this many iterations (and always on the last).
    pub eval_every: usize,
    pub knn_k: usize,
    pub parallel_repeats: bool,
    pub dual: DualConfig,
    /// Generate a synthetic corpus instead of reading dataset files.
    pub synthetic: Option<SyntheticSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: StrategyKind::Dual,
            repeats: 6,
            backend: "mock".to_string(),
            train: None,
            test: None,
            embeddings: None,
            noise: None,
            out: None,
            eval_every: 1,
            knn_k: DEFAULT_KNN_K,
            parallel_repeats: false,
            dual: DualConfig::default(),
            synthetic: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.dual.validate()?;
        if self.repeats == 0 {
            return Err(HarnessError::Config("repeats must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(HarnessError::Config("eval_every must be at least 1".into()));
        }
        if self.knn_k == 0 {
            return Err(HarnessError::Config("knn_k must be at least 1".into()));
        }
        if self.synthetic.is_none() && (self.train.is_none() || self.test.is_none()) {
            return Err(HarnessError::Config(
                "either train and test dataset paths or a synthetic corpus are required".into(),
            ));
        }
        BackendDescriptor::parse(&self.backend).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn backend_descriptor(&self) -> Result<BackendDescriptor, HarnessError> {
        BackendDescriptor::parse(&self.backend).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Seed of repeat `r`, derived from the root seed.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        derive_seed(self.dual.seed, "repeat", &[r as u64])
    }
}

/// Corpus plus embeddings plus mock noise overrides, ready to run.
pub struct Workspace {
    pub corpus: Corpus,
    pub embeddings: EmbeddingMatrix,
    pub noise: BTreeMap<DocId, f64>,
}

impl Workspace {
    pub fn new(corpus: Corpus, embeddings: EmbeddingMatrix) -> Result<Self, HarnessError> {
        for d in corpus.train_pool() {
            embeddings.require(&d.id)?;
        }
        Ok(Workspace {
            corpus,
            embeddings,
            noise: BTreeMap::new(),
        })
    }

    pub fn with_noise(mut self, noise: BTreeMap<DocId, f64>) -> Self {
        self.noise = noise;
        self
    }

    /// Load or generate the corpus and embeddings a config refers to.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        if let Some(spec) = &config.synthetic {
            let s = synthetic::generate(spec)?;
            return Ok(Workspace::new(s.corpus, s.embeddings)?.with_noise(s.noise));
        }
        let (train, test) = match (&config.train, &config.test) {
            (Some(train), Some(test)) => (train, test),
            _ => {
                return Err(HarnessError::Config(
                    "train and test paths are required".into(),
                ))
            }
        };
        let corpus = Corpus::load(train, test)?;
        let embeddings = match &config.embeddings {
            Some(p) => EmbeddingMatrix::load(p)?,
            None => {
                let backend = connect(config)?;
                embed_documents(backend.as_ref(), corpus.train_pool())?
            }
        };
        let noise = match &config.noise {
            Some(p) => read_noise(p)?,
            None => BTreeMap::new(),
        };
        Ok(Workspace::new(corpus, embeddings)?.with_noise(noise))
    }

    fn backend(
        &self,
        config: &ExperimentConfig,
    ) -> Result<Box<dyn SummarizationBackend>, HarnessError> {
        let descriptor = config.backend_descriptor()?;
        Ok(match descriptor.kind {
            BackendKind::Mock => Box::new(
                MockBackend::new(descriptor)
                    .with_noise_levels(self.noise.clone())
                    .with_documents(self.corpus.train_pool()),
            ),
            BackendKind::Remote => Box::new(RemoteBackend::connect(descriptor)?),
        })
    }
}

fn connect(config: &ExperimentConfig) -> Result<Box<dyn SummarizationBackend>, HarnessError> {
    let descriptor = config.backend_descriptor()?;
    Ok(match descriptor.kind {
        BackendKind::Mock => Box::new(MockBackend::new(descriptor)),
        BackendKind::Remote => Box::new(RemoteBackend::connect(descriptor)?),
    })
}

/// Read an `id,noise` CSV.
pub fn read_noise(path: impl AsRef<Path>) -> Result<BTreeMap<DocId, f64>, HarnessError> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        noise: f64,
    }
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if !(0.0..=1.0).contains(&row.noise) {
            return Err(HarnessError::Config(format!(
                "noise of {} outside [0, 1]",
                row.id
            )));
        }
        out.insert(DocId::new(row.id), row.noise);
    }
    Ok(out)
}

/// Mean ROUGE F1 over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestScores {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

pub fn evaluate_test_set(
    backend: &dyn SummarizationBackend,
    test_docs: &[Document],
) -> Result<TestScores, HarnessError> {
    if test_docs.is_empty() {
        return Err(HarnessError::Config("empty test set".into()));
    }
    let sources: Vec<String> = test_docs.iter().map(|d| d.source.clone()).collect();
    let outputs = backend.summarize(&sources)?;
    if outputs.len() != test_docs.len() {
        return Err(BackendError::Protocol(format!(
            "{} summaries for {} test documents",
            outputs.len(),
            test_docs.len()
        ))
        .into());
    }
    let n = test_docs.len() as f64;
    let (mut r1, mut r2, mut rl) = (0.0, 0.0, 0.0);
    for (out, doc) in outputs.iter().zip(test_docs) {
        let s = rouge_all(out, &doc.reference);
        r1 += s.rouge1;
        r2 += s.rouge2;
        rl += s.rouge_l;
    }
    Ok(TestScores {
        rouge1: r1 / n,
        rouge2: r2 / n,
        rouge_l: rl / n,
    })
}

/// One iteration of one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub repeat: usize,
    /// 0 is the warm start.
    pub iteration: usize,
    pub strategy: StrategyKind,
    pub selections: Vec<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<TestScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diversity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier: Option<f64>,
    pub labeled: usize,
    pub unlabeled: usize,
    pub excluded: usize,
    pub targeted_shortfall: usize,
    /// U ran out before the iteration's quota was met.
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_version: Option<String>,
    pub selection_secs: f64,
    pub train_secs: f64,
}

/// Names of the fields holding wall-clock measurements.
pub const TIMING_FIELDS: [&str; 2] = ["selection_secs", "train_secs"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RepeatStatus {
    Complete,
    /// The pool ran dry, or an iteration acquired nothing, before reaching B.
    PoolExhausted {
        labeled: usize,
    },
    /// An unrecoverable error stopped the repeat; its records are partial.
    Failed {
        exit_code: i32,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub status: RepeatStatus,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatResult>,
}

impl ExperimentResult {
    pub fn records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.repeats.iter().flat_map(|r| &r.records)
    }

    /// 0 if every repeat completed, otherwise the code of the first failure
    /// (2 backend, 3 exhausted, 1 anything else).
    pub fn exit_code(&self) -> i32 {
        self.repeats
            .iter()
            .map(|r| match &r.status {
                RepeatStatus::Complete => 0,
                RepeatStatus::PoolExhausted { .. } => 3,
                RepeatStatus::Failed { exit_code, .. } => *exit_code,
            })
            .find(|&c| c != 0)
            .unwrap_or(0)
    }
}

/// Run every repeat of `config` on `workspace`. Backend failures abort only
/// the affected repeat.
pub fn run_experiment(
    config: &ExperimentConfig,
    workspace: &Workspace,
) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let descriptor = config.backend_descriptor()?;
    let parallel = config.parallel_repeats && descriptor.kind == BackendKind::Mock;
    let run = |r: usize| -> RepeatResult {
        let seed = config.repeat_seed(r);
        let mut records = Vec::new();
        let status = match workspace.backend(config) {
            Ok(mut backend) => {
                run_repeat(config, workspace, backend.as_mut(), r, seed, &mut records)
            }
            Err(e) => Err(e),
        };
        let status = match status {
            Ok(s) => s,
            Err(e) => {
                log::warn!("repeat {r} aborted: {e}");
                RepeatStatus::Failed {
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                }
            }
        };
        RepeatResult {
            repeat: r,
            seed,
            status,
            records,
        }
    };
    let repeats = if parallel {
        (0..config.repeats).into_par_iter().map(run).collect()
    } else {
        (0..config.repeats).map(run).collect()
    };
    Ok(ExperimentResult {
        config: config.clone(),
        repeats,
    })
}

fn scoring_threads(parallelism: usize) -> Result<Option<rayon::ThreadPool>, HarnessError> {
    if parallelism <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map(Some)
        .map_err(|e| HarnessError::Config(format!("cannot build scoring pool: {e}")))
}

/// Run a single repeat, appending a record per iteration to `records` as it
/// goes so a failure still leaves the completed iterations behind.
pub fn run_repeat(
    config: &ExperimentConfig,
    workspace: &Workspace,
    backend: &mut dyn SummarizationBackend,
    repeat: usize,
    seed: u64,
    records: &mut Vec<IterationRecord>,
) -> Result<RepeatStatus, HarnessError> {
    let dual = &config.dual;
    let corpus = &workspace.corpus;
    let train_ids = corpus.train_ids();
    let mut pool = PoolState::new(train_ids.clone(), dual.budget)?;
    let threads = scoring_threads(dual.parallelism)?;
    let train_seed = derive_seed(seed, "train", &[]);

    let base_ctx = StepContext {
        corpus,
        embeddings: &workspace.embeddings,
        config: dual,
        iteration: 0,
        seed,
        threads: threads.as_ref(),
    };

    let mut finish = |pool: &PoolState,
                      backend: &mut dyn SummarizationBackend,
                      iteration: usize,
                      step: StepSelections,
                      selection_secs: f64,
                      is_last: bool|
     -> Result<(), HarnessError> {
        let started = Instant::now();
        let state = if pool.labeled().is_empty() {
            None
        } else {
            Some(finetune_on_labeled(backend, corpus, pool, train_seed)?)
        };
        let train_secs = started.elapsed().as_secs_f64();
        let evaluate = state.is_some() && (is_last || iteration.is_multiple_of(config.eval_every));
        let scores = if evaluate {
            Some(evaluate_test_set(backend, corpus.test_set())?)
        } else {
            None
        };
        let (diversity, outlier) = if pool.labeled().is_empty() {
            (None, None)
        } else {
            let labeled = workspace.embeddings.subset(pool.labeled())?;
            let rest = pool.not_labeled();
            let outlier = if rest.is_empty() {
                None
            } else {
                Some(outlier_score(
                    pool.labeled(),
                    &workspace.embeddings,
                    &rest,
                    config.knn_k,
                )?)
            };
            (Some(diversity_score(&labeled)?), outlier)
        };
        records.push(IterationRecord {
            repeat,
            iteration,
            strategy: config.strategy,
            selections: step.selections,
            scores,
            diversity,
            outlier,
            labeled: pool.labeled().len(),
            unlabeled: pool.unlabeled().len(),
            excluded: pool.excluded().len(),
            targeted_shortfall: step.targeted_shortfall,
            partial: step.pool_exhausted,
            state_version: state.map(|s| s.fingerprint),
            selection_secs,
            train_secs,
        });
        Ok(())
    };

    if dual.warmup > 0 {
        let mut rng = rng_for(seed, "warmup", &[]);
        let started = Instant::now();
        let step = match dual.warmup_method {
            WarmupMethod::Random => {
                let mut s = select_random_baseline(&mut pool, &base_ctx, &mut rng, dual.warmup)?;
                s.selections
                    .iter_mut()
                    .for_each(|x| x.provenance = Provenance::Warmup);
                s
            }
            WarmupMethod::Idds => {
                let take = dual.warmup.min(pool.unlabeled().len());
                StepSelections {
                    selections: run_idds_baseline(
                        &mut pool,
                        &workspace.embeddings,
                        dual.idds_params()?,
                        take,
                        0,
                        Provenance::Warmup,
                    )?,
                    ..Default::default()
                }
            }
        };
        let exhausted = step.selections.len() < dual.warmup;
        finish(
            &pool,
            backend,
            0,
            step,
            started.elapsed().as_secs_f64(),
            false,
        )?;
        if exhausted {
            return Ok(RepeatStatus::PoolExhausted {
                labeled: pool.labeled().len(),
            });
        }
    }

    let mut iteration = 0;
    while pool.labeled().len() < dual.budget {
        iteration += 1;
        let count = dual.per_iteration.min(pool.remaining_budget());
        let ctx = base_ctx.at_iteration(iteration);
        let mut rng = rng_for(seed, "select", &[iteration as u64]);
        let before = pool.labeled().len();
        let started = Instant::now();
        let step = match config.strategy {
            StrategyKind::Random => select_random_baseline(&mut pool, &ctx, &mut rng, count)?,
            StrategyKind::Dual => select_dual(&mut pool, &ctx, &*backend, &mut rng, count)?,
            StrategyKind::Bas => {
                run_bas_baseline(&mut pool, &ctx, &*backend, &mut rng, dual.bas_subset, count)?
            }
            StrategyKind::Idds => {
                let take = count.min(pool.unlabeled().len());
                StepSelections {
                    selections: run_idds_baseline(
                        &mut pool,
                        &workspace.embeddings,
                        dual.idds_params()?,
                        take,
                        iteration,
                        Provenance::Baseline,
                    )?,
                    pool_exhausted: take < count,
                    ..Default::default()
                }
            }
        };
        let selection_secs = started.elapsed().as_secs_f64();
        let mut step = step;
        let stalled = pool.labeled().len() == before;
        let reached = pool.labeled().len() >= dual.budget;
        if pool.unlabeled().is_empty() && !reached {
            step.pool_exhausted = true;
        }
        let stop = stalled || step.pool_exhausted || reached;
        if !stalled {
            finish(&pool, backend, iteration, step, selection_secs, stop)?;
        }
        if stop && !reached {
            log::warn!(
                "repeat {repeat}: stopped at iteration {iteration} with |L| = {} of {}",
                pool.labeled().len(),
                dual.budget
            );
            return Ok(RepeatStatus::PoolExhausted {
                labeled: pool.labeled().len(),
            });
        }
    }
    debug_assert!(pool.check_invariants(&train_ids).is_ok());
    Ok(RepeatStatus::Complete)
}
