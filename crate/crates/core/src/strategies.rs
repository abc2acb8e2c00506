//! Acquisition strategies: random sampling, BLEUVar uncertainty (BAS),
//! in-domain diversity (IDDS), and DUAL, which retrieves a diverse candidate
//! set by IDDS, keeps the most uncertain non-noisy candidate, and excludes
//! the rest of the candidate set from future consideration.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, StateVersion, SummarizationBackend};
use crate::corpus::{Corpus, CorpusError, DocId};
use crate::embedspace::{select_top_k, EmbedError, EmbeddingMatrix, IddsParams, IddsSession};
use crate::seed::derive_seed;
use crate::textmetrics::{bleuvar, tokenize, MetricError};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("pool exhausted: requested {requested}, {available} unlabeled")]
    PoolExhausted { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Embedding(#[from] EmbedError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Membership {
    Labeled,
    Unlabeled,
    Excluded,
}

/// Disjoint partition of the train ids into labeled L, unlabeled U and
/// excluded E. Ids only ever move U → L or U → E.
#[derive(Debug, Clone)]
pub struct PoolState {
    labeled: Vec<DocId>,
    unlabeled: Vec<DocId>,
    excluded: Vec<DocId>,
    membership: HashMap<DocId, Membership>,
    budget: usize,
}

impl PoolState {
    pub fn new(
        train_ids: impl IntoIterator<Item = DocId>,
        budget: usize,
    ) -> Result<Self, StrategyError> {
        let mut membership = HashMap::new();
        let mut unlabeled = Vec::new();
        for id in train_ids {
            if membership
                .insert(id.clone(), Membership::Unlabeled)
                .is_some()
            {
                return Err(StrategyError::Precondition(format!(
                    "duplicate train id {id}"
                )));
            }
            unlabeled.push(id);
        }
        Ok(PoolState {
            labeled: Vec::new(),
            unlabeled,
            excluded: Vec::new(),
            membership,
            budget,
        })
    }

    pub fn labeled(&self) -> &[DocId] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[DocId] {
        &self.unlabeled
    }

    pub fn excluded(&self) -> &[DocId] {
        &self.excluded
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget.saturating_sub(self.labeled.len())
    }

    pub fn is_unlabeled(&self, id: &DocId) -> bool {
        self.membership.get(id) == Some(&Membership::Unlabeled)
    }

    pub fn is_excluded(&self, id: &DocId) -> bool {
        self.membership.get(id) == Some(&Membership::Excluded)
    }

    pub fn is_labeled(&self, id: &DocId) -> bool {
        self.membership.get(id) == Some(&Membership::Labeled)
    }

    /// L followed by E: the set new candidates are penalized against in DUAL.
    pub fn labeled_and_excluded(&self) -> Vec<DocId> {
        self.labeled.iter().chain(&self.excluded).cloned().collect()
    }

    /// Everything not yet annotated (U ∪ E).
    pub fn not_labeled(&self) -> Vec<DocId> {
        self.unlabeled
            .iter()
            .chain(&self.excluded)
            .cloned()
            .collect()
    }

    fn take_unlabeled(&mut self, id: &DocId) -> Result<(), StrategyError> {
        if !self.is_unlabeled(id) {
            return Err(StrategyError::Precondition(format!(
                "{id} is not unlabeled"
            )));
        }
        self.unlabeled.retain(|x| x != id);
        Ok(())
    }

    pub fn move_to_labeled(&mut self, id: &DocId) -> Result<(), StrategyError> {
        if self.labeled.len() >= self.budget {
            return Err(StrategyError::Precondition(format!(
                "labeling {id} would exceed the budget of {}",
                self.budget
            )));
        }
        self.take_unlabeled(id)?;
        self.membership.insert(id.clone(), Membership::Labeled);
        self.labeled.push(id.clone());
        Ok(())
    }

    pub fn move_to_excluded(&mut self, id: &DocId) -> Result<(), StrategyError> {
        self.take_unlabeled(id)?;
        self.membership.insert(id.clone(), Membership::Excluded);
        self.excluded.push(id.clone());
        Ok(())
    }

    /// Check disjointness, conservation of `all_ids` and the budget bound.
    pub fn check_invariants(&self, all_ids: &[DocId]) -> Result<(), String> {
        let total = self.labeled.len() + self.unlabeled.len() + self.excluded.len();
        if total != all_ids.len() || self.membership.len() != all_ids.len() {
            return Err(format!(
                "{total} ids in the partition, {} expected",
                all_ids.len()
            ));
        }
        for (list, m) in [
            (&self.labeled, Membership::Labeled),
            (&self.unlabeled, Membership::Unlabeled),
            (&self.excluded, Membership::Excluded),
        ] {
            for id in list {
                if self.membership.get(id) != Some(&m) {
                    return Err(format!("{id} listed as {m:?} but recorded otherwise"));
                }
            }
        }
        if let Some(missing) = all_ids.iter().find(|id| !self.membership.contains_key(*id)) {
            return Err(format!("{missing} was lost from the partition"));
        }
        if self.labeled.len() > self.budget {
            return Err(format!(
                "|L| = {} exceeds budget {}",
                self.labeled.len(),
                self.budget
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WarmupMethod {
    #[default]
    Random,
    Idds,
}

/// Every knob of the strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualConfig {
    /// Annotation budget B; warm-up samples count toward it.
    pub budget: usize,
    /// Samples per iteration s.
    pub per_iteration: usize,
    /// Warm-up size s0.
    pub warmup: usize,
    pub warmup_method: WarmupMethod,
    /// Fraction p of each iteration chosen by the targeted step.
    pub random_ratio: f64,
    /// IDDS candidate set size k.
    pub top_k: usize,
    /// BLEUVar ceiling τ; candidates above it are treated as noise.
    pub tau: f64,
    /// MC-dropout passes n.
    pub mc_passes: usize,
    pub lambda: f64,
    pub seed: u64,
    /// Size of the random subset BAS scores each iteration.
    pub bas_subset: usize,
    /// Whether BAS applies the τ filter.
    pub bas_apply_tau: bool,
    /// Concurrent candidate scoring calls.
    pub parallelism: usize,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            budget: 150,
            per_iteration: 10,
            warmup: 0,
            warmup_method: WarmupMethod::Random,
            random_ratio: 0.5,
            top_k: 10,
            tau: 1.0,
            mc_passes: 10,
            lambda: IddsParams::DEFAULT_LAMBDA,
            seed: 0,
            bas_subset: 100,
            bas_apply_tau: true,
            parallelism: 4,
        }
    }
}

impl DualConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        let bad = |m: String| Err(StrategyError::Config(m));
        if self.per_iteration == 0 {
            return bad("per_iteration must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.random_ratio) {
            return bad(format!("p must lie in [0, 1], got {}", self.random_ratio));
        }
        if self.top_k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.mc_passes < 2 {
            return bad(format!("n must be at least 2, got {}", self.mc_passes));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.warmup + self.per_iteration > self.budget {
            return bad(format!(
                "warm-up {} plus one iteration of {} exceeds the budget {}",
                self.warmup, self.per_iteration, self.budget
            ));
        }
        if self.bas_subset == 0 {
            return bad("bas_subset must be at least 1".into());
        }
        Ok(())
    }

    pub fn idds_params(&self) -> Result<IddsParams, StrategyError> {
        Ok(IddsParams::new(self.lambda)?)
    }

    /// `(s1, s2)` for an iteration of `s` samples: `s1 = ⌈p·s⌉`, `s2 = s − s1`.
    pub fn split(&self, s: usize) -> (usize, usize) {
        // shave rounding noise so that e.g. 0.3 * 10 is 3, not 4
        let s1 = ((self.random_ratio * s as f64) - 1e-9).ceil().max(0.0) as usize;
        let s1 = s1.min(s);
        (s1, s - s1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Warmup,
    Targeted,
    Random,
    Baseline,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Warmup => "warmup",
            Provenance::Targeted => "targeted",
            Provenance::Random => "random",
            Provenance::Baseline => "baseline",
        }
    }
}

/// One document moved into L, with how and why it was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub doc_id: DocId,
    pub provenance: Provenance,
    pub iteration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleuvar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idds_score: Option<f64>,
}

impl Selection {
    fn plain(doc_id: DocId, provenance: Provenance, iteration: usize) -> Self {
        Selection {
            doc_id,
            provenance,
            iteration,
            bleuvar: None,
            idds_score: None,
        }
    }
}

/// Shared, read-only inputs of a selection step.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub corpus: &'a Corpus,
    pub embeddings: &'a EmbeddingMatrix,
    pub config: &'a DualConfig,
    /// 1-based AL iteration; 0 is the warm start.
    pub iteration: usize,
    /// Seed of the current repeat; all per-step streams derive from it.
    pub seed: u64,
    /// Pool for concurrent candidate scoring; `None` scores sequentially.
    pub threads: Option<&'a ThreadPool>,
}

impl<'a> StepContext<'a> {
    pub fn new(
        corpus: &'a Corpus,
        embeddings: &'a EmbeddingMatrix,
        config: &'a DualConfig,
    ) -> Self {
        StepContext {
            corpus,
            embeddings,
            config,
            iteration: 1,
            seed: config.seed,
            threads: None,
        }
    }

    pub fn at_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }

    fn noise_seed(&self, id: &DocId) -> u64 {
        derive_seed(self.seed, &format!("mc:{id}"), &[self.iteration as u64])
    }
}

/// BLEUVar of each id from `n` stochastic passes. Only unlabeled documents
/// may be scored; results come back in input order even when computed
/// concurrently.
pub fn score_bleuvar(
    ids: &[DocId],
    pool: &PoolState,
    ctx: &StepContext<'_>,
    backend: &dyn SummarizationBackend,
) -> Result<Vec<f64>, StrategyError> {
    let mut docs = Vec::with_capacity(ids.len());
    for id in ids {
        if !pool.is_unlabeled(id) {
            return Err(StrategyError::Precondition(format!(
                "refusing to score {id}: not in U"
            )));
        }
        docs.push(
            ctx.corpus
                .train_doc(id)
                .ok_or_else(|| CorpusError::UnknownId(id.to_string()))?,
        );
    }
    let n = ctx.config.mc_passes;
    let one = |doc: &&crate::corpus::Document| -> Result<f64, StrategyError> {
        let batch = backend
            .generate_stochastic(doc, n, ctx.noise_seed(&doc.id))
            .map_err(|e| e.for_doc(&doc.id))?;
        if batch.summaries.len() != n {
            return Err(BackendError::Protocol(format!(
                "{} summaries for n={n} on {}",
                batch.summaries.len(),
                doc.id
            ))
            .into());
        }
        let toks: Vec<_> = batch.summaries.iter().map(|s| tokenize(s)).collect();
        Ok(bleuvar(&toks)?.value)
    };
    match ctx.threads {
        Some(threads) => threads.install(|| docs.par_iter().map(one).collect()),
        None => docs.iter().map(one).collect(),
    }
}

/// Uniform sample of `count` unlabeled ids without replacement, in draw order.
/// The caller moves them.
pub fn select_random(
    pool: &PoolState,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DocId>, StrategyError> {
    let available = pool.unlabeled.len();
    if count > available {
        return Err(StrategyError::PoolExhausted {
            requested: count,
            available,
        });
    }
    Ok(index::sample(rng, available, count)
        .into_iter()
        .map(|i| pool.unlabeled[i].clone())
        .collect())
}

/// IDDS and BLEUVar of one candidate considered by a targeted pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub doc_id: DocId,
    pub idds_score: f64,
    pub bleuvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PickOutcome {
    Picked {
        selection: Selection,
        /// Candidates moved to E.
        excluded: Vec<DocId>,
        candidates: Vec<CandidateScore>,
    },
    /// No candidate survived the τ filter (or U is empty); the pool is unchanged.
    Exhausted { candidates: Vec<CandidateScore> },
}

/// One targeted pick: retrieve the top-k of U by IDDS against L∪E, score
/// their BLEUVar, drop those above τ, label the most uncertain survivor and
/// move every other candidate of K to E. If no candidate survives, nothing moves.
///
/// `session` must mirror `pool` (U as its unlabeled set, L∪E as its penalty
/// set); it is updated alongside the pool.
pub fn dual_targeted_pick(
    pool: &mut PoolState,
    session: &mut IddsSession<'_>,
    ctx: &StepContext<'_>,
    backend: &dyn SummarizationBackend,
) -> Result<PickOutcome, StrategyError> {
    if pool.unlabeled.is_empty() {
        return Ok(PickOutcome::Exhausted {
            candidates: Vec::new(),
        });
    }
    if session.unlabeled_len() != pool.unlabeled.len() {
        return Err(StrategyError::Precondition(
            "IDDS session is out of sync with the pool".into(),
        ));
    }
    let scores = session.scores();
    let top = select_top_k(&scores, ctx.config.top_k);
    let idds_of: HashMap<&DocId, f64> = scores.iter().map(|(id, s)| (id, *s)).collect();
    let bleuvars = score_bleuvar(&top, pool, ctx, backend)?;
    let candidates: Vec<CandidateScore> = top
        .iter()
        .zip(&bleuvars)
        .map(|(id, &bv)| CandidateScore {
            doc_id: id.clone(),
            idds_score: idds_of[id],
            bleuvar: bv,
        })
        .collect();

    let survivors: Vec<&CandidateScore> = candidates
        .iter()
        .filter(|c| c.bleuvar <= ctx.config.tau)
        .collect();
    let Some(best) = survivors.iter().copied().max_by(|a, b| {
        a.bleuvar
            .total_cmp(&b.bleuvar)
            .then_with(|| b.doc_id.cmp(&a.doc_id))
    }) else {
        return Ok(PickOutcome::Exhausted { candidates });
    };

    let best = best.clone();
    pool.move_to_labeled(&best.doc_id)?;
    session.move_to_penalty(&best.doc_id)?;
    let mut excluded = Vec::new();
    for c in candidates.iter().filter(|c| c.doc_id != best.doc_id) {
        pool.move_to_excluded(&c.doc_id)?;
        session.move_to_penalty(&c.doc_id)?;
        excluded.push(c.doc_id.clone());
    }
    Ok(PickOutcome::Picked {
        selection: Selection {
            doc_id: best.doc_id,
            provenance: Provenance::Targeted,
            iteration: ctx.iteration,
            bleuvar: Some(best.bleuvar),
            idds_score: Some(best.idds_score),
        },
        excluded,
        candidates,
    })
}

/// Result of the selection half of an iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepSelections {
    pub selections: Vec<Selection>,
    /// Targeted slots left unfilled because the τ filter emptied K.
    pub targeted_shortfall: usize,
    /// U ran out before `count` documents could be drawn.
    pub pool_exhausted: bool,
}

fn draw_random(
    pool: &mut PoolState,
    count: usize,
    provenance: Provenance,
    iteration: usize,
    rng: &mut impl Rng,
    out: &mut StepSelections,
) -> Result<(), StrategyError> {
    let take = count.min(pool.unlabeled.len());
    if take < count {
        out.pool_exhausted = true;
    }
    for id in select_random(pool, take, rng)? {
        pool.move_to_labeled(&id)?;
        out.selections
            .push(Selection::plain(id, provenance, iteration));
    }
    Ok(())
}

/// DUAL selection for one iteration of `count` samples: `⌈p·count⌉` targeted
/// picks (stopping early if the τ filter empties K), then the random step.
/// Slots lost to an early stop are not refilled at random.
pub fn select_dual(
    pool: &mut PoolState,
    ctx: &StepContext<'_>,
    backend: &dyn SummarizationBackend,
    rng: &mut impl Rng,
    count: usize,
) -> Result<StepSelections, StrategyError> {
    let (s1, s2) = ctx.config.split(count);
    let mut out = StepSelections::default();
    if s1 > 0 {
        let penalty = pool.labeled_and_excluded();
        let mut session = IddsSession::new(
            ctx.embeddings,
            &pool.unlabeled,
            &penalty,
            ctx.config.idds_params()?,
        )?;
        for done in 0..s1 {
            match dual_targeted_pick(pool, &mut session, ctx, backend)? {
                PickOutcome::Picked { selection, .. } => out.selections.push(selection),
                PickOutcome::Exhausted { .. } => {
                    out.targeted_shortfall = s1 - done;
                    log::info!(
                        "iteration {}: targeted step stopped after {done} of {s1} picks",
                        ctx.iteration
                    );
                    break;
                }
            }
        }
    }
    draw_random(pool, s2, Provenance::Random, ctx.iteration, rng, &mut out)?;
    Ok(out)
}

/// Random baseline: `count` uniform draws from U.
pub fn select_random_baseline(
    pool: &mut PoolState,
    ctx: &StepContext<'_>,
    rng: &mut impl Rng,
    count: usize,
) -> Result<StepSelections, StrategyError> {
    let mut out = StepSelections::default();
    draw_random(
        pool,
        count,
        Provenance::Baseline,
        ctx.iteration,
        rng,
        &mut out,
    )?;
    Ok(out)
}

/// BAS baseline: score a random subset of `min(subset, |U|)` documents by
/// BLEUVar, optionally drop those above τ, and label the `count` highest.
pub fn run_bas_baseline(
    pool: &mut PoolState,
    ctx: &StepContext<'_>,
    backend: &dyn SummarizationBackend,
    rng: &mut impl Rng,
    subset: usize,
    count: usize,
) -> Result<StepSelections, StrategyError> {
    let mut out = StepSelections::default();
    if pool.unlabeled.is_empty() {
        out.pool_exhausted = count > 0;
        return Ok(out);
    }
    let drawn = select_random(pool, subset.min(pool.unlabeled.len()), rng)?;
    let scores = score_bleuvar(&drawn, pool, ctx, backend)?;
    let mut scored: Vec<(DocId, f64)> = drawn
        .into_iter()
        .zip(scores)
        .filter(|(_, bv)| !ctx.config.bas_apply_tau || *bv <= ctx.config.tau)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if scored.len() < count && pool.unlabeled.len() < count {
        out.pool_exhausted = true;
    }
    for (id, bv) in scored.into_iter().take(count) {
        pool.move_to_labeled(&id)?;
        out.selections.push(Selection {
            bleuvar: Some(bv),
            ..Selection::plain(id, Provenance::Baseline, ctx.iteration)
        });
    }
    Ok(out)
}

/// Greedy IDDS against L only: repeatedly label the argmax (ties by id) and
/// rescore. No model involvement and E is left alone.
pub fn run_idds_baseline(
    pool: &mut PoolState,
    embeddings: &EmbeddingMatrix,
    params: IddsParams,
    count: usize,
    iteration: usize,
    provenance: Provenance,
) -> Result<Vec<Selection>, StrategyError> {
    if count > pool.unlabeled.len() {
        return Err(StrategyError::PoolExhausted {
            requested: count,
            available: pool.unlabeled.len(),
        });
    }
    let mut session = IddsSession::new(embeddings, &pool.unlabeled, &pool.labeled, params)?;
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let scores = session.scores();
        let best = select_top_k(&scores, 1).remove(0);
        let score = scores.iter().find(|(id, _)| *id == best).map(|(_, s)| *s);
        session.move_to_penalty(&best)?;
        pool.move_to_labeled(&best)?;
        picked.push(Selection {
            idds_score: score,
            ..Selection::plain(best, provenance, iteration)
        });
    }
    Ok(picked)
}

/// Reveal references for all of L and retrain the backend from scratch.
pub fn finetune_on_labeled(
    backend: &mut dyn SummarizationBackend,
    corpus: &Corpus,
    pool: &PoolState,
    seed: u64,
) -> Result<StateVersion, StrategyError> {
    let pairs = pool
        .labeled()
        .iter()
        .map(|id| {
            corpus
                .reveal_reference(id)
                .map(|(s, r)| (s.to_string(), r.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(backend.reset_and_finetune(&pairs, seed)?)
}

/// A full DUAL iteration: selection, then retraining on the grown L.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    pub step: StepSelections,
    pub state: Option<StateVersion>,
    pub selection_secs: f64,
    pub train_secs: f64,
}

pub fn dual_iteration(
    pool: &mut PoolState,
    ctx: &StepContext<'_>,
    backend: &mut dyn SummarizationBackend,
    rng: &mut impl Rng,
) -> Result<IterationOutcome, StrategyError> {
    if pool.labeled().len() >= pool.budget() {
        return Err(StrategyError::Precondition("budget already reached".into()));
    }
    let count = ctx.config.per_iteration.min(pool.remaining_budget());
    let started = Instant::now();
    let step = select_dual(pool, ctx, &*backend, rng, count)?;
    let selection_secs = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let state = if pool.labeled().is_empty() {
        None
    } else {
        Some(finetune_on_labeled(
            backend,
            ctx.corpus,
            pool,
            derive_seed(ctx.seed, "train", &[]),
        )?)
    };
    Ok(IterationOutcome {
        step,
        state,
        selection_secs,
        train_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::corpus::Document;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(n: usize) -> Vec<DocId> {
        (0..n).map(|i| DocId::new(format!("d{i:03}"))).collect()
    }

    #[test]
    fn split_follows_ceiling() {
        let mut c = DualConfig::default();
        for (p, s, want) in [
            (0.0, 10, (0, 10)),
            (1.0, 10, (10, 0)),
            (0.5, 10, (5, 5)),
            (0.3, 10, (3, 7)),
            (0.25, 10, (3, 7)),
            (0.01, 10, (1, 9)),
        ] {
            c.random_ratio = p;
            assert_eq!(c.split(s), want, "p={p}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(DualConfig::default().validate().is_ok());
        let bad = [
            DualConfig {
                random_ratio: 1.2,
                ..Default::default()
            },
            DualConfig {
                top_k: 0,
                ..Default::default()
            },
            DualConfig {
                tau: 0.0,
                ..Default::default()
            },
            DualConfig {
                mc_passes: 1,
                ..Default::default()
            },
            DualConfig {
                lambda: -0.1,
                ..Default::default()
            },
            DualConfig {
                warmup: 145,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(
                matches!(c.validate(), Err(StrategyError::Config(_))),
                "{c:?}"
            );
        }
    }

    #[test]
    fn pool_moves_and_guards() {
        let all = ids(5);
        let mut pool = PoolState::new(all.clone(), 2).unwrap();
        pool.move_to_labeled(&all[0]).unwrap();
        pool.move_to_excluded(&all[1]).unwrap();
        assert!(pool.move_to_labeled(&all[1]).is_err());
        assert!(pool.move_to_excluded(&all[0]).is_err());
        pool.move_to_labeled(&all[2]).unwrap();
        assert!(pool.move_to_labeled(&all[3]).is_err(), "budget");
        pool.check_invariants(&all).unwrap();
        assert_eq!(
            pool.labeled_and_excluded(),
            vec![all[0].clone(), all[2].clone(), all[1].clone()]
        );
    }

    #[test]
    fn random_selection_edges() {
        let all = ids(8);
        let pool = PoolState::new(all.clone(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut every = select_random(&pool, 8, &mut rng).unwrap();
        every.sort();
        assert_eq!(every, all);
        assert!(select_random(&pool, 0, &mut rng).unwrap().is_empty());
        assert!(matches!(
            select_random(&pool, 9, &mut rng),
            Err(StrategyError::PoolExhausted {
                requested: 9,
                available: 8
            })
        ));
    }

    #[test]
    fn idds_baseline_identical_embeddings_pick_ascending_ids() {
        let all = ids(6);
        let emb =
            EmbeddingMatrix::from_rows(2, all.iter().rev().map(|id| (id.clone(), vec![1.0, 1.0])))
                .unwrap();
        let mut pool = PoolState::new(all.iter().rev().cloned(), 6).unwrap();
        let got = run_idds_baseline(
            &mut pool,
            &emb,
            IddsParams::default(),
            3,
            1,
            Provenance::Baseline,
        )
        .unwrap();
        let got: Vec<_> = got.into_iter().map(|s| s.doc_id).collect();
        assert_eq!(got, all[..3].to_vec());
    }

    #[test]
    fn targeted_pick_with_k1_excludes_nothing() {
        let docs: Vec<Document> = (0..4)
            .map(|i| {
                Document::new(
                    format!("d{i}"),
                    format!("source {i} words here"),
                    format!("ref {i} a b c d e"),
                )
            })
            .collect();
        let corpus = Corpus::new(docs, vec![]).unwrap();
        let emb = EmbeddingMatrix::from_rows(
            2,
            corpus
                .train_ids()
                .into_iter()
                .enumerate()
                .map(|(i, id)| (id, vec![1.0, i as f64 * 0.1])),
        )
        .unwrap();
        let config = DualConfig {
            top_k: 1,
            tau: 1.0,
            ..Default::default()
        };
        let ctx = StepContext::new(&corpus, &emb, &config);
        let backend = MockBackend::default();
        let mut pool = PoolState::new(corpus.train_ids(), 4).unwrap();
        let mut session =
            IddsSession::new(&emb, pool.unlabeled(), &[], config.idds_params().unwrap()).unwrap();
        match dual_targeted_pick(&mut pool, &mut session, &ctx, &backend).unwrap() {
            PickOutcome::Picked {
                excluded,
                candidates,
                ..
            } => {
                assert!(excluded.is_empty());
                assert_eq!(candidates.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(pool.excluded().is_empty());
        assert_eq!(pool.labeled().len(), 1);
    }

    #[test]
    fn noisy_candidate_is_filtered_but_still_excluded() {
        let reference: String = (0..40).map(|i| format!("w{i} ")).collect();
        let docs: Vec<Document> = ["low", "mid", "high"]
            .iter()
            .map(|id| Document::new(*id, format!("source of {id}"), reference.clone()))
            .collect();
        let corpus = Corpus::new(docs, vec![]).unwrap();
        let emb = EmbeddingMatrix::from_rows(
            2,
            [
                ("low", [1.0, 0.0]),
                ("mid", [1.0, 0.01]),
                ("high", [1.0, 0.02]),
            ]
            .map(|(id, v)| (DocId::from(id), v.to_vec())),
        )
        .unwrap();
        let backend = MockBackend::default().with_noise_levels([
            (DocId::from("low"), 0.2),
            (DocId::from("mid"), 0.5),
            (DocId::from("high"), 0.95),
        ]);
        let config = DualConfig {
            top_k: 3,
            tau: 0.8,
            ..Default::default()
        };
        let ctx = StepContext::new(&corpus, &emb, &config);
        let mut pool = PoolState::new(corpus.train_ids(), 3).unwrap();
        let mut session =
            IddsSession::new(&emb, pool.unlabeled(), &[], config.idds_params().unwrap()).unwrap();
        let PickOutcome::Picked {
            selection,
            excluded,
            candidates,
        } = dual_targeted_pick(&mut pool, &mut session, &ctx, &backend).unwrap()
        else {
            panic!("expected a pick");
        };
        let bv = |id: &str| {
            candidates
                .iter()
                .find(|c| c.doc_id.as_str() == id)
                .unwrap()
                .bleuvar
        };
        assert!(
            bv("low") < bv("mid") && bv("mid") <= 0.8 && bv("high") > 0.8,
            "{candidates:?}"
        );
        assert_eq!(selection.doc_id.as_str(), "mid");
        assert_eq!(excluded, vec![DocId::from("high"), DocId::from("low")]);
        assert!(pool.unlabeled().is_empty());
        pool.check_invariants(&corpus.train_ids()).unwrap();
        let outcome = dual_targeted_pick(&mut pool, &mut session, &ctx, &backend).unwrap();
        assert_eq!(outcome, PickOutcome::Exhausted { candidates: vec![] });
    }
}
