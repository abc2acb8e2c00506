//! N-gram text metrics: sentence BLEU, BLEU variance over a set of sampled
//! summaries, and ROUGE-1/2/L F1.
//!
//! Every metric consumes [`TokenSequence`]s produced by [`tokenize`], so BLEU
//! and ROUGE always agree on what a token is.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("BLEU variance needs at least 2 summaries, got {0}")]
    TooFewSummaries(usize),
    #[error("ROUGE-N is defined for n in {{1, 2}}, got {0}")]
    UnsupportedOrder(usize),
}

/// Normalized tokens. Only [`tokenize`] constructs these.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercase, split on Unicode whitespace, and detach every character that is
/// neither alphanumeric nor whitespace as its own token.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
        } else if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            tokens.push(ch.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    TokenSequence(tokens)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches of `candidate` against `reference`.
fn clipped_matches(candidate: &[String], reference: &[String], n: usize) -> usize {
    let ref_counts = ngram_counts(reference, n);
    ngram_counts(candidate, n)
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// Sentence-level BLEU configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    /// Highest n-gram order.
    pub max_order: usize,
    /// Substituted for a zero match count so the log of the precision exists.
    pub epsilon: f64,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            epsilon: 1e-9,
        }
    }
}

/// Sentence BLEU of `candidate` against a single `reference` with the default
/// configuration.
pub fn bleu(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    bleu_with(candidate, reference, &BleuConfig::default())
}

/// Sentence BLEU: uniform weights over orders `1..=max_order`, brevity
/// penalty, zero match counts replaced by `epsilon`. A candidate sharing no
/// unigram with the reference scores exactly 0.
///
/// Orders for which the candidate has no n-grams at all (candidate shorter
/// than the order) are dropped and the weights renormalized over the rest, so
/// that `bleu(x, x) == 1` for any non-empty `x`.
pub fn bleu_with(candidate: &TokenSequence, reference: &TokenSequence, cfg: &BleuConfig) -> f64 {
    let (cand, refs) = (candidate.tokens(), reference.tokens());
    match (cand.is_empty(), refs.is_empty()) {
        (true, true) => return 1.0,
        (true, false) => return 0.0,
        _ => {}
    }
    if clipped_matches(cand, refs, 1) == 0 {
        return 0.0;
    }
    let orders = cfg.max_order.min(cand.len()).max(1);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let total = cand.len() + 1 - n;
        let matches = clipped_matches(cand, refs, n);
        let numerator = if matches == 0 {
            cfg.epsilon
        } else {
            matches as f64
        };
        log_sum += (numerator / total as f64).ln();
    }
    let geo_mean = (log_sum / orders as f64).exp();
    let (c, r) = (cand.len() as f64, refs.len() as f64);
    let brevity = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    (brevity * geo_mean).clamp(0.0, 1.0)
}

/// BLEU variance of a set of sampled summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuVarScore {
    pub value: f64,
    pub n_summaries: usize,
}

/// Mean of `(1 - BLEU(y_i, y_j))^2` over all `N(N-1)` ordered pairs `i != j`.
/// Both directions of each pair are evaluated since BLEU is not symmetric.
pub fn bleuvar(summaries: &[TokenSequence]) -> Result<BleuVarScore, MetricError> {
    bleuvar_with(summaries, &BleuConfig::default())
}

pub fn bleuvar_with(
    summaries: &[TokenSequence],
    cfg: &BleuConfig,
) -> Result<BleuVarScore, MetricError> {
    let n = summaries.len();
    if n < 2 {
        return Err(MetricError::TooFewSummaries(n));
    }
    let mut total = 0.0;
    for (i, yi) in summaries.iter().enumerate() {
        for (j, yj) in summaries.iter().enumerate() {
            if i != j {
                let d = 1.0 - bleu_with(yi, yj, cfg);
                total += d * d;
            }
        }
    }
    Ok(BleuVarScore {
        value: total / (n * (n - 1)) as f64,
        n_summaries: n,
    })
}

fn f1(overlap: usize, cand_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / cand_total as f64;
    let recall = overlap as f64 / ref_total as f64;
    2.0 * precision * recall / (precision + recall)
}

/// ROUGE-N F1 (`n` is 1 or 2) with clipped multiset matching.
pub fn rouge_n(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    n: usize,
) -> Result<f64, MetricError> {
    if !(1..=2).contains(&n) {
        return Err(MetricError::UnsupportedOrder(n));
    }
    let (cand, refs) = (candidate.tokens(), reference.tokens());
    let cand_total = cand.len().saturating_sub(n - 1);
    let ref_total = refs.len().saturating_sub(n - 1);
    Ok(f1(clipped_matches(cand, refs, n), cand_total, ref_total))
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 from the longest common subsequence.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let (cand, refs) = (candidate.tokens(), reference.tokens());
    f1(lcs_len(cand, refs), cand.len(), refs.len())
}

/// ROUGE-1, ROUGE-2 and ROUGE-L F1 for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

pub fn rouge_all(candidate: &str, reference: &str) -> RougeScores {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    RougeScores {
        rouge1: rouge_n(&c, &r, 1).expect("order 1 is supported"),
        rouge2: rouge_n(&c, &r, 2).expect("order 2 is supported"),
        rouge_l: rouge_l(&c, &r),
    }
}
