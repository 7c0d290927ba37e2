//! Data-selection strategies over scored high-resource pools.
//!
//! Four strategies: lowest-perplexity pooling across languages (`pplx`),
//! everything from the single closest language (`one`), everything from a
//! language family (`fam`), and a seeded uniform sample of equal size
//! (`rand`). Every selection emits a [`SelectionReport`] with per-language
//! accounting so the provenance of a training set is auditable.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Bitext, LangTag, TrainPair};
use crate::ngram::ScoredSegment;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("budget {budget} exceeds pooled candidate total {pool_total}")]
    BudgetExceedsPool { budget: usize, pool_total: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("unknown pool language {0}")]
    UnknownLanguage(LangTag),
    #[error("pool {0} is empty")]
    EmptyPool(LangTag),
    #[error("pool {lang}: {scores} scores for {pairs} pairs")]
    ScoreLengthMismatch {
        lang: LangTag,
        scores: usize,
        pairs: usize,
    },
    #[error("duplicate language {0} among pools")]
    DuplicateLanguage(LangTag),
    #[error("no pools given")]
    NoPools,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Pplx,
    One,
    Fam,
    Rand,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::Pplx => "pplx",
            Strategy::One => "one",
            Strategy::Fam => "fam",
            Strategy::Rand => "rand",
        };
        f.write_str(s)
    }
}

/// One candidate pool: a bitext in to-pivot orientation, optionally scored
/// segment-by-segment by the low-resource language model.
#[derive(Debug, Clone)]
pub struct Pool {
    pub key: String,
    pub lang: LangTag,
    pub bitext: Bitext,
    pub scores: Option<Vec<ScoredSegment>>,
}

impl Pool {
    pub fn new(key: &str, bitext: Bitext) -> Self {
        Pool {
            key: key.to_string(),
            lang: bitext.src_lang.clone(),
            bitext,
            scores: None,
        }
    }

    pub fn with_scores(mut self, scores: Vec<ScoredSegment>) -> Self {
        self.scores = Some(scores);
        self
    }
}

/// One selected pair with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPair {
    pub lang: LangTag,
    pub pool_key: String,
    pub index: usize,
    pub source: String,
    pub target: String,
    pub perplexity: Option<f64>,
}

impl SelectedPair {
    pub fn to_train_pair(&self) -> TrainPair {
        TrainPair {
            lang: self.lang.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
        }
    }
}

/// Reference to a selected segment in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRef {
    pub key: String,
    pub index: usize,
    pub perplexity: f64,
}

/// Machine-readable provenance of a selection run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub strategy: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// (language, selected count) in pool order; counts sum to `total`.
    pub per_language: Vec<(String, usize)>,
    pub total: usize,
    /// Pool keys in the order they were considered.
    pub pool_order: Vec<String>,
    /// Per-segment provenance, ascending by perplexity (pplx only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentRef>>,
    /// Candidate pools are used as-is; no cross-language deduplication is
    /// performed, so the same pivot sentence may enter through several
    /// languages.
    pub deduplicated: bool,
}

impl SelectionReport {
    pub fn save(&self, path: &Path) -> Result<(), SelectionError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Result of any selection strategy.
#[derive(Debug, Clone)]
pub struct Selection {
    pub pairs: Vec<SelectedPair>,
    pub report: SelectionReport,
}

impl Selection {
    pub fn train_pairs(&self) -> Vec<TrainPair> {
        self.pairs.iter().map(SelectedPair::to_train_pair).collect()
    }
}

fn validate_pools(pools: &[Pool], need_scores: bool) -> Result<(), SelectionError> {
    if pools.is_empty() {
        return Err(SelectionError::NoPools);
    }
    let mut seen = BTreeSet::new();
    for pool in pools {
        if !seen.insert(pool.lang.clone()) {
            return Err(SelectionError::DuplicateLanguage(pool.lang.clone()));
        }
        if let Some(scores) = &pool.scores {
            if scores.len() != pool.bitext.len() {
                return Err(SelectionError::ScoreLengthMismatch {
                    lang: pool.lang.clone(),
                    scores: scores.len(),
                    pairs: pool.bitext.len(),
                });
            }
        } else if need_scores {
            return Err(SelectionError::ScoreLengthMismatch {
                lang: pool.lang.clone(),
                scores: 0,
                pairs: pool.bitext.len(),
            });
        }
    }
    Ok(())
}

fn pool_total(pools: &[Pool]) -> usize {
    pools.iter().map(|p| p.bitext.len()).sum()
}

fn per_language_counts(pools: &[Pool], pairs: &[SelectedPair]) -> Vec<(String, usize)> {
    pools
        .iter()
        .map(|p| {
            let n = pairs.iter().filter(|s| s.lang == p.lang).count();
            (p.lang.to_string(), n)
        })
        .collect()
}

fn make_pair(pool: &Pool, index: usize, pp: Option<f64>) -> SelectedPair {
    let (src, tgt) = &pool.bitext.pairs[index];
    SelectedPair {
        lang: pool.lang.clone(),
        pool_key: pool.key.clone(),
        index,
        source: src.clone(),
        target: tgt.clone(),
        perplexity: pp,
    }
}

/// Selects the `budget` lowest-perplexity segments across all pools.
///
/// Global ascending sort by perplexity; ties break by (pool order, segment
/// index). Selection is without replacement within the pooled candidate
/// set; paired pivot-side sentences are carried along.
pub fn select_pplx(pools: &[Pool], budget: usize) -> Result<Selection, SelectionError> {
    validate_pools(pools, true)?;
    if budget == 0 {
        return Err(SelectionError::ZeroBudget);
    }
    let total = pool_total(pools);
    if budget > total {
        return Err(SelectionError::BudgetExceedsPool {
            budget,
            pool_total: total,
        });
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (pool_idx, pool) in pools.iter().enumerate() {
        let scores = pool.scores.as_ref().expect("validated above");
        for (seg_idx, s) in scores.iter().enumerate() {
            candidates.push((s.perplexity, pool_idx, seg_idx));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    candidates.truncate(budget);
    let pairs: Vec<SelectedPair> = candidates
        .iter()
        .map(|&(pp, pool_idx, seg_idx)| make_pair(&pools[pool_idx], seg_idx, Some(pp)))
        .collect();
    let segments = pairs
        .iter()
        .map(|p| SegmentRef {
            key: p.pool_key.clone(),
            index: p.index,
            perplexity: p.perplexity.expect("pplx pairs carry scores"),
        })
        .collect();
    let report = SelectionReport {
        strategy: Strategy::Pplx,
        budget: Some(budget),
        seed: None,
        per_language: per_language_counts(pools, &pairs),
        total: pairs.len(),
        pool_order: pools.iter().map(|p| p.key.clone()).collect(),
        segments: Some(segments),
        deduplicated: false,
    };
    Ok(Selection { pairs, report })
}

/// Selects every segment whose perplexity is at or below `cutoff`; the
/// alternative reading of the selection threshold.
pub fn select_pplx_cutoff(pools: &[Pool], cutoff: f64) -> Result<Selection, SelectionError> {
    validate_pools(pools, true)?;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (pool_idx, pool) in pools.iter().enumerate() {
        let scores = pool.scores.as_ref().expect("validated above");
        for (seg_idx, s) in scores.iter().enumerate() {
            if s.perplexity <= cutoff {
                candidates.push((s.perplexity, pool_idx, seg_idx));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let pairs: Vec<SelectedPair> = candidates
        .iter()
        .map(|&(pp, pool_idx, seg_idx)| make_pair(&pools[pool_idx], seg_idx, Some(pp)))
        .collect();
    let segments = pairs
        .iter()
        .map(|p| SegmentRef {
            key: p.pool_key.clone(),
            index: p.index,
            perplexity: p.perplexity.expect("pplx pairs carry scores"),
        })
        .collect();
    let report = SelectionReport {
        strategy: Strategy::Pplx,
        budget: None,
        seed: None,
        per_language: per_language_counts(pools, &pairs),
        total: pairs.len(),
        pool_order: pools.iter().map(|p| p.key.clone()).collect(),
        segments: Some(segments),
        deduplicated: false,
    };
    Ok(Selection { pairs, report })
}

/// Takes all available data from the single closest language, in order.
pub fn select_one(pools: &[Pool], closest: &LangTag) -> Result<Selection, SelectionError> {
    validate_pools(pools, false)?;
    let pool = pools
        .iter()
        .find(|p| p.lang == *closest)
        .ok_or_else(|| SelectionError::UnknownLanguage(closest.clone()))?;
    if pool.bitext.is_empty() {
        return Err(SelectionError::EmptyPool(closest.clone()));
    }
    let pairs: Vec<SelectedPair> = (0..pool.bitext.len())
        .map(|i| {
            let pp = pool.scores.as_ref().map(|s| s[i].perplexity);
            make_pair(pool, i, pp)
        })
        .collect();
    let report = SelectionReport {
        strategy: Strategy::One,
        budget: None,
        seed: None,
        per_language: per_language_counts(pools, &pairs),
        total: pairs.len(),
        pool_order: vec![pool.key.clone()],
        segments: None,
        deduplicated: false,
    };
    Ok(Selection { pairs, report })
}

/// Concatenates all pools named in `family`, in family-list order.
pub fn select_fam(pools: &[Pool], family: &[LangTag]) -> Result<Selection, SelectionError> {
    validate_pools(pools, false)?;
    let mut pairs = Vec::new();
    let mut pool_order = Vec::new();
    for lang in family {
        let pool = pools
            .iter()
            .find(|p| p.lang == *lang)
            .ok_or_else(|| SelectionError::UnknownLanguage(lang.clone()))?;
        pool_order.push(pool.key.clone());
        for i in 0..pool.bitext.len() {
            let pp = pool.scores.as_ref().map(|s| s[i].perplexity);
            pairs.push(make_pair(pool, i, pp));
        }
    }
    let report = SelectionReport {
        strategy: Strategy::Fam,
        budget: None,
        seed: None,
        per_language: per_language_counts(pools, &pairs),
        total: pairs.len(),
        pool_order,
        segments: None,
        deduplicated: false,
    };
    Ok(Selection { pairs, report })
}

/// Uniform sample without replacement from the union of pools, deterministic
/// for a fixed seed. Output follows (pool order, segment index).
pub fn select_rand(pools: &[Pool], budget: usize, seed: u64) -> Result<Selection, SelectionError> {
    validate_pools(pools, false)?;
    if budget == 0 {
        return Err(SelectionError::ZeroBudget);
    }
    let total = pool_total(pools);
    if budget > total {
        return Err(SelectionError::BudgetExceedsPool {
            budget,
            pool_total: total,
        });
    }
    // Partial Fisher-Yates over global indices: the first `budget` slots
    // hold the sample. Hand-rolled so the manifest only depends on our own
    // code and the ChaCha stream.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..budget {
        let j = rng.gen_range(i..total);
        indices.swap(i, j);
    }
    let mut chosen = indices[..budget].to_vec();
    chosen.sort_unstable();

    // Map global indices back to (pool, segment).
    let mut bounds = Vec::with_capacity(pools.len());
    let mut acc = 0usize;
    for pool in pools {
        bounds.push(acc);
        acc += pool.bitext.len();
    }
    let pairs: Vec<SelectedPair> = chosen
        .iter()
        .map(|&g| {
            let pool_idx = match bounds.binary_search(&g) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            let seg_idx = g - bounds[pool_idx];
            let pool = &pools[pool_idx];
            let pp = pool.scores.as_ref().map(|s| s[seg_idx].perplexity);
            make_pair(pool, seg_idx, pp)
        })
        .collect();
    let report = SelectionReport {
        strategy: Strategy::Rand,
        budget: Some(budget),
        seed: Some(seed),
        per_language: per_language_counts(pools, &pairs),
        total: pairs.len(),
        pool_order: pools.iter().map(|p| p.key.clone()).collect(),
        segments: None,
        deduplicated: false,
    };
    Ok(Selection { pairs, report })
}
