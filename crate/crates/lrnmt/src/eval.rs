//! Translation quality measurement: unsmoothed corpus BLEU and paired
//! bootstrap significance testing.
//!
//! BLEU here is 4-gram, uniform weights, clipped counts, multiplicative
//! brevity penalty, computed over whitespace tokens of detokenized text.
//! The variant is fixed and internal; scores are comparable across runs of
//! this toolkit, not across publications.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("hypothesis/reference count mismatch: {hyps} vs {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("reference segment {0} is empty")]
    EmptyReference(usize),
    #[error("resample count {0} too small (need at least 100)")]
    TooFewResamples(usize),
    #[error("the two systems were scored on different test sets")]
    MismatchedTestSets,
}

/// Corpus-level BLEU with its components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0..100.
    pub score: f64,
    /// Modified n-gram precisions p1..p4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_tokens: usize,
    pub ref_tokens: usize,
}

/// Per-segment sufficient statistics; corpus BLEU over any subset is a sum
/// of these, which is what makes bootstrap resampling cheap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl SegmentStats {
    fn add(&mut self, other: &SegmentStats) {
        for k in 0..MAX_ORDER {
            self.matches[k] += other.matches[k];
            self.totals[k] += other.totals[k];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn ngram_counts<'a>(toks: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, u64> {
    let mut counts = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram statistics for one hypothesis/reference pair.
pub fn segment_stats(hyp: &str, reference: &str) -> SegmentStats {
    let hyp_toks = tokens(hyp);
    let ref_toks = tokens(reference);
    let mut stats = SegmentStats {
        hyp_len: hyp_toks.len() as u64,
        ref_len: ref_toks.len() as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let hyp_ngrams = ngram_counts(&hyp_toks, n);
        let ref_ngrams = ngram_counts(&ref_toks, n);
        let mut matches = 0u64;
        for (gram, &count) in &hyp_ngrams {
            let clip = ref_ngrams.get(gram).copied().unwrap_or(0);
            matches += count.min(clip);
        }
        stats.matches[n - 1] = matches;
        stats.totals[n - 1] = hyp_toks.len().saturating_sub(n - 1) as u64;
    }
    stats
}

fn bleu_from_stats(total: &SegmentStats) -> BleuScore {
    let mut precisions = [0.0f64; MAX_ORDER];
    let mut log_sum = 0.0f64;
    let mut any_zero = false;
    for k in 0..MAX_ORDER {
        let p = if total.totals[k] == 0 {
            0.0
        } else {
            total.matches[k] as f64 / total.totals[k] as f64
        };
        precisions[k] = p;
        if p == 0.0 {
            any_zero = true;
        } else {
            log_sum += p.ln();
        }
    }
    let bp = if total.hyp_len == 0 {
        0.0
    } else if total.hyp_len < total.ref_len {
        (1.0 - total.ref_len as f64 / total.hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if any_zero || total.hyp_len == 0 {
        0.0 // unsmoothed: any empty precision zeroes the score
    } else {
        bp * (log_sum / MAX_ORDER as f64).exp() * 100.0
    };
    BleuScore {
        score,
        precisions,
        brevity_penalty: bp,
        hyp_tokens: total.hyp_len as usize,
        ref_tokens: total.ref_len as usize,
    }
}

/// Corpus BLEU of hypotheses against line-aligned references.
pub fn bleu(hyps: &[String], refs: &[String]) -> Result<BleuScore, EvalError> {
    let stats = paired_stats(hyps, refs)?;
    let mut total = SegmentStats::default();
    for s in &stats {
        total.add(s);
    }
    Ok(bleu_from_stats(&total))
}

fn paired_stats(hyps: &[String], refs: &[String]) -> Result<Vec<SegmentStats>, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    for (i, r) in refs.iter().enumerate() {
        if r.split_whitespace().next().is_none() {
            return Err(EvalError::EmptyReference(i));
        }
    }
    Ok(hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| segment_stats(h, r))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
}

/// Outcome of a paired bootstrap comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// Fraction of resamples in which the observed winner fails to win
    /// (ties count against it). 1.0 when the full-set scores tie.
    pub p_value: f64,
    pub resamples: usize,
    /// Mean over resamples of BLEU(A) − BLEU(B).
    pub mean_score_difference: f64,
    /// Winner on the full test set; `None` on an exact tie.
    pub winner: Option<Winner>,
    pub bleu_a: f64,
    pub bleu_b: f64,
}

/// Paired bootstrap resampling: segment indices are drawn with replacement,
/// the same draw is applied to both systems, and the winner's stability is
/// measured. Deterministic for a fixed seed.
pub fn bootstrap(
    hyps_a: &[String],
    hyps_b: &[String],
    refs: &[String],
    resamples: usize,
    seed: u64,
) -> Result<SignificanceResult, EvalError> {
    if hyps_a.len() != hyps_b.len() {
        return Err(EvalError::MismatchedTestSets);
    }
    if resamples < 100 {
        return Err(EvalError::TooFewResamples(resamples));
    }
    let stats_a = paired_stats(hyps_a, refs)?;
    let stats_b = paired_stats(hyps_b, refs)?;
    let n = stats_a.len();

    let full_a = bleu(hyps_a, refs)?;
    let full_b = bleu(hyps_b, refs)?;
    let observed = full_a.score - full_b.score;
    let winner = if observed > 0.0 {
        Some(Winner::A)
    } else if observed < 0.0 {
        Some(Winner::B)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0usize;
    let mut diff_sum = 0.0f64;
    for _ in 0..resamples {
        let mut tot_a = SegmentStats::default();
        let mut tot_b = SegmentStats::default();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            tot_a.add(&stats_a[i]);
            tot_b.add(&stats_b[i]);
        }
        let d = bleu_from_stats(&tot_a).score - bleu_from_stats(&tot_b).score;
        diff_sum += d;
        let won = match winner {
            Some(Winner::A) => d > 0.0,
            Some(Winner::B) => d < 0.0,
            None => false,
        };
        if won {
            wins += 1;
        }
    }
    let p_value = if winner.is_none() {
        1.0
    } else {
        1.0 - wins as f64 / resamples as f64
    };
    Ok(SignificanceResult {
        p_value,
        resamples,
        mean_score_difference: diff_sum / resamples as f64,
        winner,
        bleu_a: full_a.score,
        bleu_b: full_b.score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lines(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identity_scores_100() {
        let refs = lines(&["the cat sat on the mat", "a dog barks at night"]);
        let b = bleu(&refs, &refs).unwrap();
        assert!((b.score - 100.0).abs() < 1e-9);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn zero_fourgram_overlap_scores_zero() {
        let hyps = lines(&["aa bb cc dd ee"]);
        let refs = lines(&["vv ww xx yy zz"]);
        let b = bleu(&hyps, &refs).unwrap();
        assert_eq!(b.score, 0.0);
    }

    // The classic clipping case: hyp = "the" × 7 against
    // "the cat is on the mat". "the" occurs twice in the reference, so
    // clipped unigram matches = 2 of 7.
    #[test]
    fn clipping_hand_case_p1_is_two_sevenths() {
        let hyps = lines(&["the the the the the the the"]);
        let refs = lines(&["the cat is on the mat"]);
        let b = bleu(&hyps, &refs).unwrap();
        assert!((b.precisions[0] - 2.0 / 7.0).abs() < 1e-12);
        assert_eq!(b.score, 0.0); // no bigram match → unsmoothed zero
    }

    #[test]
    fn brevity_penalty_applies_when_short() {
        let hyps = lines(&["the cat sat on"]);
        let refs = lines(&["the cat sat on the mat"]);
        let b = bleu(&hyps, &refs).unwrap();
        let expected_bp = (1.0f64 - 6.0 / 4.0).exp();
        assert!((b.brevity_penalty - expected_bp).abs() < 1e-12);
        assert!(b.score > 0.0 && b.score < 100.0);
    }

    #[test]
    fn length_mismatch_and_empty_ref_are_errors() {
        assert!(matches!(
            bleu(&lines(&["a"]), &lines(&["a", "b"])),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            bleu(&lines(&["a"]), &lines(&["  "])),
            Err(EvalError::EmptyReference(0))
        ));
        assert!(matches!(bleu(&[], &[]), Err(EvalError::EmptyTestSet)));
    }

    #[test]
    fn degradation_is_monotone_in_corruption() {
        let refs: Vec<String> = (0..40)
            .map(|i| format!("w{i} x{i} y{i} z{i} q{i} r{i} s{i} t{i}"))
            .collect();
        let mut last = 101.0f64;
        for k in [0usize, 2, 4, 6] {
            // Corrupt the first k tokens of every hypothesis.
            let hyps: Vec<String> = refs
                .iter()
                .map(|r| {
                    let mut toks: Vec<String> =
                        r.split_whitespace().map(str::to_string).collect();
                    for t in toks.iter_mut().take(k) {
                        *t = "junk".to_string();
                    }
                    toks.join(" ")
                })
                .collect();
            let b = bleu(&hyps, &refs).unwrap();
            assert!(b.score <= last, "k={k}: {} > {last}", b.score);
            last = b.score;
        }
    }

    #[test]
    fn bootstrap_self_comparison_is_never_significant() {
        let refs: Vec<String> = (0..50)
            .map(|i| format!("tok{i} alpha beta gamma delta"))
            .collect();
        let hyps: Vec<String> = refs
            .iter()
            .map(|r| r.replace("delta", "junk"))
            .collect();
        for seed in 0..5 {
            let r = bootstrap(&hyps, &hyps, &refs, 200, seed).unwrap();
            assert!(r.winner.is_none());
            assert!(r.p_value >= 0.05, "p {} at seed {seed}", r.p_value);
        }
    }

    #[test]
    fn bootstrap_dominant_system_gets_p_zero() {
        let refs: Vec<String> = (0..50)
            .map(|i| format!("tok{i} alpha beta gamma delta"))
            .collect();
        let worse: Vec<String> = (0..50).map(|_| "zz yy xx ww vv".to_string()).collect();
        let r = bootstrap(&refs, &worse, &refs, 300, 7).unwrap();
        assert_eq!(r.winner, Some(Winner::A));
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn bootstrap_deterministic_per_seed() {
        let refs: Vec<String> = (0..30)
            .map(|i| format!("a{i} b{i} c{i} d{i} e{i}"))
            .collect();
        let hyps_a: Vec<String> = refs
            .iter()
            .enumerate()
            .map(|(i, r)| if i % 3 == 0 { "x y z w v".to_string() } else { r.clone() })
            .collect();
        let hyps_b: Vec<String> = refs
            .iter()
            .enumerate()
            .map(|(i, r)| if i % 4 == 0 { "x y z w v".to_string() } else { r.clone() })
            .collect();
        let r1 = bootstrap(&hyps_a, &hyps_b, &refs, 500, 11).unwrap();
        let r2 = bootstrap(&hyps_a, &hyps_b, &refs, 500, 11).unwrap();
        assert_eq!(r1.p_value, r2.p_value);
        assert_eq!(r1.mean_score_difference, r2.mean_score_difference);
    }

    #[test]
    fn bootstrap_relabel_symmetry() {
        let refs: Vec<String> = (0..30)
            .map(|i| format!("a{i} b{i} c{i} d{i} e{i}"))
            .collect();
        let hyps_a = refs.clone();
        let hyps_b: Vec<String> = refs
            .iter()
            .enumerate()
            .map(|(i, r)| if i % 2 == 0 { "x y z w v".to_string() } else { r.clone() })
            .collect();
        let ab = bootstrap(&hyps_a, &hyps_b, &refs, 400, 3).unwrap();
        let ba = bootstrap(&hyps_b, &hyps_a, &refs, 400, 3).unwrap();
        assert_eq!(ab.winner, Some(Winner::A));
        assert_eq!(ba.winner, Some(Winner::B));
        // Same draws, swapped labels: identical winner stability.
        assert_eq!(ab.p_value, ba.p_value);
        assert!((ab.mean_score_difference + ba.mean_score_difference).abs() < 1e-12);
    }

    proptest! {
        // Joint permutation of (hyp, ref) pairs leaves corpus BLEU unchanged.
        #[test]
        fn bleu_permutation_invariance(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let refs: Vec<String> = (0..12).map(|i| format!("r{i} s{i} t{i} u{i} v{i}")).collect();
            let hyps: Vec<String> = refs
                .iter()
                .enumerate()
                .map(|(i, r)| if i % 2 == 0 { r.clone() } else { format!("x{i} s{i} t{i} u{i} k{i}") })
                .collect();
            let before = bleu(&hyps, &refs).unwrap();
            let mut idx: Vec<usize> = (0..refs.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            idx.shuffle(&mut rng);
            let hyps2: Vec<String> = idx.iter().map(|&i| hyps[i].clone()).collect();
            let refs2: Vec<String> = idx.iter().map(|&i| refs[i].clone()).collect();
            let after = bleu(&hyps2, &refs2).unwrap();
            prop_assert!((before.score - after.score).abs() < 1e-9);
        }
    }
}
