//! Pluggable text-similarity scorers.
//!
//! Scoring code only sees these traits; the defaults are deterministic and
//! self-contained. An external lexical metric or embedding model can be
//! swapped in without touching any scoreboard formula. Implementations must
//! return values in [0, 1]; callers enforce the contract.

use std::collections::HashMap;

use crate::text::tokenize;

pub trait LexicalScorer: Send + Sync {
    fn name(&self) -> &str;
    /// Overlap of `candidate` against `reference` in [0, 1].
    fn score(&self, candidate: &str, reference: &str) -> f64;
}

pub trait SemanticScorer: Send + Sync {
    fn name(&self) -> &str;
    /// Symmetric similarity of two texts in [0, 1].
    fn score(&self, a: &str, b: &str) -> f64;
}

/// ROUGE-L F-measure: longest common subsequence over tokens.
/// Either side empty scores 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct RougeL;

impl LexicalScorer for RougeL {
    fn name(&self) -> &str {
        "rouge-l"
    }

    fn score(&self, candidate: &str, reference: &str) -> f64 {
        let cand = tokenize(candidate);
        let refr = tokenize(reference);
        if cand.is_empty() || refr.is_empty() {
            return 0.0;
        }
        let lcs = lcs_length(&cand, &refr) as f64;
        if lcs == 0.0 {
            return 0.0;
        }
        let precision = lcs / cand.len() as f64;
        let recall = lcs / refr.len() as f64;
        2.0 * precision * recall / (precision + recall)
    }
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Two-row DP keeps memory linear in the shorter side.
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for item in long {
        for (j, other) in short.iter().enumerate() {
            cur[j + 1] = if item == other {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Cosine similarity of term-frequency vectors over the shared tokenizer.
/// A deterministic stand-in for an embedding-based similarity; zero when
/// either side has no tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfCosine;

impl SemanticScorer for TfCosine {
    fn name(&self) -> &str {
        "tf-cosine"
    }

    fn score(&self, a: &str, b: &str) -> f64 {
        let va = term_counts(a);
        let vb = term_counts(b);
        if va.is_empty() || vb.is_empty() {
            return 0.0;
        }
        let dot: f64 = va
            .iter()
            .filter_map(|(term, &ca)| vb.get(term).map(|&cb| ca as f64 * cb as f64))
            .sum();
        let norm_a: f64 = va.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let norm_b: f64 = vb.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        if norm_a == 0.0 || norm_b == 0.0 {
            0.0
        } else {
            (dot / (norm_a * norm_b)).clamp(0.0, 1.0)
        }
    }
}

fn term_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for token in tokenize(text) {
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}
