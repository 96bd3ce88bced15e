//! Okapi-BM25 retrieval over the content tree with structural score fusion.
//!
//! Base scores use the standard saturated term-frequency form with
//! `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`. Each node's fused score
//! adds a child-to-parent promotion (`alpha_tree` times the sum of child
//! base scores) and a parent-to-child promotion (`beta_tree` times the
//! parent's base score), then a depth bias keyed on query length: short
//! queries downweight deep nodes by `1 / (1 + gamma_tree * depth)`, longer
//! queries upweight them by `(1 + delta_tree * depth)`.
//!
//! Query tokens form a multiset; every occurrence contributes its idf term,
//! so duplicating the whole query scales every base score uniformly.
//!
//! With the `parallel` feature (default), per-node scoring fans out across
//! threads; results are collected in node order so scores and rankings are
//! bit-identical to the sequential fallback.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{strip_latex_markup, tokenize};
use crate::tree::{read_tree, write_tree, ContentTree, NodeId};

/// Retrieval knobs. All ranges are checked by [`RetrievalParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalParams {
    /// Term-frequency saturation (> 0).
    pub k1: f64,
    /// Length normalization in [0, 1].
    pub b: f64,
    /// Child-to-parent fusion weight (>= 0).
    pub alpha_tree: f64,
    /// Parent-to-child fusion weight (>= 0).
    pub beta_tree: f64,
    /// Overview downweight (>= 0).
    pub gamma_tree: f64,
    /// Detail upweight (>= 0).
    pub delta_tree: f64,
    /// Query-length threshold separating overview from detail queries.
    pub m0: usize,
    /// Per-node token truncation (> 0).
    pub l_max: usize,
    /// Results returned per query (>= 1).
    pub top_k: usize,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            k1: 1.5,
            b: 0.75,
            alpha_tree: 0.3,
            beta_tree: 0.1,
            gamma_tree: 0.1,
            delta_tree: 0.1,
            m0: 3,
            l_max: 8192,
            top_k: 5,
        }
    }
}

impl RetrievalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0) {
            return Err(Error::InvalidParams(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParams(format!("b must be in [0,1], got {}", self.b)));
        }
        for (name, v) in [
            ("alpha_tree", self.alpha_tree),
            ("beta_tree", self.beta_tree),
            ("gamma_tree", self.gamma_tree),
            ("delta_tree", self.delta_tree),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.l_max == 0 {
            return Err(Error::InvalidParams("l_max must be > 0".to_string()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParams("top_k must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Corpus statistics plus per-node term counts; immutable once built, so
/// concurrent read-only queries need no coordination.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    /// Term -> number of nodes containing it.
    pub df: BTreeMap<String, usize>,
    /// Node id -> token count after truncation.
    pub dl: Vec<usize>,
    /// Mean of `dl` over all nodes.
    pub avgdl: f64,
    pub node_count: usize,
    term_counts: Vec<HashMap<String, usize>>,
}

impl CorpusStats {
    pub fn term_frequency(&self, node: NodeId, term: &str) -> usize {
        self.term_counts[node].get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        if df == 0 {
            return 0.0;
        }
        (1.0 + (self.node_count as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln()
    }
}

/// Tokenize node contents (markup stripped), truncate each node at `l_max`
/// tokens, and compute df/dl/avgdl in one pass over the tree.
pub fn build_index(tree: &ContentTree, params: &RetrievalParams) -> Result<CorpusStats> {
    params.validate()?;
    if tree.is_empty() {
        return Err(Error::EmptyTree);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut dl = Vec::with_capacity(tree.len());
    let mut term_counts = Vec::with_capacity(tree.len());
    for node in &tree.nodes {
        let mut tokens = tokenize(&strip_latex_markup(&node.content));
        tokens.truncate(params.l_max);
        dl.push(tokens.len());
        let mut counts: HashMap<String, usize> = HashMap::new();
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        for term in counts.keys() {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
        term_counts.push(counts);
    }
    let total: usize = dl.iter().sum();
    let avgdl = total as f64 / tree.len() as f64;
    Ok(CorpusStats {
        df,
        dl,
        avgdl,
        node_count: tree.len(),
        term_counts,
    })
}

/// Query terms with multiplicities, in first-occurrence order so summation
/// order is fixed.
fn query_multiset(query_tokens: &[String]) -> Vec<(String, usize)> {
    let mut terms: Vec<(String, usize)> = Vec::new();
    for token in query_tokens {
        match terms.iter_mut().find(|(t, _)| t == token) {
            Some((_, count)) => *count += 1,
            None => terms.push((token.clone(), 1)),
        }
    }
    terms
}

fn score_node(
    node: NodeId,
    terms: &[(String, usize, f64)],
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> f64 {
    let dl = stats.dl[node] as f64;
    let norm = if stats.avgdl > 0.0 { dl / stats.avgdl } else { 0.0 };
    let denom_base = params.k1 * (1.0 - params.b + params.b * norm);
    let mut score = 0.0;
    for (term, count, idf) in terms {
        let tf = stats.term_frequency(node, term) as f64;
        if tf > 0.0 {
            score += *count as f64 * idf * (tf * (params.k1 + 1.0)) / (tf + denom_base);
        }
    }
    score
}

fn prepared_terms(
    query_tokens: &[String],
    stats: &CorpusStats,
) -> Vec<(String, usize, f64)> {
    query_multiset(query_tokens)
        .into_iter()
        .map(|(term, count)| {
            let idf = stats.idf(&term);
            (term, count, idf)
        })
        .collect()
}

/// Base BM25 score for every node (zero when no query term matches).
/// An empty query yields all zeros.
pub fn bm25_base(query_tokens: &[String], stats: &CorpusStats, params: &RetrievalParams) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        bm25_base_par(query_tokens, stats, params)
    }
    #[cfg(not(feature = "parallel"))]
    {
        bm25_base_seq(query_tokens, stats, params)
    }
}

pub fn bm25_base_seq(
    query_tokens: &[String],
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<f64> {
    let terms = prepared_terms(query_tokens, stats);
    (0..stats.node_count)
        .map(|node| score_node(node, &terms, stats, params))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn bm25_base_par(
    query_tokens: &[String],
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<f64> {
    let terms = prepared_terms(query_tokens, stats);
    (0..stats.node_count)
        .into_par_iter()
        .map(|node| score_node(node, &terms, stats, params))
        .collect()
}

/// Fuse base scores through the tree and apply the query-granularity depth
/// bias. `query_len` is the query token count (multiset size). Roots take a
/// parent score of zero. Cost is linear in nodes + edges.
pub fn tree_aware_scores(
    s0: &[f64],
    tree: &ContentTree,
    query_len: usize,
    params: &RetrievalParams,
) -> Vec<f64> {
    let overview = query_len <= params.m0;
    tree.nodes
        .iter()
        .map(|node| {
            let child_sum: f64 = node.children.iter().map(|&c| s0[c]).sum();
            let parent = node.parent.map(|p| s0[p]).unwrap_or(0.0);
            let fused = s0[node.id] + params.alpha_tree * child_sum + params.beta_tree * parent;
            let depth = node.depth as f64;
            if overview {
                fused / (1.0 + params.gamma_tree * depth)
            } else {
                fused * (1.0 + params.delta_tree * depth)
            }
        })
        .collect()
}

/// One ranked node: fused score plus the base score it started from.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub node_id: NodeId,
    pub score: f64,
    pub base_score: f64,
}

/// Full query path: tokenize, base-score, fuse, bias, and return the top-K
/// strictly positive scores (descending, ties to the lower node id). An
/// empty query (after tokenization) returns no results.
pub fn retrieve(
    query: &str,
    tree: &ContentTree,
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<RankedResult> {
    let tokens = tokenize(query);
    if tokens.is_empty() {
        return Vec::new();
    }
    let s0 = bm25_base(&tokens, stats, params);
    let s = tree_aware_scores(&s0, tree, tokens.len(), params);
    let mut results: Vec<RankedResult> = s
        .iter()
        .enumerate()
        .filter(|(_, &score)| score > 0.0)
        .map(|(node_id, &score)| RankedResult {
            node_id,
            score,
            base_score: s0[node_id],
        })
        .collect();
    results.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then(a.node_id.cmp(&b.node_id))
    });
    results.truncate(params.top_k);
    results
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StatsRecord {
    Stats { node_count: usize, avgdl: f64 },
    Dl { values: Vec<usize> },
    Df { term: String, count: usize },
}

/// Write the full index file: tree records followed by corpus-statistic
/// records (summary, per-node lengths, document frequencies in term order).
pub fn write_index<W: Write>(tree: &ContentTree, stats: &CorpusStats, mut w: W) -> Result<()> {
    write_tree(tree, &mut w)?;
    let summary = StatsRecord::Stats { node_count: stats.node_count, avgdl: stats.avgdl };
    writeln!(w, "{}", serde_json::to_string(&summary).expect("stats"))?;
    let dl = StatsRecord::Dl { values: stats.dl.clone() };
    writeln!(w, "{}", serde_json::to_string(&dl).expect("dl"))?;
    for (term, count) in &stats.df {
        let df = StatsRecord::Df { term: term.clone(), count: *count };
        writeln!(w, "{}", serde_json::to_string(&df).expect("df"))?;
    }
    Ok(())
}

/// Read a file written by [`write_index`]. Term statistics are rebuilt from
/// node contents at query time (truncation depends on the live `l_max`),
/// so only the stored summary is checked against the tree.
pub fn read_index<R: BufRead>(r: R) -> Result<ContentTree> {
    let mut tree_lines = String::new();
    let mut stored_node_count = None;
    let mut stored_dl_len = None;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::IndexFile(e.to_string()))?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("header") | Some("node") | Some("edge") => {
                tree_lines.push_str(&line);
                tree_lines.push('\n');
            }
            Some("stats") => {
                let record: StatsRecord =
                    serde_json::from_str(&line).map_err(|e| Error::IndexFile(e.to_string()))?;
                if let StatsRecord::Stats { node_count, .. } = record {
                    stored_node_count = Some(node_count);
                }
            }
            Some("dl") => {
                let record: StatsRecord =
                    serde_json::from_str(&line).map_err(|e| Error::IndexFile(e.to_string()))?;
                if let StatsRecord::Dl { values } = record {
                    stored_dl_len = Some(values.len());
                }
            }
            Some("df") => {}
            other => {
                return Err(Error::IndexFile(format!("unknown record kind {other:?}")));
            }
        }
    }
    let tree = read_tree(std::io::BufReader::new(tree_lines.as_bytes()))?;
    if let Some(n) = stored_node_count {
        if n != tree.len() {
            return Err(Error::IndexFile(format!(
                "stats claim {n} nodes but the tree has {}",
                tree.len()
            )));
        }
    }
    if let Some(n) = stored_dl_len {
        if n != tree.len() {
            return Err(Error::IndexFile(format!(
                "dl record covers {n} nodes but the tree has {}",
                tree.len()
            )));
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContentSlice, SliceType};
    use crate::tree::build_tree;

    fn tree_from(contents: &[(&str, u32)]) -> ContentTree {
        let slices: Vec<ContentSlice> = contents
            .iter()
            .enumerate()
            .map(|(i, (body, level))| ContentSlice {
                index: i,
                slice_type: SliceType::Text,
                level: *level,
                title: format!("node {i}"),
                abstract_text: String::new(),
                body: body.to_string(),
            })
            .collect();
        build_tree(slices).expect("tree")
    }

    #[test]
    fn toy_corpus_statistics() {
        let tree = tree_from(&[("aa bb", 1), ("aa", 1)]);
        let stats = build_index(&tree, &RetrievalParams::default()).expect("index");
        // Oracle: hand count over the toy corpus.
        assert_eq!(stats.df.get("aa"), Some(&2));
        assert_eq!(stats.df.get("bb"), Some(&1));
        assert_eq!(stats.dl, vec![2, 1]);
        assert!((stats.avgdl - 1.5).abs() < 1e-12);
        assert_eq!(stats.node_count, 2);
    }

    #[test]
    fn truncation_caps_document_length() {
        let body = vec!["tok"; 50].join(" ");
        let tree = tree_from(&[(&body, 1)]);
        let params = RetrievalParams { l_max: 7, ..Default::default() };
        let stats = build_index(&tree, &params).expect("index");
        assert_eq!(stats.dl, vec![7]);
    }

    #[test]
    fn l_max_sweep_accepted() {
        let tree = tree_from(&[("aa bb cc", 1)]);
        for l_max in [4096usize, 8192, 16384] {
            let params = RetrievalParams { l_max, ..Default::default() };
            build_index(&tree, &params).expect("index accepts l_max");
        }
    }

    #[test]
    fn empty_tree_rejected() {
        let err = build_index(&ContentTree::default(), &RetrievalParams::default());
        assert!(matches!(err, Err(Error::EmptyTree)));
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = RetrievalParams { b: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RetrievalParams { k1: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RetrievalParams { alpha_tree: -0.1, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn absent_term_scores_zero_everywhere() {
        let tree = tree_from(&[("aa bb", 1), ("aa", 1)]);
        let stats = build_index(&tree, &RetrievalParams::default()).expect("index");
        let s0 = bm25_base(&tokenize("zz"), &stats, &RetrievalParams::default());
        assert_eq!(s0, vec![0.0, 0.0]);
    }

    #[test]
    fn degenerate_point_equals_idf() {
        // One node, df = tf = 1, dl = avgdl: the saturation fraction is 1
        // for any k1, so the score is exactly idf = ln(1 + 0.5/1.5).
        let tree = tree_from(&[("aa", 1)]);
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        let s0 = bm25_base(&tokenize("aa"), &stats, &params);
        let expected = (4.0f64 / 3.0).ln(); // 0.28768207...
        assert!((s0[0] - expected).abs() < 1e-12, "{} vs {expected}", s0[0]);
        assert!((s0[0] - 0.287_682_072_451_780_9).abs() < 1e-12);
    }

    #[test]
    fn three_node_corpus_matches_independent_arithmetic() {
        let tree = tree_from(&[("aa bb aa", 1), ("aa cc", 1), ("bb bb cc cc", 1)]);
        let params = RetrievalParams { k1: 1.5, b: 0.75, ..Default::default() };
        let stats = build_index(&tree, &params).expect("index");
        let s0 = bm25_base(&tokenize("aa bb"), &stats, &params);

        // Oracle: independent evaluation of the BM25 formula, written out
        // term by term with hand-tallied tf/df/dl.
        let n = 3.0f64;
        let avgdl = (3.0 + 2.0 + 4.0) / 3.0;
        let idf = |df: f64| (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        let sat = |tf: f64, dl: f64| {
            if tf == 0.0 {
                0.0
            } else {
                tf * (1.5 + 1.0) / (tf + 1.5 * (1.0 - 0.75 + 0.75 * dl / avgdl))
            }
        };
        let expected = [
            idf(2.0) * sat(2.0, 3.0) + idf(2.0) * sat(1.0, 3.0),
            idf(2.0) * sat(1.0, 2.0),
            idf(2.0) * sat(2.0, 4.0),
        ];
        for (got, want) in s0.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn fusion_disabled_reduces_to_plain_bm25() {
        let tree = tree_from(&[("aa bb", 1), ("aa", 2), ("bb", 2)]);
        let params = RetrievalParams {
            alpha_tree: 0.0,
            beta_tree: 0.0,
            gamma_tree: 0.0,
            delta_tree: 0.0,
            ..Default::default()
        };
        let stats = build_index(&tree, &params).expect("index");
        let s0 = bm25_base(&tokenize("aa bb"), &stats, &params);
        let s = tree_aware_scores(&s0, &tree, 2, &params);
        assert_eq!(s0, s);
    }

    #[test]
    fn fusion_and_overview_bias_hand_example() {
        // Node 1 at depth 1 with base 1.0, children base 0.5 + 0.5,
        // parent base 0.2; alpha 0.3, beta 0.1, gamma 0.1; overview query.
        let tree = tree_from(&[("", 1), ("", 2), ("", 3), ("", 3)]);
        let params = RetrievalParams {
            alpha_tree: 0.3,
            beta_tree: 0.1,
            gamma_tree: 0.1,
            delta_tree: 0.1,
            m0: 3,
            ..Default::default()
        };
        let s0 = vec![0.2, 1.0, 0.5, 0.5];
        let s = tree_aware_scores(&s0, &tree, 2, &params);
        assert!((s[1] - 1.2).abs() < 1e-9, "overview branch: {}", s[1]);
        let s = tree_aware_scores(&s0, &tree, 5, &params);
        assert!((s[1] - 1.452).abs() < 1e-9, "detail branch: {}", s[1]);
    }

    #[test]
    fn fewer_positive_scores_than_k() {
        let tree = tree_from(&[("aa", 1), ("aa", 1), ("bb", 1), ("cc", 1)]);
        let params = RetrievalParams { top_k: 5, alpha_tree: 0.0, beta_tree: 0.0, ..Default::default() };
        let stats = build_index(&tree, &params).expect("index");
        let results = retrieve("aa", &tree, &stats, &params);
        assert_eq!(results.len(), 2);
    }

    #[test]
    fn k_sweep_returns_min_k_positives() {
        let bodies: Vec<String> = (0..10).map(|i| format!("aa filler{i}")).collect();
        let refs: Vec<(&str, u32)> = bodies.iter().map(|b| (b.as_str(), 1)).collect();
        let tree = tree_from(&refs);
        for k in [3usize, 5, 7] {
            let params = RetrievalParams { top_k: k, ..Default::default() };
            let stats = build_index(&tree, &params).expect("index");
            let results = retrieve("aa", &tree, &stats, &params);
            assert_eq!(results.len(), k.min(10));
        }
    }

    #[test]
    fn empty_query_returns_nothing() {
        let tree = tree_from(&[("aa", 1)]);
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        assert!(retrieve("", &tree, &stats, &params).is_empty());
        assert!(retrieve("! ?", &tree, &stats, &params).is_empty());
    }

    #[test]
    fn ties_break_toward_lower_node_id() {
        let tree = tree_from(&[("aa", 1), ("aa", 1)]);
        let params = RetrievalParams { alpha_tree: 0.0, beta_tree: 0.0, ..Default::default() };
        let stats = build_index(&tree, &params).expect("index");
        let results = retrieve("aa", &tree, &stats, &params);
        assert_eq!(results[0].node_id, 0);
        assert_eq!(results[1].node_id, 1);
        assert_eq!(results[0].score, results[1].score);
    }

    #[test]
    fn query_duplication_doubles_base_scores() {
        let tree = tree_from(&[("aa bb cc", 1), ("aa aa", 1)]);
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        let single = bm25_base(&tokenize("aa bb"), &stats, &params);
        let doubled = bm25_base(&tokenize("aa bb aa bb"), &stats, &params);
        for (s, d) in single.iter().zip(&doubled) {
            assert!((2.0 * s - d).abs() < 1e-12);
        }
    }

    #[test]
    fn child_promotion_never_decreases_parent_fused_score() {
        let tree = tree_from(&[("aa", 1), ("aa", 2)]);
        let params = RetrievalParams {
            alpha_tree: 0.3,
            gamma_tree: 0.0,
            delta_tree: 0.0,
            ..Default::default()
        };
        // Same base scores except the child's contribution is switched on.
        let with_child = tree_aware_scores(&[1.0, 0.7], &tree, 1, &params);
        let without = tree_aware_scores(&[1.0, 0.0], &tree, 1, &params);
        assert!(with_child[0] >= without[0]);
        assert!((with_child[0] - (1.0 + 0.3 * 0.7)).abs() < 1e-12);
    }

    #[test]
    fn index_file_roundtrip_preserves_tree() {
        let tree = tree_from(&[("aa bb", 1), ("aa cc", 2), ("bb", 1)]);
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        let mut buf = Vec::new();
        write_index(&tree, &stats, &mut buf).expect("write");
        let back = read_index(std::io::BufReader::new(buf.as_slice())).expect("read");
        assert_eq!(tree, back);
        let rebuilt = build_index(&back, &params).expect("rebuild");
        assert_eq!(rebuilt.df, stats.df);
        assert_eq!(rebuilt.dl, stats.dl);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_scores_identical() {
        let bodies: Vec<String> = (0..64)
            .map(|i| format!("aa bb{} cc{} dd", i % 5, i % 3))
            .collect();
        let refs: Vec<(&str, u32)> = bodies
            .iter()
            .enumerate()
            .map(|(i, b)| (b.as_str(), 1 + (i % 3) as u32))
            .collect();
        let tree = tree_from(&refs);
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        let q = tokenize("aa bb0 cc1 dd");
        assert_eq!(
            bm25_base_seq(&q, &stats, &params),
            bm25_base_par(&q, &stats, &params)
        );
    }
}
