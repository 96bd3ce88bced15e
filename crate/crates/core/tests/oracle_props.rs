//! Property suites checked against independent brute-force oracles.

use proptest::prelude::*;

use deckeval_core::ingest::{ContentSlice, SliceType};
use deckeval_core::retrieval::{bm25_base, build_index, retrieve, tree_aware_scores, RetrievalParams};
use deckeval_core::text::tokenize;
use deckeval_core::tree::{build_tree, ContentTree};

fn slices_from_levels(levels: &[u32]) -> Vec<ContentSlice> {
    levels
        .iter()
        .enumerate()
        .map(|(i, &level)| ContentSlice {
            index: i,
            slice_type: SliceType::Text,
            level,
            title: format!("n{i}"),
            abstract_text: String::new(),
            body: String::new(),
        })
        .collect()
}

/// Recursive-descent nesting oracle over a level sequence.
fn oracle_parents(levels: &[u32]) -> Vec<Option<usize>> {
    fn descend(
        levels: &[u32],
        pos: &mut usize,
        parent: usize,
        parent_level: u32,
        out: &mut Vec<Option<usize>>,
    ) {
        while *pos < levels.len() && levels[*pos] > parent_level {
            let me = *pos;
            out[me] = Some(parent);
            *pos += 1;
            descend(levels, pos, me, levels[me], out);
        }
    }
    let mut out = vec![None; levels.len()];
    let mut pos = 0;
    while pos < levels.len() {
        let root = pos;
        pos += 1;
        descend(levels, &mut pos, root, levels[root], &mut out);
    }
    out
}

/// Brute-force scorer: BM25 + structural fusion + depth bias evaluated
/// independently for every node, then a stable sort.
fn brute_force_retrieve(
    query: &str,
    tree: &ContentTree,
    contents: &[Vec<String>],
    params: &RetrievalParams,
) -> Vec<(usize, f64)> {
    let query_tokens = tokenize(query);
    if query_tokens.is_empty() {
        return Vec::new();
    }
    let n = tree.len() as f64;
    let dl: Vec<f64> = contents.iter().map(|c| c.len().min(params.l_max) as f64).collect();
    let avgdl = dl.iter().sum::<f64>() / n;
    let tf = |node: usize, term: &str| -> f64 {
        contents[node]
            .iter()
            .take(params.l_max)
            .filter(|t| t.as_str() == term)
            .count() as f64
    };
    let df = |term: &str| -> f64 {
        contents
            .iter()
            .filter(|c| c.iter().take(params.l_max).any(|t| t == term))
            .count() as f64
    };
    let s0: Vec<f64> = (0..tree.len())
        .map(|node| {
            let mut score = 0.0;
            for term in &query_tokens {
                let d = df(term);
                if d == 0.0 {
                    continue;
                }
                let f = tf(node, term);
                if f == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - d + 0.5) / (d + 0.5)).ln();
                let norm = if avgdl > 0.0 { dl[node] / avgdl } else { 0.0 };
                score += idf * f * (params.k1 + 1.0)
                    / (f + params.k1 * (1.0 - params.b + params.b * norm));
            }
            score
        })
        .collect();
    let mut fused: Vec<(usize, f64)> = (0..tree.len())
        .map(|node| {
            let children_sum: f64 = tree.nodes[node].children.iter().map(|&c| s0[c]).sum();
            let parent = tree.nodes[node].parent.map(|p| s0[p]).unwrap_or(0.0);
            let mut s = s0[node] + params.alpha_tree * children_sum + params.beta_tree * parent;
            let depth = tree.nodes[node].depth as f64;
            if query_tokens.len() <= params.m0 {
                s /= 1.0 + params.gamma_tree * depth;
            } else {
                s *= 1.0 + params.delta_tree * depth;
            }
            (node, s)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    fused.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    fused.truncate(params.top_k);
    fused
}

const VOCAB: [&str; 4] = ["aa", "bb", "cc", "dd"];

fn corpus_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<Vec<usize>>, Vec<usize>)> {
    (1usize..=6).prop_flat_map(|n| {
        (
            proptest::collection::vec(1u32..=3, n),
            proptest::collection::vec(proptest::collection::vec(0usize..4, 0..10), n),
            proptest::collection::vec(0usize..4, 0..6),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tree_matches_recursive_descent_oracle(levels in proptest::collection::vec(1u32..=4, 0..24)) {
        let tree = build_tree(slices_from_levels(&levels)).expect("build");
        let parents: Vec<Option<usize>> = tree.nodes.iter().map(|n| n.parent).collect();
        prop_assert_eq!(parents, oracle_parents(&levels));
        prop_assert_eq!(tree.edge_count(), tree.len() - tree.roots.len());
        prop_assert_eq!(tree.preorder(), (0..levels.len()).collect::<Vec<_>>());
    }

    #[test]
    fn retrieve_matches_brute_force((levels, word_ids, query_ids) in corpus_strategy()) {
        let contents: Vec<Vec<String>> = word_ids
            .iter()
            .map(|ids| ids.iter().map(|&i| VOCAB[i].to_string()).collect())
            .collect();
        let slices: Vec<ContentSlice> = levels
            .iter()
            .enumerate()
            .map(|(i, &level)| ContentSlice {
                index: i,
                slice_type: SliceType::Text,
                level,
                title: String::new(),
                abstract_text: String::new(),
                body: contents[i].join(" "),
            })
            .collect();
        let tree = build_tree(slices).expect("build");
        let params = RetrievalParams { top_k: 4, ..Default::default() };
        let stats = build_index(&tree, &params).expect("index");
        let query = query_ids.iter().map(|&i| VOCAB[i]).collect::<Vec<_>>().join(" ");

        let got = retrieve(&query, &tree, &stats, &params);
        let expected = brute_force_retrieve(&query, &tree, &contents, &params);

        prop_assert_eq!(got.len(), expected.len());
        for (g, (node, score)) in got.iter().zip(&expected) {
            prop_assert_eq!(g.node_id, *node);
            prop_assert!((g.score - score).abs() < 1e-9, "{} vs {}", g.score, score);
        }
    }

    #[test]
    fn scores_nonnegative_and_sorted((levels, word_ids, query_ids) in corpus_strategy()) {
        let slices: Vec<ContentSlice> = levels
            .iter()
            .enumerate()
            .map(|(i, &level)| ContentSlice {
                index: i,
                slice_type: SliceType::Text,
                level,
                title: String::new(),
                abstract_text: String::new(),
                body: word_ids[i].iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" "),
            })
            .collect();
        let tree = build_tree(slices).expect("build");
        let params = RetrievalParams::default();
        let stats = build_index(&tree, &params).expect("index");
        let query = query_ids.iter().map(|&i| VOCAB[i]).collect::<Vec<_>>().join(" ");
        let tokens = tokenize(&query);
        let s0 = bm25_base(&tokens, &stats, &params);
        for s in &s0 {
            prop_assert!(*s >= 0.0);
        }
        let fused = tree_aware_scores(&s0, &tree, tokens.len(), &params);
        for s in &fused {
            prop_assert!(*s >= 0.0);
        }
        let ranked = retrieve(&query, &tree, &stats, &params);
        for pair in ranked.windows(2) {
            prop_assert!(pair[0].score >= pair[1].score);
            if pair[0].score == pair[1].score {
                prop_assert!(pair[0].node_id < pair[1].node_id);
            }
        }
        for r in &ranked {
            prop_assert!(r.score > 0.0);
        }
    }
}
