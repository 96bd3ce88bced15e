//! Rayon vs sequential comparison for the data-parallel inner loops:
//! per-node BM25 scoring and per-slide source alignment.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use deckeval_core::deck::{load_package_str, DeckPackage};
use deckeval_core::ingest::{ContentSlice, SliceType};
use deckeval_core::retrieval::{
    bm25_base_par, bm25_base_seq, build_index, CorpusStats, RetrievalParams,
};
use deckeval_core::text::tokenize;
use deckeval_core::tree::{build_tree, ContentTree};

fn synthetic_tree(nodes: usize) -> ContentTree {
    let slices: Vec<ContentSlice> = (0..nodes)
        .map(|i| {
            let body: String = (0..40)
                .map(|j| format!("term{} word{} filler{}", (i + j) % 97, j % 13, i % 7))
                .collect::<Vec<_>>()
                .join(" ");
            ContentSlice {
                index: i,
                slice_type: if i % 7 == 0 { SliceType::Heading } else { SliceType::Text },
                level: 1 + (i % 3) as u32,
                title: format!("section {i}"),
                abstract_text: String::new(),
                body,
            }
        })
        .collect();
    build_tree(slices).expect("tree")
}

fn synthetic_package(slides: usize) -> DeckPackage {
    let slide_json: Vec<String> = (0..slides)
        .map(|i| {
            format!(
                r#"{{"title": "slide {i}", "text_blocks": ["term{} word{} filler{} term{}"], "min_font_size": 18.0}}"#,
                i % 97,
                i % 13,
                i % 7,
                (i + 3) % 97
            )
        })
        .collect();
    let script_json: Vec<String> = (0..slides)
        .map(|i| format!(r#"{{"text": "now we explain term{} and word{}"}}"#, i % 97, i % 13))
        .collect();
    let json = format!(
        r#"{{"requirements": {{"audience": "bench", "duration_minutes": 20.0}},
            "slides": [{}], "scripts": [{}]}}"#,
        slide_json.join(","),
        script_json.join(",")
    );
    load_package_str(&json).expect("package").0
}

fn bench_bm25(c: &mut Criterion) {
    let params = RetrievalParams::default();
    let mut group = c.benchmark_group("bm25_base");
    for nodes in [256usize, 2048] {
        let tree = synthetic_tree(nodes);
        let stats: CorpusStats = build_index(&tree, &params).expect("index");
        let query = tokenize("term5 word3 filler2 term11 word7");
        group.bench_with_input(BenchmarkId::new("seq", nodes), &nodes, |b, _| {
            b.iter(|| black_box(bm25_base_seq(&query, &stats, &params)))
        });
        group.bench_with_input(BenchmarkId::new("par", nodes), &nodes, |b, _| {
            b.iter(|| black_box(bm25_base_par(&query, &stats, &params)))
        });
    }
    group.finish();
}

fn bench_alignment(c: &mut Criterion) {
    let params = RetrievalParams::default();
    let tree = synthetic_tree(512);
    let stats = build_index(&tree, &params).expect("index");
    let pkg = synthetic_package(48);
    let mut group = c.benchmark_group("align_to_source");
    group.bench_function("seq", |b| {
        b.iter(|| {
            black_box(deckeval_core::deck::align_to_source_seq(&pkg, &tree, &stats, &params))
        })
    });
    group.bench_function("par", |b| {
        b.iter(|| {
            black_box(deckeval_core::deck::align_to_source_par(&pkg, &tree, &stats, &params))
        })
    });
    group.finish();
}

criterion_group!(benches, bench_bm25, bench_alignment);
criterion_main!(benches);
