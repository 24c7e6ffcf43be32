#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use common::*;
use coursetime::corpus::{full_window_count, segment_video_ms, GoldSpan, OverlapGraph, SegmentRecord, Span};
use coursetime::eval::{
    answer_metrics, bootstrap_ci, hallucination_rate, ndcg_at, recall_at, temporal_recall, wer_bins, BootstrapConfig,
    Label, LabelRecord, SpanLookup,
};
use coursetime::numerics::{
    info_nce_loss, scaled_dot_attention, temporal_loss, FusionModel, ModelDims, WeightBundle,
};
use coursetime::rerank::{mmr_select, mmr_trace, temporal_smooth, RerankCandidate, Reranker, RerankerInput};
use coursetime::retrieval::{search_hybrid, Bm25Index, Bm25Params, FlatIndex, ScoredEntry, ScoredList};
use coursetime::tensor::Matrix;
use coursetime::vectors::VectorBlock;
use coursetime::Exec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:03}")).collect()
}

fn list(scores: &[f64]) -> ScoredList {
    let ids = ids(scores.len());
    ScoredList::from_unsorted("q", ids.iter().zip(scores).map(|(i, s)| ScoredEntry::new(i.clone(), *s)).collect())
}

fn segment(id: &str, video: &str, start_ms: i64, end_ms: i64) -> SegmentRecord {
    SegmentRecord {
        segment_id: id.into(),
        video_id: video.into(),
        course_id: "c".into(),
        span: Span::new(start_ms, end_ms).unwrap(),
        asr_text: String::new(),
        wer: 0.0,
        vector_id: id.into(),
    }
}

fn windows(video: &str, n: usize, window: i64, stride: i64) -> Vec<SegmentRecord> {
    (0..n)
        .map(|i| segment(&format!("{video}@{i}"), video, i as i64 * stride, i as i64 * stride + window))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn full_window_count_formula(d in 1_000i64..3_600_000, w in 1_000i64..60_000, s in 1_000i64..60_000) {
        prop_assume!(d >= w && s <= w);
        prop_assert_eq!(full_window_count(d, w, s) as i64, (d - w) / s + 1);
        let spans = segment_video_ms(d, w, s).unwrap();
        let full = spans.iter().filter(|sp| sp.len_ms() == w).count() as i64;
        prop_assert_eq!(full, (d - w) / s + 1);
        prop_assert!(spans.iter().all(|sp| sp.end_ms <= d && sp.start_ms >= 0));
    }

    #[test]
    fn stride_equal_window_gives_no_edges(n in 1usize..40, w in 1i64..100_000) {
        let g = OverlapGraph::build(&windows("v", n, w, w));
        prop_assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn dense_search_is_exact(seed in any::<u64>(), n in 1usize..80, d in 1usize..24, k in 1usize..20) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f32>> = (0..n).map(|_| random_matrix(&mut r, 1, d)).collect();
        let ids = ids(n);
        let index = FlatIndex::build(&VectorBlock::from_rows(ids.clone(), &rows).unwrap()).unwrap();
        let q = random_matrix(&mut r, 1, d);
        let got = index.search("q", &q, k).unwrap();
        let want = brute_force_topk(&ids, &rows, &q, k);
        prop_assert_eq!(got.len(), want.len());
        for (e, (id, s)) in got.entries().iter().zip(&want) {
            prop_assert_eq!(&e.segment_id, id);
            prop_assert_eq!(e.score, *s as f64);
        }
    }

    #[test]
    fn scored_list_order_is_total(scores in proptest::collection::vec(prop_oneof![Just(0.5), -1.0f64..1.0], 0..40), seed in any::<u64>()) {
        let a = list(&scores);
        prop_assert!(a.is_sorted());
        let mut entries = a.entries().to_vec();
        entries.shuffle(&mut rng(seed));
        let b = ScoredList::from_unsorted("q", entries);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hybrid_extreme_weights_keep_single_order(
        d in proptest::collection::vec(-5.0f64..5.0, 1..20),
        s in proptest::collection::vec(0.0f64..30.0, 1..20),
    ) {
        let dense = list(&d);
        let sparse = list(&s);
        for (w, single) in [(1.0, &dense), (0.0, &sparse)] {
            let h = search_hybrid(&dense, &sparse, w, 100).unwrap();
            let mut ranked: Vec<ScoredEntry> = single.entries().to_vec();
            // ties in normalized score break by id, which is what a fresh sort of the single list gives
            let lo = ranked.iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
            let hi = ranked.iter().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
            for e in &mut ranked {
                e.score = if hi > lo { (e.score - lo) / (hi - lo) } else { 1.0 };
            }
            let want: Vec<String> = ScoredList::from_unsorted("q", ranked).ids().map(String::from).collect();
            let got: Vec<String> = h.ids().filter(|id| single.ids().any(|x| x == *id)).map(String::from).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn bm25_nonnegative_and_monotone_in_tf(tf in 1usize..8, len in 8usize..16) {
        // every doc has the same length; doc i holds i copies of the query term
        let docs: Vec<(String, String)> = (0..=tf)
            .map(|i| {
                let words: Vec<&str> = std::iter::repeat_n("x", i).chain(std::iter::repeat_n("pad", len - i)).collect();
                (format!("d{i}"), words.join(" "))
            })
            .collect();
        let idx = Bm25Index::build(docs.iter().map(|(a, b)| (a.as_str(), b.as_str())), Bm25Params::default());
        let hits = idx.search("q", "x", 100).list;
        prop_assert!(hits.entries().iter().all(|e| e.score >= 0.0));
        let by_id: HashMap<&str, f64> = hits.entries().iter().map(|e| (e.segment_id.as_str(), e.score)).collect();
        for i in 1..tf {
            let (hi, lo) = (format!("d{}", i + 1), format!("d{i}"));
            prop_assert!(by_id[hi.as_str()] > by_id[lo.as_str()]);
        }
    }

    #[test]
    fn mmr_is_permutation_subset_and_matches_oracle(seed in any::<u64>(), n in 1usize..11, m in 1usize..12, alpha in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let rel: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let mut sim = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let s = r.gen_range(-1.0..1.0);
                sim[i][j] = s;
                sim[j][i] = s;
            }
        }
        let names = ids(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let got = mmr_trace(&refs, &rel, &sim, alpha, m);
        prop_assert_eq!(&got, &greedy_mmr(&names, &rel, &sim, alpha, m));
        let picked: BTreeSet<usize> = got.iter().map(|p| p.0).collect();
        prop_assert_eq!(picked.len(), got.len());
        prop_assert_eq!(got.len(), m.min(n));
    }

    #[test]
    fn mmr_alpha_one_is_relevance_top_m(seed in any::<u64>(), n in 1usize..30, m in 1usize..30, d in 2usize..8) {
        let mut r = rng(seed);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let cands = list(&scores);
        let vectors = hashmap_of(&ids(n), &(0..n).map(|_| random_matrix(&mut r, 1, d)).collect::<Vec<_>>());
        let out = mmr_select(&cands, &vectors, 1.0, m).unwrap();
        let want: Vec<&str> = cands.ids().take(m).collect();
        prop_assert_eq!(out.ids().collect::<Vec<_>>(), want);
    }

    #[test]
    fn smoothing_is_linear(seed in any::<u64>(), n in 2usize..25, a in -4.0f64..4.0, lambda in 0.0f64..1.0) {
        let mut r = rng(seed);
        let segs = windows("v", n, 20_000, r.gen_range(2_000..25_000));
        let g = OverlapGraph::build(&segs);
        let s: BTreeMap<String, f64> = segs.iter().map(|x| (x.segment_id.clone(), r.gen_range(-1.0..1.0))).collect();
        let scaled: BTreeMap<String, f64> = s.iter().map(|(k, v)| (k.clone(), a * v)).collect();
        let lhs = temporal_smooth(&scaled, &g, lambda);
        let rhs = temporal_smooth(&s, &g, lambda);
        for (k, v) in &lhs {
            prop_assert!((v - a * rhs[k]).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn info_nce_shift_invariant_and_decreasing(
        pos in -2.0f64..2.0,
        negs in proptest::collection::vec(-2.0f64..2.0, 1..50),
        c in -20.0f64..20.0,
        bump in 0.01f64..1.0,
    ) {
        let tau = 0.07;
        let base = info_nce_loss(pos, &negs, tau).unwrap();
        let shifted: Vec<f64> = negs.iter().map(|v| v + c).collect();
        let moved = info_nce_loss(pos + c, &shifted, tau).unwrap();
        prop_assert!((base - moved).abs() <= 1e-9 * (1.0 + base.abs()));
        prop_assert!(info_nce_loss(pos + bump, &negs, tau).unwrap() < base);
    }

    #[test]
    fn temporal_loss_nonnegative_and_linear_in_lambda(seed in any::<u64>(), n in 1usize..15, lambda in 0.0f64..2.0) {
        let mut r = rng(seed);
        let segs = windows("v", n, 20_000, 10_000);
        let g = OverlapGraph::build(&segs);
        let fused: HashMap<String, Vec<f32>> = segs.iter().map(|s| (s.segment_id.clone(), random_matrix(&mut r, 1, 6))).collect();
        let one = temporal_loss(&fused, &g, 1.0).unwrap();
        let l = temporal_loss(&fused, &g, lambda).unwrap();
        prop_assert!(one >= 0.0);
        prop_assert!((l - lambda * one).abs() <= 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn attention_rows_sum_to_one(seed in any::<u64>(), tq in 1usize..6, tk in 1usize..9) {
        let mut r = rng(seed);
        let d = 16;
        let m = |r: &mut _, rows| Matrix::from_vec(rows, d, random_matrix(r, rows, d)).unwrap();
        let (q, k, v) = (m(&mut r, tq), m(&mut r, tk), m(&mut r, tk));
        let (_, weights) = scaled_dot_attention(&q, &k, &v, 4).unwrap();
        prop_assert_eq!(weights.len(), 4);
        for w in &weights {
            for row in w.iter_rows() {
                let s: f64 = row.iter().map(|&x| x as f64).sum();
                prop_assert!((s - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn recall_monotone_in_k_and_ndcg_bounded(seed in any::<u64>(), n in 1usize..30, nrel in 1usize..6) {
        let mut r = rng(seed);
        let mut ranked = ids(n);
        ranked.shuffle(&mut r);
        let rel: BTreeSet<String> = ids(n + 3).choose_multiple(&mut r, nrel).cloned().collect();
        let refs: Vec<&str> = ranked.iter().map(String::as_str).collect();
        let mut prev = 0.0;
        for k in 1..=n + 2 {
            let rk = recall_at(&refs, &rel, k);
            prop_assert!(rk >= prev);
            prev = rk;
            let nd = ndcg_at(&refs, &rel, k);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&nd));
        }
        // perfect ordering scores 1
        let mut perfect: Vec<String> = rel.iter().cloned().collect();
        perfect.extend(ranked.iter().filter(|x| !rel.contains(*x)).cloned());
        let refs: Vec<&str> = perfect.iter().map(String::as_str).collect();
        prop_assert!((ndcg_at(&refs, &rel, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temporal_recall_monotone_in_threshold(seed in any::<u64>(), n in 1usize..20, k in 1usize..10) {
        let mut r = rng(seed);
        let segs = windows("v", n, 20_000, 10_000);
        let mut spans = SpanLookup::new();
        for s in &segs {
            spans.insert(s.segment_id.clone(), (s.video_id.clone(), s.span));
        }
        let mut gold = BTreeMap::new();
        let mut runs = Vec::new();
        for qi in 0..5 {
            let start = r.gen_range(0..(n as i64 * 10_000 + 5_000));
            let g = GoldSpan { video_id: "v".into(), span: Span::new(start, start + r.gen_range(1_000..40_000)).unwrap() };
            let qid = format!("q{qi}");
            gold.insert(qid.clone(), vec![g]);
            let mut ranked = segs.clone();
            ranked.shuffle(&mut r);
            let m = ranked.len() as f64;
            runs.push(
                ScoredList::from_ranked(
                    qid,
                    ranked.iter().enumerate().map(|(i, s)| ScoredEntry::new(s.segment_id.clone(), m - i as f64)).collect(),
                )
                .unwrap(),
            );
        }
        let mut prev = 1.0;
        for t in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let v = temporal_recall(&runs, &spans, &gold, k, t);
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn f1_symmetric(a in "[a-e ]{1,30}", b in "[a-e ]{1,30}") {
        prop_assume!(!a.trim().is_empty() && !b.trim().is_empty());
        let ab = answer_metrics(&a, &b).unwrap();
        let ba = answer_metrics(&b, &a).unwrap();
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert_eq!(ab.exact_match, ba.exact_match);
    }

    #[test]
    fn wer_bins_balanced(wers in proptest::collection::vec(0.0f64..1.0, 0..200)) {
        let qs: Vec<(String, f64)> = wers.iter().enumerate().map(|(i, w)| (format!("q{i}"), *w)).collect();
        let bins = wer_bins(&qs);
        let sizes: Vec<usize> = bins.iter().map(Vec::len).collect();
        prop_assert_eq!(sizes.iter().sum::<usize>(), qs.len());
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn hallucination_rate_is_mean_unsupported_fraction(labels in proptest::collection::vec((0usize..6, 0u8..3), 1..60)) {
        let lab = |x: u8| [Label::Supported, Label::Unsupported, Label::Contradicted][x as usize];
        let recs: Vec<LabelRecord> = labels
            .iter()
            .enumerate()
            .map(|(i, (item, l))| LabelRecord {
                item_id: format!("a{item}"),
                proposition: format!("p{i}"),
                rater_a: lab(*l),
                rater_b: lab(*l),
                adjudicated: lab(*l),
            })
            .collect();
        let mut per: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (item, l) in &labels {
            per.entry(*item).or_default().push(if *l == 0 { 0.0 } else { 1.0 });
        }
        let want = per.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).sum::<f64>() / per.len() as f64;
        prop_assert!((hallucination_rate(&recs).unwrap() - want).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fused_vectors_are_unit_norm(seed in any::<u64>(), t in 1usize..6, n in 1usize..5) {
        let dims = ModelDims { model: 16, vision: 12, ff_hidden: 8, fusion_layers: 2, rerank_layers: 1 };
        let w = WeightBundle::random(seed, dims);
        let mut r = rng(seed ^ 1);
        let tokens = Matrix::from_vec(t, 16, random_matrix(&mut r, t, 16)).unwrap();
        let frames = Matrix::from_vec(n, 12, random_matrix(&mut r, n, 12)).unwrap();
        let z = FusionModel::load(&w).unwrap().fuse(&tokens, &frames).unwrap();
        let norm = z.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn rerank_deterministic_and_order_invariant(seed in any::<u64>(), n in 1usize..8) {
        let d = 16;
        let w = WeightBundle::random(seed, ModelDims { model: d, vision: 12, ff_hidden: 8, fusion_layers: 1, rerank_layers: 2 });
        let reranker = Reranker::load(&w).unwrap();
        let mut r = rng(seed);
        let mut m = |rows| Matrix::from_vec(rows, d, random_matrix(&mut r, rows, d)).unwrap();
        let query_tokens = m(3);
        let candidates: Vec<RerankCandidate> = (0..n)
            .map(|i| RerankCandidate { segment_id: format!("s{i}"), asr_tokens: m(2 + i % 3), frames: m(4), first_stage_score: 0.0 })
            .collect();
        let input = RerankerInput { query_id: "q".into(), query_tokens, candidates };
        let a = reranker.rerank(&input).unwrap();
        let mut shuffled = input.clone();
        shuffled.candidates.shuffle(&mut rng(seed ^ 7));
        prop_assert_eq!(&a, &reranker.rerank(&shuffled).unwrap());
        prop_assert_eq!(&a, &reranker.rerank_with(&shuffled, Exec::Parallel).unwrap());
    }
}

fn iid_scores(n: usize, seed: u64) -> (BTreeMap<String, f64>, HashMap<String, String>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let scores = (0..n).map(|i| (format!("q{i:05}"), normal.sample(&mut r))).collect();
    let courses = (0..n).map(|i| (format!("q{i:05}"), format!("c{}", i % 3))).collect();
    (scores, courses)
}

#[test]
fn bootstrap_half_width_scales_inverse_sqrt_n() {
    let cfg = BootstrapConfig { replicates: 4000, level: 0.95, seed: 11 };
    let mut ratios = Vec::new();
    for seed in 0..8 {
        let (s1, c1) = iid_scores(200, seed);
        let (s4, c4) = iid_scores(800, seed + 100);
        let h1 = bootstrap_ci(&s1, &c1, &cfg, Exec::Parallel).unwrap().half_width;
        let h4 = bootstrap_ci(&s4, &c4, &cfg, Exec::Parallel).unwrap().half_width;
        ratios.push(h1 / h4);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 2.0).abs() <= 0.15 * 2.0, "n vs 4n half-width ratio {mean:.3}, per seed {ratios:?}");
}

#[test]
fn bootstrap_is_deterministic_given_seed() {
    let (s, c) = iid_scores(300, 5);
    let cfg = BootstrapConfig { replicates: 2000, level: 0.9, seed: 42 };
    let a = bootstrap_ci(&s, &c, &cfg, Exec::Sequential).unwrap();
    let b = bootstrap_ci(&s, &c, &cfg, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    let other = bootstrap_ci(&s, &c, &BootstrapConfig { seed: 43, ..cfg }, Exec::Parallel).unwrap();
    assert_ne!(a, other);
}
