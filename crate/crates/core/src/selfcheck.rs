//! Oracle-equivalence checks on a small corpus.
//!
//! Each check recomputes a library result with a direct brute-force
//! reference and compares the two. Output is deterministic: no timings,
//! no thread-dependent values.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::corpus::{segment_video, Corpus};
use crate::eval::{
    answer_metrics, bootstrap_ci, cohen_kappa, normalize_answer, rank_metrics, span_lookup, temporal_recall,
    BootstrapConfig, Qrels,
};
use crate::par::Exec;
use crate::pipeline::{toy_bm25, toy_queries, toy_store, toy_text_vectors, toy_weights, Pipeline, PipelineSettings};
use crate::rerank::{cosine, mmr_select, smooth_list};
use crate::retrieval::{search_hybrid, tokenize, FlatIndex, ScoredEntry, ScoredList};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelfcheckReport {
    pub checks: Vec<Check>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{} {:<16} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{n}/{} checks passed", self.checks.len());
        out
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name, passed, detail: detail.into() });
    }
}

fn ref_rank(mut scored: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn same_list(list: &ScoredList, reference: &[(String, f64)], tol: f64) -> bool {
    list.len() == reference.len()
        && list.entries().iter().zip(reference).all(|(e, (id, s))| e.segment_id == *id && (e.score - s).abs() <= tol)
}

fn windows_by_enumeration(d: f64, w: f64, s: f64) -> usize {
    let mut n = 0;
    let mut start = 0.0;
    while start + w <= d {
        n += 1;
        start += s;
    }
    n
}

fn ref_bm25(docs: &[(String, Vec<String>)], query: &[String], k1: f64, b: f64) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let mut out = Vec::new();
    for (id, toks) in docs {
        let mut score = 0.0;
        let mut matched = false;
        for q in query {
            let tf = toks.iter().filter(|t| *t == q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let df = docs.iter().filter(|(_, t)| t.contains(q)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * toks.len() as f64 / avg));
        }
        if matched {
            out.push((id.clone(), score));
        }
    }
    out
}

fn ref_mmr(cands: &[(String, f64)], vecs: &HashMap<String, Vec<f32>>, alpha: f64, m: usize) -> Vec<String> {
    let lo = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let hi = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let rel = |s: f64| if hi > lo { (s - lo) / (hi - lo) } else { 1.0 };
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < m.min(cands.len()) {
        let mut best: Option<(usize, f64)> = None;
        for (i, (id, s)) in cands.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let max_sim = chosen
                .iter()
                .map(|&j| cosine(&vecs[id], &vecs[&cands[j].0]))
                .fold(f64::NEG_INFINITY, f64::max);
            let red = if chosen.is_empty() { 0.0 } else { max_sim };
            let v = alpha * rel(*s) - (1.0 - alpha) * red;
            let better = match best {
                None => true,
                Some((bi, bv)) => v > bv || (v == bv && *id < cands[bi].0),
            };
            if better {
                best = Some((i, v));
            }
        }
        chosen.push(best.expect("candidates remain").0);
    }
    chosen.into_iter().map(|i| cands[i].0.clone()).collect()
}

fn dcg(rels: &[bool]) -> f64 {
    rels.iter().enumerate().filter(|(_, r)| **r).map(|(i, _)| 1.0 / ((i + 2) as f64).log2()).sum()
}

/// Runs every check against `corpus` with the toy embedder.
pub fn run_selfcheck(corpus: &Corpus, cfg: &RunConfig) -> Result<SelfcheckReport> {
    let mut rep = SelfcheckReport::default();
    let k = cfg.retrieval.k;

    // Segmentation.
    let mut ok = true;
    let mut total = 0;
    for v in corpus.videos() {
        let got = segment_video(v.duration_s, cfg.segment.window, cfg.segment.stride)?;
        let full = windows_by_enumeration(v.duration_s, cfg.segment.window, cfg.segment.stride);
        ok &= got.len() >= full && got.len() <= full + 1;
        total += got.len();
    }
    rep.push("segmentation", ok, format!("{total} windows over {} videos", corpus.videos().count()));

    // Overlap graph against all pairs.
    let graph = corpus.overlap_graph();
    let segs = corpus.segments();
    let mut pairs = BTreeSet::new();
    for (i, a) in segs.iter().enumerate() {
        for b in &segs[i + 1..] {
            if a.video_id == b.video_id && a.span.iou(&b.span) > 0.0 {
                let (x, y) = if a.segment_id < b.segment_id { (a, b) } else { (b, a) };
                pairs.insert((x.segment_id.clone(), y.segment_id.clone(), a.span.iou(&b.span).to_bits()));
            }
        }
    }
    let got: BTreeSet<_> = graph
        .edge_list()
        .into_iter()
        .map(|(a, b, w)| if a < b { (a, b, w.to_bits()) } else { (b, a, w.to_bits()) })
        .collect();
    rep.push("overlap_graph", got == pairs, format!("{} edges", pairs.len()));

    // Dense search against a full sort.
    let text_vecs = toy_text_vectors(corpus, cfg)?;
    let index = FlatIndex::build(&text_vecs)?;
    let queries = toy_queries(corpus, cfg);
    let mut ok = true;
    for q in &queries {
        let got = index.search(&q.query_id, &q.vector, k)?;
        let scored = text_vecs
            .rows()
            .map(|(id, v)| {
                let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                let s: f32 = v.iter().zip(&q.vector).map(|(a, b)| (a / n) * b).sum();
                (id.to_string(), s as f64)
            })
            .collect();
        ok &= same_list(&got, &ref_rank(scored, k), 1e-5);
    }
    rep.push("dense_search", ok, format!("{} queries, k={k}", queries.len()));

    // BM25 against the direct formula.
    let bm25 = toy_bm25(corpus, cfg);
    let docs: Vec<(String, Vec<String>)> = segs.iter().map(|s| (s.segment_id.clone(), tokenize(&s.asr_text))).collect();
    let mut ok = true;
    let mut sparse_lists = Vec::new();
    for q in corpus.queries() {
        let got = bm25.search(&q.query_id, &q.text, k).list;
        let want = ref_rank(ref_bm25(&docs, &tokenize(&q.text), cfg.bm25.k1, cfg.bm25.b), k);
        ok &= same_list(&got, &want, 1e-9);
        sparse_lists.push(got);
    }
    rep.push("bm25", ok, format!("k1={} b={}", cfg.bm25.k1, cfg.bm25.b));

    // Hybrid fusion against explicit min-max normalization.
    let mut ok = true;
    for (q, sparse) in queries.iter().zip(&sparse_lists) {
        let dense = index.search(&q.query_id, &q.vector, k)?;
        let got = search_hybrid(&dense, sparse, cfg.hybrid.w, k)?;
        let norm = |l: &ScoredList| -> BTreeMap<String, f64> {
            let lo = l.entries().iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
            let hi = l.entries().iter().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
            l.entries()
                .iter()
                .map(|e| (e.segment_id.clone(), if hi > lo { (e.score - lo) / (hi - lo) } else { 1.0 }))
                .collect()
        };
        let (d, s) = (norm(&dense), norm(sparse));
        let ids: BTreeSet<&String> = d.keys().chain(s.keys()).collect();
        let scored = ids
            .into_iter()
            .map(|id| {
                let v = cfg.hybrid.w * d.get(id).copied().unwrap_or(0.0)
                    + (1.0 - cfg.hybrid.w) * s.get(id).copied().unwrap_or(0.0);
                (id.clone(), v)
            })
            .collect();
        ok &= same_list(&got, &ref_rank(scored, k), 1e-12);
    }
    rep.push("hybrid", ok, format!("w={}", cfg.hybrid.w));

    // Fused vectors: sequential and parallel fusion agree bit for bit.
    let weights = toy_weights(cfg);
    let seq = toy_store(corpus, cfg, &weights, Exec::Sequential)?;
    let par = toy_store(corpus, cfg, &weights, Exec::Parallel)?;
    let norms_ok = seq.fused.rows().all(|(_, v)| (v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt() - 1.0).abs() < 1e-5);
    rep.push(
        "fusion",
        seq.fused == par.fused && norms_ok,
        format!("{} segments, dim {}", seq.fused.len(), seq.fused.dim()),
    );

    // MMR and smoothing against greedy and direct references.
    let fused: HashMap<String, Vec<f32>> = seq.fused.rows().map(|(id, v)| (id.to_string(), v.to_vec())).collect();
    let fused_index = FlatIndex::build(&seq.fused)?;
    let mut mmr_ok = true;
    let mut smooth_ok = true;
    for q in &queries {
        let cands = fused_index.search(&q.query_id, &q.vector, cfg.rerank.top_m)?;
        let got: Vec<String> = mmr_select(&cands, &fused, cfg.mmr.alpha, k)?.ids().map(str::to_string).collect();
        let plain: Vec<(String, f64)> = cands.entries().iter().map(|e| (e.segment_id.clone(), e.score)).collect();
        mmr_ok &= got == ref_mmr(&plain, &fused, cfg.mmr.alpha, k);

        let smoothed = smooth_list(&cands, &graph, cfg.smooth.lambda);
        let by_id: HashMap<&str, &crate::corpus::SegmentRecord> = segs.iter().map(|s| (s.segment_id.as_str(), s)).collect();
        let want = plain
            .iter()
            .map(|(id, s)| {
                let me = by_id[id.as_str()];
                let (mut num, mut den) = (0.0, 0.0);
                for (other, so) in &plain {
                    let o = by_id[other.as_str()];
                    if other != id && o.video_id == me.video_id {
                        let iou = me.span.iou(&o.span);
                        if iou > 0.0 {
                            num += iou * so;
                            den += iou;
                        }
                    }
                }
                (id.clone(), s + cfg.smooth.lambda * if den > 0.0 { num / den } else { 0.0 })
            })
            .collect();
        smooth_ok &= same_list(&smoothed, &ref_rank(want, usize::MAX), 1e-12);
    }
    rep.push("mmr", mmr_ok, format!("alpha={} m={k}", cfg.mmr.alpha));
    rep.push("smoothing", smooth_ok, format!("lambda={}", cfg.smooth.lambda));

    // Full pipeline is deterministic across execution modes.
    let mut settings = PipelineSettings::from_config(cfg);
    let a = Pipeline::toy(corpus, cfg, settings.clone())?.run_all()?;
    settings.exec = Exec::Parallel;
    let b = Pipeline::toy(corpus, cfg, settings)?.run_all()?;
    let first = a.first().map(|l| l.ids().collect::<Vec<_>>().join(",")).unwrap_or_default();
    rep.push("pipeline", a == b, format!("first list [{first}]"));

    // Rank metrics: a qrels-perfect run and a direct computation.
    let qrels = Qrels::derive(corpus);
    let perfect: Vec<ScoredList> = qrels
        .entries
        .iter()
        .map(|(q, e)| {
            let n = e.relevant.len();
            ScoredList::from_unsorted(
                q.clone(),
                e.relevant.iter().enumerate().map(|(i, id)| ScoredEntry::new(id.clone(), (n - i) as f64)).collect(),
            )
        })
        .collect();
    let perfect_report = rank_metrics(&perfect, &qrels, &[1, 5, 10], 10);
    let mut ok = (perfect_report.mean.ndcg - 1.0).abs() < 1e-12 && (perfect_report.mean.reciprocal_rank - 1.0).abs() < 1e-12;
    let report = rank_metrics(&a, &qrels, &[1, 5, 10], 10);
    for (qid, m) in &report.per_query {
        let rel = &qrels.entries[qid].relevant;
        let ranked: Vec<bool> = a
            .iter()
            .find(|l| &l.query_id == qid)
            .map(|l| l.ids().map(|id| rel.contains(id)).collect())
            .unwrap_or_default();
        let top: Vec<bool> = ranked.iter().take(10).copied().collect();
        let ideal = vec![true; rel.len().min(10)];
        let ndcg = dcg(&top) / dcg(&ideal);
        let rr = ranked.iter().position(|r| *r).map_or(0.0, |p| 1.0 / (p + 1) as f64);
        ok &= (m.ndcg - ndcg).abs() < 1e-12 && (m.reciprocal_rank - rr).abs() < 1e-12;
    }
    rep.push(
        "rank_metrics",
        ok,
        format!("{} queries, toy nDCG@10={:.6} MRR={:.6}", report.per_query.len(), report.mean.ndcg, report.mean.reciprocal_rank),
    );

    // Temporal recall against a direct count.
    let spans = span_lookup(corpus);
    let gold: BTreeMap<String, Vec<crate::corpus::GoldSpan>> =
        corpus.queries().iter().map(|q| (q.query_id.clone(), q.gold_spans.clone())).collect();
    let got = temporal_recall(&a, &spans, &gold, 1, 0.5);
    let with_gold: Vec<&String> = gold.iter().filter(|(_, g)| !g.is_empty()).map(|(q, _)| q).collect();
    let hits = with_gold
        .iter()
        .filter(|q| {
            a.iter().find(|l| &&l.query_id == *q).and_then(|l| l.entries().first()).is_some_and(|e| {
                let s = corpus.segment(&e.segment_id).expect("run ids come from the corpus");
                gold[**q].iter().any(|g| g.video_id == s.video_id && g.span.iou(&s.span) >= 0.5)
            })
        })
        .count();
    let want = if with_gold.is_empty() { 0.0 } else { hits as f64 / with_gold.len() as f64 };
    rep.push("temporal_recall", got == want, format!("R@1(IoU>=0.5)={got:.6}"));

    // Answer metrics on reference answers against themselves and a prefix.
    let mut ok = true;
    for q in corpus.queries() {
        let Some(r) = &q.reference_answer else { continue };
        if normalize_answer(r).is_empty() {
            continue;
        }
        let same = answer_metrics(r, r)?;
        ok &= same.exact_match == 1.0 && same.f1 == 1.0;
        // A prefix has precision 1 and recall |prefix| / |reference|.
        let norm = normalize_answer(r);
        let toks: Vec<&str> = norm.split_whitespace().collect();
        let half = toks[..toks.len().div_ceil(2)].join(" ");
        let m = answer_metrics(&half, r)?;
        let recall = toks.len().div_ceil(2) as f64 / toks.len() as f64;
        ok &= (m.f1 - 2.0 * recall / (1.0 + recall)).abs() < 1e-12;
    }
    rep.push("answer_metrics", ok, "self and prefix answers");

    // Cohen's kappa on top-1 agreement between the toy run and dense search.
    let labels_a: Vec<bool> = a.iter().map(|l| l.entries().first().is_some_and(|e| qrels.get(&l.query_id).is_some_and(|q| q.relevant.contains(&e.segment_id)))).collect();
    let labels_b: Vec<bool> = queries
        .iter()
        .map(|q| {
            index
                .search(&q.query_id, &q.vector, 1)
                .ok()
                .and_then(|l| l.entries().first().cloned())
                .is_some_and(|e| qrels.get(&q.query_id).is_some_and(|r| r.relevant.contains(&e.segment_id)))
        })
        .collect();
    let kappa_ok = if labels_a.is_empty() {
        true
    } else {
        let n = labels_a.len() as f64;
        let po = labels_a.iter().zip(&labels_b).filter(|(x, y)| x == y).count() as f64 / n;
        let pa = labels_a.iter().filter(|x| **x).count() as f64 / n;
        let pb = labels_b.iter().filter(|x| **x).count() as f64 / n;
        let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
        let want = if pe == 1.0 { 1.0 } else { (po - pe) / (1.0 - pe) };
        (cohen_kappa(&labels_a, &labels_b)? - want).abs() < 1e-12
    };
    rep.push("cohen_kappa", kappa_ok, format!("{} paired labels", labels_a.len()));

    // Bootstrap is identical across execution modes.
    let scores: BTreeMap<String, f64> = report.per_query.iter().map(|(q, m)| (q.clone(), m.ndcg)).collect();
    let course_of: HashMap<String, String> =
        corpus.queries().iter().map(|q| (q.query_id.clone(), q.course_id.clone())).collect();
    if scores.is_empty() {
        rep.push("bootstrap", true, "no evaluated queries");
    } else {
        let bc = BootstrapConfig { replicates: 2000, level: cfg.bootstrap.level, seed: cfg.seed };
        let s = bootstrap_ci(&scores, &course_of, &bc, Exec::Sequential)?;
        let p = bootstrap_ci(&scores, &course_of, &bc, Exec::Parallel)?;
        rep.push(
            "bootstrap",
            s == p && s.lo <= s.mean && s.mean <= s.hi,
            format!("nDCG@10 {:.6} [{:.6}, {:.6}]", s.mean, s.lo, s.hi),
        );
    }
    Ok(rep)
}
