use std::collections::BTreeMap;

use crate::corpus::GoldSpan;
use crate::eval::qrels::SpanLookup;
use crate::retrieval::ScoredList;

/// Best IoU between a segment and any same-video gold span.
pub fn best_iou(video: &str, span: &crate::corpus::Span, gold: &[GoldSpan]) -> f64 {
    gold.iter()
        .filter(|g| g.video_id == video)
        .map(|g| span.iou(&g.span))
        .fold(0.0, f64::max)
}

/// Per-query hit: some top-`k` segment reaches `threshold` best-IoU.
pub fn temporal_hits(
    runs: &[ScoredList],
    spans: &SpanLookup,
    gold: &BTreeMap<String, Vec<GoldSpan>>,
    k: usize,
    threshold: f64,
) -> BTreeMap<String, bool> {
    let by_query: BTreeMap<&str, &ScoredList> = runs.iter().map(|l| (l.query_id.as_str(), l)).collect();
    gold.iter()
        .filter(|(_, g)| !g.is_empty())
        .map(|(qid, g)| {
            let hit = by_query.get(qid.as_str()).is_some_and(|l| {
                l.top(k).iter().any(|e| {
                    spans
                        .get(&e.segment_id)
                        .is_some_and(|(video, sp)| best_iou(video, sp, g) >= threshold)
                })
            });
            (qid.clone(), hit)
        })
        .collect()
}

/// Fraction of queries with gold spans that are hits at `(k, threshold)`.
pub fn temporal_recall(
    runs: &[ScoredList],
    spans: &SpanLookup,
    gold: &BTreeMap<String, Vec<GoldSpan>>,
    k: usize,
    threshold: f64,
) -> f64 {
    let hits = temporal_hits(runs, spans, gold, k, threshold);
    if hits.is_empty() {
        return 0.0;
    }
    hits.values().filter(|h| **h).count() as f64 / hits.len() as f64
}
