use std::collections::BTreeMap;

use crate::corpus::OverlapGraph;
use crate::retrieval::{ScoredEntry, ScoredList};

/// Boosts each score by its overlapping neighbours:
/// `s'_i = s_i + lambda * sum_j w_ij * s_j`, `w_ij = iou_ij / sum_j' iou_ij'`.
///
/// Neighbours without a score are ignored and excluded from the
/// normalizer; segments absent from the graph pass through unchanged.
pub fn temporal_smooth(scores: &BTreeMap<String, f64>, graph: &OverlapGraph, lambda: f64) -> BTreeMap<String, f64> {
    scores
        .iter()
        .map(|(id, &s)| {
            let Some(node) = graph.node(id) else {
                return (id.clone(), s);
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for &(j, iou) in graph.neighbors(node) {
                if let Some(&sj) = scores.get(&graph.ids()[j]) {
                    num += iou * sj;
                    den += iou;
                }
            }
            let boost = if den > 0.0 { num / den } else { 0.0 };
            (id.clone(), s + lambda * boost)
        })
        .collect()
}

/// Smooths a ranked list and re-sorts it.
pub fn smooth_list(list: &ScoredList, graph: &OverlapGraph, lambda: f64) -> ScoredList {
    let scores = list.entries().iter().map(|e| (e.segment_id.clone(), e.score)).collect();
    let smoothed = temporal_smooth(&scores, graph, lambda);
    ScoredList::from_unsorted(
        list.query_id.clone(),
        smoothed.into_iter().map(|(id, s)| ScoredEntry::new(id, s)).collect(),
    )
}
