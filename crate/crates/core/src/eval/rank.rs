//! Recall@k, reciprocal rank and binary-gain nDCG.

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::qrels::Qrels;
use crate::retrieval::ScoredList;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryRankMetrics {
    /// `(k, recall@k)` in the order of the requested cutoffs.
    pub recall: Vec<(usize, f64)>,
    pub reciprocal_rank: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankReport {
    pub ndcg_k: usize,
    pub per_query: BTreeMap<String, QueryRankMetrics>,
    /// Micro-average over evaluated queries.
    pub mean: QueryRankMetrics,
    /// Queries skipped because they had no relevant segments or no qrels entry.
    pub excluded: Vec<String>,
}

impl RankReport {
    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.mean.recall.iter().find(|(c, _)| *c == k).map(|(_, v)| *v)
    }
}

pub fn recall_at(ranked: &[&str], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let hits = ranked.iter().take(k).filter(|id| relevant.contains(**id)).count();
    hits as f64 / relevant.len() as f64
}

pub fn reciprocal_rank(ranked: &[&str], relevant: &BTreeSet<String>) -> f64 {
    ranked
        .iter()
        .position(|id| relevant.contains(*id))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Binary-gain nDCG@k with a `log2(rank + 1)` discount.
pub fn ndcg_at(ranked: &[&str], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| relevant.contains(**id))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..relevant.len().min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    if ideal == 0.0 {
        0.0
    } else {
        dcg / ideal
    }
}

/// Scores every qrels query with a non-empty relevant set; queries missing
/// from the run count as empty rankings.
pub fn rank_metrics(runs: &[ScoredList], qrels: &Qrels, ks: &[usize], ndcg_k: usize) -> RankReport {
    let by_query: BTreeMap<&str, Vec<&str>> = runs.iter().map(|l| (l.query_id.as_str(), l.ids().collect())).collect();
    let mut excluded: Vec<String> = runs
        .iter()
        .filter(|l| qrels.get(&l.query_id).is_none())
        .map(|l| l.query_id.clone())
        .collect();
    let mut per_query = BTreeMap::new();
    for (qid, entry) in &qrels.entries {
        if entry.relevant.is_empty() {
            excluded.push(qid.clone());
            continue;
        }
        let ranked = by_query.get(qid.as_str()).cloned().unwrap_or_default();
        per_query.insert(
            qid.clone(),
            QueryRankMetrics {
                recall: ks.iter().map(|&k| (k, recall_at(&ranked, &entry.relevant, k))).collect(),
                reciprocal_rank: reciprocal_rank(&ranked, &entry.relevant),
                ndcg: ndcg_at(&ranked, &entry.relevant, ndcg_k),
            },
        );
    }
    excluded.sort();
    excluded.dedup();
    let n = per_query.len().max(1) as f64;
    let mean = QueryRankMetrics {
        recall: ks
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, per_query.values().map(|m: &QueryRankMetrics| m.recall[i].1).sum::<f64>() / n))
            .collect(),
        reciprocal_rank: per_query.values().map(|m| m.reciprocal_rank).sum::<f64>() / n,
        ndcg: per_query.values().map(|m| m.ndcg).sum::<f64>() / n,
    };
    RankReport { ndcg_k, per_query, mean, excluded }
}
