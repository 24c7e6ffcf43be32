//! Maximal marginal relevance selection.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::retrieval::{ScoredEntry, ScoredList};

/// One MMR pick with the quantities that decided it.
#[derive(Debug, Clone, PartialEq)]
pub struct MmrPick {
    pub segment_id: String,
    /// Min-max normalized relevance.
    pub relevance: f64,
    pub mmr_score: f64,
}

/// Cosine similarity in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Greedy MMR over precomputed relevance and pairwise similarity.
///
/// Step `t` picks `argmax alpha*rel(c) - (1-alpha)*max_{s in S} sim(c, s)`
/// over unpicked `c`, with the penalty taken as 0 while `S` is empty. Ties go
/// to the smaller id. Returns indices in pick order.
pub fn mmr_trace(ids: &[&str], relevance: &[f64], sim: &[Vec<f64>], alpha: f64, m: usize) -> Vec<(usize, f64)> {
    let n = ids.len();
    let mut picked = vec![false; n];
    let mut max_sim = vec![f64::NEG_INFINITY; n];
    let mut out = Vec::with_capacity(m.min(n));
    for step in 0..m.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..n).filter(|&c| !picked[c]) {
            let penalty = if step == 0 { 0.0 } else { max_sim[c] };
            let score = alpha * relevance[c] - (1.0 - alpha) * penalty;
            let better = match best {
                None => true,
                Some((b, bs)) => score > bs || (score == bs && ids[c] < ids[b]),
            };
            if better {
                best = Some((c, score));
            }
        }
        let (c, score) = best.expect("at least one candidate remains");
        picked[c] = true;
        out.push((c, score));
        for (o, ms) in max_sim.iter_mut().enumerate() {
            if !picked[o] {
                *ms = ms.max(sim[o][c]);
            }
        }
    }
    out
}

fn normalized_relevance(list: &ScoredList) -> Vec<f64> {
    let scores: Vec<f64> = list.entries().iter().map(|e| e.score).collect();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores.iter().map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 1.0 }).collect()
}

/// Diversifies `candidates` using cosine similarity between their segment
/// vectors. `m` larger than the list returns every candidate reordered.
pub fn mmr_select_detailed(
    candidates: &ScoredList,
    vectors: &HashMap<String, Vec<f32>>,
    alpha: f64,
    m: usize,
) -> Result<Vec<MmrPick>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("mmr alpha {alpha} outside [0, 1]")));
    }
    let ids: Vec<&str> = candidates.ids().collect();
    let vecs = ids
        .iter()
        .map(|id| vectors.get(*id).map(Vec::as_slice).ok_or_else(|| id.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|id| Error::Integrity { kind: "segment vector", ids: vec![id] })?;
    let n = ids.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = cosine(vecs[i], vecs[j]);
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    let rel = normalized_relevance(candidates);
    Ok(mmr_trace(&ids, &rel, &sim, alpha, m)
        .into_iter()
        .map(|(i, s)| MmrPick { segment_id: ids[i].to_string(), relevance: rel[i], mmr_score: s })
        .collect())
}

/// MMR selection as a ranked list. Stored scores are `(n - rank) / n`, so
/// score order agrees with pick order.
pub fn mmr_select(candidates: &ScoredList, vectors: &HashMap<String, Vec<f32>>, alpha: f64, m: usize) -> Result<ScoredList> {
    let picks = mmr_select_detailed(candidates, vectors, alpha, m)?;
    let n = picks.len() as f64;
    let entries = picks
        .into_iter()
        .enumerate()
        .map(|(r, p)| ScoredEntry::new(p.segment_id, (n - r as f64) / n))
        .collect();
    ScoredList::from_ranked(candidates.query_id.clone(), entries)
}
