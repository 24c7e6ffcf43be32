use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::retrieval::scored::{ScoredEntry, ScoredList};
use crate::tensor::Matrix;
use crate::numerics::l2_normalize;

fn min_max(list: &ScoredList) -> BTreeMap<&str, f64> {
    let (lo, hi) = list
        .entries()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.score), hi.max(e.score)));
    list.entries()
        .iter()
        .map(|e| {
            let v = if hi > lo { (e.score - lo) / (hi - lo) } else { 1.0 };
            (e.segment_id.as_str(), v)
        })
        .collect()
}

/// Convex combination of per-list min-max normalized scores. An id missing
/// from one list scores 0 there; a constant list normalizes to 1.
pub fn search_hybrid(dense: &ScoredList, sparse: &ScoredList, w: f64, k: usize) -> Result<ScoredList> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidConfig(format!("hybrid weight {w} outside [0, 1]")));
    }
    let d = min_max(dense);
    let s = min_max(sparse);
    let mut ids: Vec<&str> = d.keys().chain(s.keys()).copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let entries = ids
        .into_iter()
        .map(|id| {
            let score = w * d.get(id).copied().unwrap_or(0.0) + (1.0 - w) * s.get(id).copied().unwrap_or(0.0);
            ScoredEntry::new(id, score)
        })
        .collect();
    let mut out = ScoredList::from_unsorted(dense.query_id.clone(), entries);
    out.truncate(k);
    Ok(out)
}

/// Mean of the frame embeddings, L2-normalized.
pub fn pool_frames(frames: &Matrix) -> Result<Vec<f32>> {
    if frames.rows() == 0 {
        return Err(Error::Degenerate("no frames to pool".into()));
    }
    let mean = frames.mean_row();
    let scale = frames.iter_rows().map(crate::tensor::norm).fold(0.0f32, f32::max);
    if crate::tensor::norm(&mean) <= scale * f32::EPSILON {
        return Err(Error::Degenerate("frame mean is zero".into()));
    }
    l2_normalize(&mean)
}
