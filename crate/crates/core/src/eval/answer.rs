use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnswerScores {
    pub exact_match: f64,
    pub f1: f64,
}

/// Lowercase, drop punctuation and the articles a/an/the, collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered: String = s
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    lowered
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exact match and token-multiset F1 after normalization. A reference
/// that normalizes to nothing only matches an equally empty prediction.
pub fn answer_metrics(predicted: &str, reference: &str) -> Result<AnswerScores> {
    if reference.trim().is_empty() {
        return Err(Error::InvalidInput("empty reference answer".into()));
    }
    let p = normalize_answer(predicted);
    let r = normalize_answer(reference);
    let exact_match = if p == r { 1.0 } else { 0.0 };
    let pt: Vec<&str> = p.split_whitespace().collect();
    let rt: Vec<&str> = r.split_whitespace().collect();
    if pt.is_empty() || rt.is_empty() {
        return Ok(AnswerScores { exact_match, f1: exact_match });
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &rt {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pt {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return Ok(AnswerScores { exact_match, f1: 0.0 });
    }
    let precision = common as f64 / pt.len() as f64;
    let recall = common as f64 / rt.len() as f64;
    Ok(AnswerScores { exact_match, f1: 2.0 * precision * recall / (precision + recall) })
}
