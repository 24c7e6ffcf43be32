//! Deterministic faithfulness scoring.
//!
//! Answers are split into propositions at sentence ends, semicolons and
//! comma-led coordinating conjunctions. Each proposition is aligned against
//! every evidence span with a sliding window over character 4-grams; the
//! confidence is the best window's multiset F1.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const SUPPORT_THRESHOLD: f64 = 0.5;
const GRAM: usize = 4;
const CONJUNCTIONS: [&str; 6] = ["and", "but", "or", "nor", "yet", "so"];

#[derive(Debug, Clone, PartialEq)]
pub struct PropositionScore {
    pub text: String,
    pub confidence: f64,
    pub supported: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaithfulnessResult {
    /// Fraction of supported propositions.
    pub score: f64,
    pub propositions: Vec<PropositionScore>,
}

fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        let ends = matches!(c, '.' | '!' | '?' | ';') && chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if ends {
            out.push(std::mem::take(&mut cur));
        }
    }
    out.push(cur);
    out
}

fn split_conjunctions(sentence: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut rest = sentence;
    'outer: loop {
        let mut search_from = 0;
        while let Some(pos) = rest[search_from..].find(',') {
            let comma = search_from + pos;
            let after = rest[comma + 1..].trim_start();
            for conj in CONJUNCTIONS {
                let matches_word = after.len() > conj.len()
                    && after[..conj.len()].eq_ignore_ascii_case(conj)
                    && after[conj.len()..].starts_with(char::is_whitespace);
                if matches_word {
                    parts.push(rest[..comma].to_string());
                    rest = &after[conj.len()..];
                    continue 'outer;
                }
            }
            search_from = comma + 1;
        }
        parts.push(rest.to_string());
        return parts;
    }
}

/// Deterministic proposition splitter.
pub fn split_propositions(answer: &str) -> Vec<String> {
    split_sentences(answer)
        .iter()
        .flat_map(|s| split_conjunctions(s))
        .map(|p| p.trim().trim_end_matches(['.', '!', '?', ';', ',']).trim().to_string())
        .filter(|p| p.chars().any(char::is_alphanumeric))
        .collect()
}

/// Lowercased text with non-alphanumerics collapsed to single spaces.
pub fn normalize_for_grams(s: &str) -> Vec<char> {
    let mut out = Vec::new();
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if out.last().is_some_and(|l| *l != ' ') {
            out.push(' ');
        }
    }
    if out.last() == Some(&' ') {
        out.pop();
    }
    out
}

/// Character 4-grams; strings shorter than four characters form one gram.
pub fn char_grams(s: &str) -> Vec<String> {
    let c = normalize_for_grams(s);
    if c.is_empty() {
        Vec::new()
    } else if c.len() < GRAM {
        vec![c.iter().collect()]
    } else {
        c.windows(GRAM).map(|w| w.iter().collect()).collect()
    }
}

/// Best multiset F1 between the proposition's grams and any window of the
/// evidence's grams with the same length (or the whole evidence if shorter).
pub fn alignment_score(proposition: &str, evidence: &str) -> f64 {
    let p = char_grams(proposition);
    let e = char_grams(evidence);
    if p.is_empty() || e.is_empty() {
        return 0.0;
    }
    // intern grams so the window bookkeeping works on integer ids
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut interned = [Vec::with_capacity(p.len()), Vec::with_capacity(e.len())];
    for (grams, out) in [&p, &e].into_iter().zip(&mut interned) {
        for g in grams {
            let next = ids.len();
            out.push(*ids.entry(g.as_str()).or_insert(next));
        }
    }
    let [p, e] = interned;
    let mut want = vec![0i64; ids.len()];
    for &g in &p {
        want[g] += 1;
    }
    let win = p.len().min(e.len());
    let mut have = vec![0i64; want.len()];
    let mut overlap = 0i64;
    for &g in &e[..win] {
        if have[g] < want[g] {
            overlap += 1;
        }
        have[g] += 1;
    }
    let f1 = |o: i64| 2.0 * o as f64 / (p.len() + win) as f64;
    let mut best = f1(overlap);
    for i in win..e.len() {
        let out = e[i - win];
        have[out] -= 1;
        if have[out] < want[out] {
            overlap -= 1;
        }
        let g = e[i];
        if have[g] < want[g] {
            overlap += 1;
        }
        have[g] += 1;
        best = best.max(f1(overlap));
    }
    best
}

pub fn faithfulness_score(answer: &str, evidence: &[&str]) -> Result<FaithfulnessResult> {
    let props = split_propositions(answer);
    if props.is_empty() {
        return Err(Error::InvalidInput("answer has no propositions".into()));
    }
    let propositions: Vec<PropositionScore> = props
        .into_iter()
        .map(|text| {
            let confidence = evidence.iter().map(|e| alignment_score(&text, e)).fold(0.0, f64::max);
            PropositionScore { supported: confidence >= SUPPORT_THRESHOLD, confidence, text }
        })
        .collect();
    let supported = propositions.iter().filter(|p| p.supported).count();
    Ok(FaithfulnessResult { score: supported as f64 / propositions.len() as f64, propositions })
}
