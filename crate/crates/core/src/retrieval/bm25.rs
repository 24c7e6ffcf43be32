//! Okapi BM25 over ASR transcripts.

use std::collections::{BTreeMap, HashMap};

use crate::retrieval::scored::{ScoredEntry, ScoredList};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryStatus {
    Ok,
    /// Nothing survived tokenization; the result list is empty.
    EmptyQuery,
}

#[derive(Debug, Clone)]
pub struct Bm25Hits {
    pub list: ScoredList,
    pub status: QueryStatus,
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    avg_len: f64,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    pub fn build<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>, params: Bm25Params) -> Self {
        let mut doc_ids = Vec::new();
        let mut doc_len = Vec::new();
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (doc, (id, text)) in docs.into_iter().enumerate() {
            let toks = tokenize(text);
            doc_len.push(toks.len() as u32);
            doc_ids.push(id.to_string());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((doc as u32, n));
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = if doc_ids.is_empty() { 0.0 } else { total as f64 / doc_ids.len() as f64 };
        Bm25Index { params, doc_ids, doc_len, avg_len, postings }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every document containing at least one query term. Repeated
    /// query terms count once per occurrence.
    pub fn search(&self, query_id: &str, text: &str, k: usize) -> Bm25Hits {
        let terms = tokenize(text);
        if terms.is_empty() {
            return Bm25Hits { list: ScoredList::empty(query_id), status: QueryStatus::EmptyQuery };
        }
        let mut qtf: BTreeMap<String, u32> = BTreeMap::new();
        for t in terms {
            *qtf.entry(t).or_default() += 1;
        }
        let Bm25Params { k1, b } = self.params;
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (term, count) in &qtf {
            let Some(plist) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for &(doc, tf) in plist {
                let tf = tf as f64;
                let norm = 1.0 - b + b * self.doc_len[doc as usize] as f64 / self.avg_len;
                *acc.entry(doc).or_default() += *count as f64 * idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        let entries = acc
            .into_iter()
            .map(|(d, s)| ScoredEntry::new(self.doc_ids[d as usize].clone(), s))
            .collect();
        let mut list = ScoredList::from_unsorted(query_id, entries);
        list.truncate(k);
        Bm25Hits { list, status: QueryStatus::Ok }
    }
}
