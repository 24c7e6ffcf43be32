use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub segment_id: String,
    pub score: f64,
}

impl ScoredEntry {
    pub fn new(segment_id: impl Into<String>, score: f64) -> Self {
        ScoredEntry { segment_id: segment_id.into(), score }
    }
}

/// Score descending, then segment id ascending.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// A ranked result list for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub query_id: String,
    entries: Vec<ScoredEntry>,
}

impl ScoredList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        ScoredList { query_id: query_id.into(), entries: Vec::new() }
    }

    /// Sorts by (score desc, id asc). Duplicate ids keep their best score.
    pub fn from_unsorted(query_id: impl Into<String>, mut entries: Vec<ScoredEntry>) -> Self {
        entries.sort_by(|a, b| rank_order(a.score, &a.segment_id, b.score, &b.segment_id));
        let mut seen = HashSet::new();
        entries.retain(|e| seen.insert(e.segment_id.clone()));
        ScoredList { query_id: query_id.into(), entries }
    }

    /// Keeps the given order. Used for outputs whose rank is not a sort of
    /// the stored score, such as MMR selections.
    pub fn from_ranked(query_id: impl Into<String>, entries: Vec<ScoredEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.segment_id.as_str()) {
                return Err(Error::DuplicateKey(e.segment_id.clone()));
            }
        }
        Ok(ScoredList { query_id: query_id.into(), entries })
    }

    pub fn entries(&self) -> &[ScoredEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.segment_id.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn top(&self, k: usize) -> &[ScoredEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn is_sorted(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].segment_id, w[1].score, &w[1].segment_id) == Ordering::Less)
    }
}

/// Writes TREC run lines: `query_id Q0 segment_id rank score tag`.
pub fn write_run<W: Write>(mut w: W, lists: &[ScoredList], tag: &str) -> Result<()> {
    for list in lists {
        for (rank, e) in list.entries.iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {:.6} {}", list.query_id, e.segment_id, rank + 1, e.score, tag)?;
        }
    }
    Ok(())
}

/// Parses a TREC run. Lists come back ordered by query id, entries by rank.
pub fn read_run<R: BufRead>(r: R, source_name: &str) -> Result<Vec<ScoredList>> {
    let mut by_query: BTreeMap<String, Vec<(usize, ScoredEntry)>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { source_name: source_name.to_string(), line: i + 1, message: msg.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields: query_id Q0 segment_id rank score tag"));
        }
        let rank: usize = f[3].parse().map_err(|_| bad("bad rank"))?;
        let score: f64 = f[4].parse().map_err(|_| bad("bad score"))?;
        by_query.entry(f[0].to_string()).or_default().push((rank, ScoredEntry::new(f[2], score)));
    }
    by_query
        .into_iter()
        .map(|(q, mut es)| {
            es.sort_by_key(|(r, _)| *r);
            ScoredList::from_ranked(q, es.into_iter().map(|(_, e)| e).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_id() {
        let l = ScoredList::from_unsorted(
            "q",
            vec![ScoredEntry::new("b", 1.0), ScoredEntry::new("a", 1.0), ScoredEntry::new("c", 2.0)],
        );
        assert_eq!(l.ids().collect::<Vec<_>>(), vec!["c", "a", "b"]);
        assert!(l.is_sorted());
    }

    #[test]
    fn duplicates_keep_best() {
        let l = ScoredList::from_unsorted("q", vec![ScoredEntry::new("a", 0.1), ScoredEntry::new("a", 0.9)]);
        assert_eq!(l.entries(), &[ScoredEntry::new("a", 0.9)]);
        assert!(ScoredList::from_ranked("q", vec![ScoredEntry::new("a", 1.0), ScoredEntry::new("a", 0.0)]).is_err());
    }

    #[test]
    fn run_round_trip() {
        let lists = vec![
            ScoredList::from_unsorted("q1", vec![ScoredEntry::new("s1", 0.5), ScoredEntry::new("s2", 0.25)]),
            ScoredList::from_unsorted("q2", vec![ScoredEntry::new("s3", -1.0)]),
        ];
        let mut buf = Vec::new();
        write_run(&mut buf, &lists, "tag").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "q1 Q0 s1 1 0.500000 tag");
        assert_eq!(read_run(buf.as_slice(), "run").unwrap(), lists);
    }

    #[test]
    fn malformed_run_line() {
        let err = read_run("q Q0 s 1 0.5 t\nq Q0 s2 x 0.1 t\n".as_bytes(), "r").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
