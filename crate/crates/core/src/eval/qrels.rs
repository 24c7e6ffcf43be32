use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, write_jsonl, Corpus, GoldSpan, Span};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QrelEntry {
    pub relevant: BTreeSet<String>,
    pub gold_spans: Vec<GoldSpan>,
}

/// Per-query relevance judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    pub entries: BTreeMap<String, QrelEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QrelLine {
    query_id: String,
    relevant_segment_ids: Vec<String>,
}

/// Segment id to `(video_id, span)`, the lookup temporal metrics need.
pub type SpanLookup = HashMap<String, (String, Span)>;

pub fn span_lookup(corpus: &Corpus) -> SpanLookup {
    corpus
        .segments()
        .iter()
        .map(|s| (s.segment_id.clone(), (s.video_id.clone(), s.span)))
        .collect()
}

impl Qrels {
    /// A segment is relevant iff it overlaps (IoU > 0) any gold span of
    /// the query in the same video.
    pub fn derive(corpus: &Corpus) -> Self {
        let mut by_video: HashMap<&str, Vec<(&str, Span)>> = HashMap::new();
        for s in corpus.segments() {
            by_video.entry(s.video_id.as_str()).or_default().push((s.segment_id.as_str(), s.span));
        }
        let entries = corpus
            .queries()
            .iter()
            .map(|q| {
                let relevant = q
                    .gold_spans
                    .iter()
                    .flat_map(|g| {
                        by_video
                            .get(g.video_id.as_str())
                            .into_iter()
                            .flatten()
                            .filter(move |(_, sp)| sp.iou(&g.span) > 0.0)
                            .map(|(id, _)| id.to_string())
                    })
                    .collect();
                (q.query_id.clone(), QrelEntry { relevant, gold_spans: q.gold_spans.clone() })
            })
            .collect();
        Qrels { entries }
    }

    pub fn get(&self, query_id: &str) -> Option<&QrelEntry> {
        self.entries.get(query_id)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_jsonl(
            w,
            self.entries.iter().map(|(q, e)| QrelLine {
                query_id: q.clone(),
                relevant_segment_ids: e.relevant.iter().cloned().collect(),
            }),
        )
    }

    /// Reads `qrels.jsonl`. Gold spans are not part of the file.
    pub fn read_from<R: Read>(r: R, source_name: &str) -> Result<Self> {
        let lines: Vec<QrelLine> = read_jsonl(r, source_name)?;
        let entries = lines
            .into_iter()
            .map(|l| {
                let entry = QrelEntry { relevant: l.relevant_segment_ids.into_iter().collect(), gold_spans: Vec::new() };
                (l.query_id, entry)
            })
            .collect();
        Ok(Qrels { entries })
    }
}
