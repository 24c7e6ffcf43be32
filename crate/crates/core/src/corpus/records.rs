use serde::{Deserialize, Serialize};

use crate::corpus::span::Span;
use crate::error::{Error, Result};

/// One timestamped window of a lecture video.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub segment_id: String,
    pub video_id: String,
    pub course_id: String,
    pub span: Span,
    pub asr_text: String,
    pub wer: f64,
    /// Row id in the vector files; defaults to `segment_id`.
    pub vector_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GoldSpan {
    pub video_id: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: String,
    pub course_id: String,
    pub text: String,
    pub wer: f64,
    pub gold_spans: Vec<GoldSpan>,
    pub reference_answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub course_id: String,
    pub duration_s: f64,
}

// JSON line shapes. Times are seconds on disk.

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SegmentLine {
    pub segment_id: String,
    pub video_id: String,
    pub course_id: String,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub asr_text: String,
    #[serde(default)]
    pub wer: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct GoldSpanLine {
    pub video_id: String,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct QueryLine {
    pub query_id: String,
    pub course_id: String,
    pub text: String,
    #[serde(default)]
    pub wer: f64,
    #[serde(default)]
    pub gold_spans: Vec<GoldSpanLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
}

fn check_wer(wer: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&wer) {
        Ok(wer)
    } else {
        Err(Error::InvalidInput(format!("wer {wer} outside [0, 1]")))
    }
}

impl TryFrom<SegmentLine> for SegmentRecord {
    type Error = Error;

    fn try_from(l: SegmentLine) -> Result<Self> {
        let span = Span::from_secs(l.t_start, l.t_end)?;
        Ok(SegmentRecord {
            vector_id: l.vector_id.unwrap_or_else(|| l.segment_id.clone()),
            segment_id: l.segment_id,
            video_id: l.video_id,
            course_id: l.course_id,
            span,
            asr_text: l.asr_text,
            wer: check_wer(l.wer)?,
        })
    }
}

impl From<&SegmentRecord> for SegmentLine {
    fn from(s: &SegmentRecord) -> Self {
        SegmentLine {
            segment_id: s.segment_id.clone(),
            video_id: s.video_id.clone(),
            course_id: s.course_id.clone(),
            t_start: s.span.start_secs(),
            t_end: s.span.end_secs(),
            asr_text: s.asr_text.clone(),
            wer: s.wer,
            vector_id: (s.vector_id != s.segment_id).then(|| s.vector_id.clone()),
        }
    }
}

impl TryFrom<QueryLine> for QueryRecord {
    type Error = Error;

    fn try_from(l: QueryLine) -> Result<Self> {
        let mut gold_spans = l
            .gold_spans
            .into_iter()
            .map(|g| Ok(GoldSpan { span: Span::from_secs(g.t_start, g.t_end)?, video_id: g.video_id }))
            .collect::<Result<Vec<_>>>()?;
        // dedupe, keeping first-seen order
        let mut seen = std::collections::HashSet::new();
        gold_spans.retain(|g| seen.insert(g.clone()));
        Ok(QueryRecord {
            query_id: l.query_id,
            course_id: l.course_id,
            text: l.text,
            wer: check_wer(l.wer)?,
            gold_spans,
            reference_answer: l.reference_answer,
        })
    }
}

impl From<&QueryRecord> for QueryLine {
    fn from(q: &QueryRecord) -> Self {
        QueryLine {
            query_id: q.query_id.clone(),
            course_id: q.course_id.clone(),
            text: q.text.clone(),
            wer: q.wer,
            gold_spans: q
                .gold_spans
                .iter()
                .map(|g| GoldSpanLine {
                    video_id: g.video_id.clone(),
                    t_start: g.span.start_secs(),
                    t_end: g.span.end_secs(),
                })
                .collect(),
            reference_answer: q.reference_answer.clone(),
        }
    }
}
