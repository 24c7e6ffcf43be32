use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::corpus::records::{QueryLine, QueryRecord, SegmentLine, SegmentRecord, VideoRecord};
use crate::corpus::segment::segment_video;
use crate::corpus::graph::OverlapGraph;
use crate::error::{Error, Result};

/// Parses a JSON-lines stream. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(reader: R, source_name: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(File::open(path)?, &path.display().to_string())
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn convert<L, T>(lines: Vec<L>, source_name: &str) -> Result<Vec<T>>
where
    T: TryFrom<L, Error = Error>,
{
    // line numbers here are record ordinals, which equal file lines absent blank lines
    lines
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            T::try_from(l).map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_segments<R: Read>(reader: R, source_name: &str) -> Result<Vec<SegmentRecord>> {
    convert(read_jsonl::<SegmentLine, _>(reader, source_name)?, source_name)
}

pub fn parse_queries<R: Read>(reader: R, source_name: &str) -> Result<Vec<QueryRecord>> {
    convert(read_jsonl::<QueryLine, _>(reader, source_name)?, source_name)
}

pub fn write_segments<W: Write>(w: W, segments: &[SegmentRecord]) -> Result<()> {
    write_jsonl(w, segments.iter().map(SegmentLine::from))
}

pub fn write_queries<W: Write>(w: W, queries: &[QueryRecord]) -> Result<()> {
    write_jsonl(w, queries.iter().map(QueryLine::from))
}

/// Input files for [`Corpus::load`].
#[derive(Debug, Clone, Default)]
pub struct ManifestPaths {
    pub segments: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub videos: Option<PathBuf>,
}

/// Immutable, validated corpus: segments, queries and videos.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    segments: Vec<SegmentRecord>,
    segment_index: HashMap<String, usize>,
    queries: Vec<QueryRecord>,
    videos: BTreeMap<String, VideoRecord>,
}

impl Corpus {
    /// Validates and assembles a corpus. If `vector_ids` is given, every
    /// segment's `vector_id` must appear in it.
    pub fn new(
        segments: Vec<SegmentRecord>,
        queries: Vec<QueryRecord>,
        videos: Vec<VideoRecord>,
        vector_ids: Option<&[String]>,
    ) -> Result<Self> {
        let mut segment_index = HashMap::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            if segment_index.insert(s.segment_id.clone(), i).is_some() {
                return Err(Error::DuplicateKey(s.segment_id.clone()));
            }
        }
        let mut seen_q = HashSet::new();
        for q in &queries {
            if !seen_q.insert(q.query_id.as_str()) {
                return Err(Error::DuplicateKey(q.query_id.clone()));
            }
        }
        let mut video_map = BTreeMap::new();
        for v in videos {
            if !(v.duration_s.is_finite() && v.duration_s > 0.0) {
                return Err(Error::InvalidInput(format!("video `{}` has non-positive duration", v.video_id)));
            }
            if let Some(old) = video_map.insert(v.video_id.clone(), v) {
                return Err(Error::DuplicateKey(old.video_id));
            }
        }

        if let Some(vids) = vector_ids {
            let known: HashSet<&str> = vids.iter().map(String::as_str).collect();
            let missing: Vec<String> = segments
                .iter()
                .filter(|s| !known.contains(s.vector_id.as_str()))
                .map(|s| s.vector_id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(Error::Integrity { kind: "vector id", ids: missing });
            }
        }

        let known_videos: BTreeSet<&str> = if video_map.is_empty() {
            segments.iter().map(|s| s.video_id.as_str()).collect()
        } else {
            let missing: BTreeSet<String> = segments
                .iter()
                .filter(|s| !video_map.contains_key(&s.video_id))
                .map(|s| s.video_id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(Error::Integrity { kind: "video", ids: missing.into_iter().collect() });
            }
            video_map.keys().map(String::as_str).collect()
        };
        let missing: BTreeSet<String> = queries
            .iter()
            .flat_map(|q| &q.gold_spans)
            .filter(|g| !known_videos.contains(g.video_id.as_str()))
            .map(|g| g.video_id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Integrity { kind: "gold-span video", ids: missing.into_iter().collect() });
        }

        Ok(Corpus { segments, segment_index, queries, videos: video_map })
    }

    pub fn load(paths: &ManifestPaths, vector_ids: Option<&[String]>) -> Result<Self> {
        let videos: Vec<VideoRecord> = match &paths.videos {
            Some(p) => read_jsonl_file(p)?,
            None => Vec::new(),
        };
        let segments = match &paths.segments {
            Some(p) => parse_segments(File::open(p)?, &p.display().to_string())?,
            None => Vec::new(),
        };
        let queries = match &paths.queries {
            Some(p) => parse_queries(File::open(p)?, &p.display().to_string())?,
            None => Vec::new(),
        };
        Corpus::new(segments, queries, videos, vector_ids)
    }

    pub fn segments(&self) -> &[SegmentRecord] {
        &self.segments
    }

    pub fn segment(&self, id: &str) -> Option<&SegmentRecord> {
        self.segment_index.get(id).map(|&i| &self.segments[i])
    }

    pub fn segment_position(&self, id: &str) -> Option<usize> {
        self.segment_index.get(id).copied()
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn videos(&self) -> impl Iterator<Item = &VideoRecord> {
        self.videos.values()
    }

    pub fn overlap_graph(&self) -> OverlapGraph {
        OverlapGraph::build(&self.segments)
    }
}

/// Windows every video into empty-text segments with ids `<video>@<start_ms>`.
pub fn segments_from_videos(videos: &[VideoRecord], window: f64, stride: f64) -> Result<Vec<SegmentRecord>> {
    let mut out = Vec::new();
    for v in videos {
        for span in segment_video(v.duration_s, window, stride)? {
            let id = format!("{}@{}", v.video_id, span.start_ms);
            out.push(SegmentRecord {
                vector_id: id.clone(),
                segment_id: id,
                video_id: v.video_id.clone(),
                course_id: v.course_id.clone(),
                span,
                asr_text: String::new(),
                wer: 0.0,
            });
        }
    }
    Ok(out)
}
