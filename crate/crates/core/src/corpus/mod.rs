//! Segments, queries, manifests and the temporal-overlap graph.

mod graph;
mod manifest;
mod records;
mod segment;
mod span;

pub use graph::OverlapGraph;
pub use manifest::{
    parse_queries, parse_segments, read_jsonl, read_jsonl_file, segments_from_videos, write_jsonl,
    write_queries, write_segments, Corpus, ManifestPaths,
};
pub use records::{GoldSpan, QueryRecord, SegmentRecord, VideoRecord};
pub use segment::{full_window_count, segment_video, segment_video_ms};
pub use span::{secs_to_ms, Span};
