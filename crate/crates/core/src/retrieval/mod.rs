//! First-stage retrieval: flat inner-product search, BM25, hybrid fusion
//! and the mean-pooled frame baseline.

mod bm25;
mod flat;
mod hybrid;
mod scored;

pub use bm25::{tokenize, Bm25Hits, Bm25Index, Bm25Params, QueryStatus};
pub use flat::{FlatIndex, CFI_MAGIC};
pub use hybrid::{pool_frames, search_hybrid};
pub use scored::{rank_order, read_run, write_run, ScoredEntry, ScoredList};
