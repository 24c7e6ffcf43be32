//! Second stage: cross-attentive reranking, MMR diversification and
//! temporal-neighbour smoothing.

mod mmr;
mod reranker;
mod smooth;

pub use mmr::{cosine, mmr_select, mmr_select_detailed, mmr_trace, MmrPick};
pub use reranker::{rerank, RerankCandidate, Reranker, RerankerInput};
pub use smooth::{smooth_list, temporal_smooth};
