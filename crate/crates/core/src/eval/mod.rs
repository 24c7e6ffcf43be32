//! Retrieval, temporal, answer and faithfulness metrics, calibration,
//! agreement and bootstrap confidence intervals.

mod answer;
mod bootstrap;
mod calibration;
mod faithfulness;
mod kappa;
mod labels;
mod qrels;
mod rank;
mod report;
mod temporal;
mod wer;

pub use answer::{answer_metrics, normalize_answer, AnswerScores};
pub use bootstrap::{average_over_seeds, bootstrap_ci, bootstrap_replicates, nearest_rank, BootstrapCi, BootstrapConfig};
pub use calibration::{
    brier_score, calibrate, reliability_bins, reliability_line, CalibrationReport, PlattModel, ReliabilityBin,
    RELIABILITY_BINS,
};
pub use faithfulness::{
    alignment_score, char_grams, faithfulness_score, normalize_for_grams, split_propositions, FaithfulnessResult,
    PropositionScore, SUPPORT_THRESHOLD,
};
pub use kappa::cohen_kappa;
pub use labels::{hallucination_rate, Label, LabelRecord};
pub use qrels::{span_lookup, QrelEntry, Qrels, SpanLookup};
pub use rank::{ndcg_at, rank_metrics, recall_at, reciprocal_rank, QueryRankMetrics, RankReport};
pub use report::{format_table, write_metric_lines, MetricLine};
pub use temporal::{best_iou, temporal_hits, temporal_recall};
pub use wer::wer_bins;
