//! Timestamped lecture-video retrieval.
//!
//! Segments lectures into overlapping windows, fuses ASR-token and frame
//! embeddings into one vector per window, searches an exact inner-product
//! index, reranks and diversifies the hits, and evaluates the result with
//! ranked-retrieval, temporal, answer and calibration metrics. A latency
//! harness decomposes per-stage timings.

pub mod bench;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod rerank;
pub mod retrieval;
pub mod selfcheck;
pub mod tensor;
pub mod vectors;

pub use error::{Error, Result};
pub use par::Exec;
