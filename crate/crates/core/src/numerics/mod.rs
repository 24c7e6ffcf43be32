//! Vector math, fusion and gating forward passes, and loss evaluation.

mod fusion;
mod layers;
mod loss;
mod weights;

pub use fusion::{fuse_segment, gate_fuse, project_vision, FusedSegmentVector, FusionModel, GateModel, VisionProjection};
pub use layers::{load_stack, scaled_dot_attention, CrossBlock, FeedForward, LayerNorm, MultiHeadAttention, HEADS};
pub use loss::{info_nce_loss, temporal_loss, temporal_loss_with_grad, TemporalLoss};
pub use weights::{ModelDims, Tensor, WeightBundle, CFW_MAGIC};

use crate::error::{Error, Result};
use crate::tensor::norm;

/// Unit-norm copy of `v`. Zero or non-finite norms are rejected.
pub fn l2_normalize(v: &[f32]) -> Result<Vec<f32>> {
    let n = norm(v);
    if !n.is_finite() {
        return Err(Error::NumericInput("vector to normalize".into()));
    }
    if n == 0.0 {
        return Err(Error::Degenerate("cannot normalize a zero vector".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}
