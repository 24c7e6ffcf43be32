//! Query-agnostic segment fusion and the late-fusion gate.

use crate::error::{Error, Result};
use crate::numerics::layers::{load_stack, CrossBlock};
use crate::numerics::l2_normalize;
use crate::numerics::weights::WeightBundle;
use crate::par::Exec;
use crate::tensor::{dot, gelu, sigmoid, softmax_inplace, Matrix};

/// Linear map from vision-encoder space into model space.
#[derive(Debug, Clone)]
pub struct VisionProjection {
    pub weight: Matrix,
    pub bias: Vec<f32>,
}

impl VisionProjection {
    pub fn load(w: &WeightBundle) -> Result<Self> {
        let weight = w.matrix("proj.weight", None, None)?;
        let bias = w.vector("proj.bias", weight.rows())?;
        Ok(VisionProjection { weight, bias })
    }

    pub fn model_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn vision_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn project(&self, f: &[f32]) -> Result<Vec<f32>> {
        if f.len() != self.vision_dim() {
            return Err(Error::shape("proj.weight", format!("input of {}", self.vision_dim()), f.len()));
        }
        Ok(self.weight.iter_rows().zip(&self.bias).map(|(r, b)| dot(r, f) + b).collect())
    }

    pub fn project_rows(&self, frames: &Matrix) -> Result<Matrix> {
        if frames.cols() != self.vision_dim() {
            return Err(Error::shape("proj.weight", format!("frames of width {}", self.vision_dim()), frames.cols()));
        }
        Ok(frames.linear(&self.weight, &self.bias))
    }
}

/// `proj_W * f + proj_b` using the bundle's projection.
pub fn project_vision(f: &[f32], w: &WeightBundle) -> Result<Vec<f32>> {
    VisionProjection::load(w)?.project(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedSegmentVector {
    pub segment_id: String,
    pub vec: Vec<f32>,
}

/// Frames are projected, ASR tokens cross-attend over them through a stack
/// of pre-norm blocks, and the token outputs are attention-pooled into one
/// unit vector.
#[derive(Debug, Clone)]
pub struct FusionModel {
    pub projection: VisionProjection,
    pub blocks: Vec<CrossBlock>,
    pub pool: Vec<f32>,
}

impl FusionModel {
    pub fn load(w: &WeightBundle) -> Result<Self> {
        let projection = VisionProjection::load(w)?;
        let d = projection.model_dim();
        Ok(FusionModel { blocks: load_stack(w, "fusion", d)?, pool: w.vector("fusion.pool", d)?, projection })
    }

    pub fn model_dim(&self) -> usize {
        self.projection.model_dim()
    }

    pub fn fuse(&self, asr_tokens: &Matrix, frames: &Matrix) -> Result<Vec<f32>> {
        if asr_tokens.rows() == 0 || frames.rows() == 0 {
            return Err(Error::Degenerate("fusion needs at least one token and one frame".into()));
        }
        if asr_tokens.cols() != self.model_dim() {
            return Err(Error::shape("asr tokens", self.model_dim(), asr_tokens.cols()));
        }
        if !asr_tokens.is_finite() || !frames.is_finite() {
            return Err(Error::NumericInput("fusion inputs".into()));
        }
        let ctx = self.projection.project_rows(frames)?;
        let mut h = asr_tokens.clone();
        for block in &self.blocks {
            h = block.forward(&h, &ctx)?;
        }
        let mut a: Vec<f32> = h.iter_rows().map(|r| dot(r, &self.pool)).collect();
        softmax_inplace(&mut a);
        let mut pooled = vec![0.0f32; h.cols()];
        for (r, &at) in h.iter_rows().zip(&a) {
            for (p, v) in pooled.iter_mut().zip(r) {
                *p += at * v;
            }
        }
        l2_normalize(&pooled)
    }

    pub fn fuse_segment(&self, segment_id: &str, asr_tokens: &Matrix, frames: &Matrix) -> Result<FusedSegmentVector> {
        Ok(FusedSegmentVector { segment_id: segment_id.to_string(), vec: self.fuse(asr_tokens, frames)? })
    }

    /// Fuses many segments; output order follows input order.
    pub fn fuse_batch(
        &self,
        inputs: &[(String, Matrix, Matrix)],
        exec: Exec,
    ) -> Result<Vec<FusedSegmentVector>> {
        exec.try_map(inputs, |(id, t, f)| self.fuse_segment(id, t, f))
    }
}

pub fn fuse_segment(segment_id: &str, asr_tokens: &Matrix, frames: &Matrix, w: &WeightBundle) -> Result<FusedSegmentVector> {
    FusionModel::load(w)?.fuse_segment(segment_id, asr_tokens, frames)
}

/// Elementwise gate between text and projected image embeddings:
/// `g = sigmoid(MLP([z_txt; z_img]))`, output `g*z_img + (1-g)*z_txt`,
/// L2-normalized.
#[derive(Debug, Clone)]
pub struct GateModel {
    pub projection: VisionProjection,
    pub w1: Matrix,
    pub b1: Vec<f32>,
    pub w2: Matrix,
    pub b2: Vec<f32>,
}

impl GateModel {
    pub fn load(w: &WeightBundle) -> Result<Self> {
        let projection = VisionProjection::load(w)?;
        let d = projection.model_dim();
        let w1 = w.matrix("gate.w1", None, Some(2 * d))?;
        let h = w1.rows();
        Ok(GateModel {
            b1: w.vector("gate.b1", h)?,
            w2: w.matrix("gate.w2", Some(d), Some(h))?,
            b2: w.vector("gate.b2", d)?,
            w1,
            projection,
        })
    }

    pub fn gate_fuse(&self, z_txt: &[f32], z_img_raw: &[f32]) -> Result<Vec<f32>> {
        let d = self.projection.model_dim();
        if z_txt.len() != d {
            return Err(Error::shape("z_txt", d, z_txt.len()));
        }
        let z_img = self.projection.project(z_img_raw)?;
        let mut cat = z_txt.to_vec();
        cat.extend_from_slice(&z_img);
        let hidden: Vec<f32> = self.w1.iter_rows().zip(&self.b1).map(|(r, b)| gelu(dot(r, &cat) + b)).collect();
        let fused: Vec<f32> = self
            .w2
            .iter_rows()
            .zip(&self.b2)
            .zip(z_txt.iter().zip(&z_img))
            .map(|((r, b), (t, i))| {
                let g = sigmoid(dot(r, &hidden) + b);
                g * i + (1.0 - g) * t
            })
            .collect();
        l2_normalize(&fused)
    }
}

pub fn gate_fuse(z_txt: &[f32], z_img_raw: &[f32], w: &WeightBundle) -> Result<Vec<f32>> {
    GateModel::load(w)?.gate_fuse(z_txt, z_img_raw)
}
