//! Multi-head cross-attention and pre-norm residual blocks.

use crate::error::{Error, Result};
use crate::numerics::weights::WeightBundle;
use crate::tensor::{dot, gelu, softmax_inplace, Matrix};

pub const HEADS: usize = 4;
const LN_EPS: f32 = 1e-5;

/// Per-head scaled dot-product attention without projections.
///
/// Returns the concatenated head outputs (`m x d`) and, per head, the
/// `m x n` attention weights.
pub fn scaled_dot_attention(q: &Matrix, k: &Matrix, v: &Matrix, heads: usize) -> Result<(Matrix, Vec<Matrix>)> {
    let d = q.cols();
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(Error::shape("attention", format!("model dim divisible by {heads}"), d));
    }
    if k.cols() != d || v.cols() != d {
        return Err(Error::shape("attention keys/values", d, format!("{}/{}", k.cols(), v.cols())));
    }
    if k.rows() != v.rows() {
        return Err(Error::shape("attention values", k.rows(), v.rows()));
    }
    if k.rows() == 0 {
        return Err(Error::Degenerate("attention over zero keys".into()));
    }
    for (name, m) in [("queries", q), ("keys", k), ("values", v)] {
        if !m.is_finite() {
            return Err(Error::NumericInput(format!("attention {name}")));
        }
    }
    let dh = d / heads;
    let scale = 1.0 / (dh as f32).sqrt();
    let (m, n) = (q.rows(), k.rows());
    let mut out = Matrix::zeros(m, d);
    let mut all_weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let mut weights = Matrix::zeros(m, n);
        for i in 0..m {
            let qi = &q.row(i)[cols.clone()];
            let w = weights.row_mut(i);
            for (j, wj) in w.iter_mut().enumerate() {
                *wj = dot(qi, &k.row(j)[cols.clone()]) * scale;
            }
            softmax_inplace(w);
            let o = &mut out.row_mut(i)[cols.clone()];
            for (j, &wj) in w.iter().enumerate() {
                for (oc, vc) in o.iter_mut().zip(&v.row(j)[cols.clone()]) {
                    *oc += wj * vc;
                }
            }
        }
        all_weights.push(weights);
    }
    Ok((out, all_weights))
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
}

impl LayerNorm {
    pub fn load(w: &WeightBundle, prefix: &str, d: usize) -> Result<Self> {
        Ok(LayerNorm { gamma: w.vector(&format!("{prefix}.gamma"), d)?, beta: w.vector(&format!("{prefix}.beta"), d)? })
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        let d = x.cols() as f32;
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            let mean = row.iter().sum::<f32>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / d;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for ((v, g), b) in row.iter_mut().zip(&self.gamma).zip(&self.beta) {
                *v = (*v - mean) * inv * g + b;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Matrix,
    pub bq: Vec<f32>,
    pub wk: Matrix,
    pub bk: Vec<f32>,
    pub wv: Matrix,
    pub bv: Vec<f32>,
    pub wo: Matrix,
    pub bo: Vec<f32>,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn load(w: &WeightBundle, prefix: &str, d: usize) -> Result<Self> {
        let m = |n: &str| w.matrix(&format!("{prefix}.w{n}"), Some(d), Some(d));
        let b = |n: &str| w.vector(&format!("{prefix}.b{n}"), d);
        Ok(MultiHeadAttention {
            wq: m("q")?,
            bq: b("q")?,
            wk: m("k")?,
            bk: b("k")?,
            wv: m("v")?,
            bv: b("v")?,
            wo: m("o")?,
            bo: b("o")?,
            heads: HEADS,
        })
    }

    /// `queries` attend over `context`; output has one row per query row.
    pub fn forward(&self, queries: &Matrix, context: &Matrix) -> Result<Matrix> {
        let q = queries.linear(&self.wq, &self.bq);
        let k = context.linear(&self.wk, &self.bk);
        let v = context.linear(&self.wv, &self.bv);
        let (heads, _) = scaled_dot_attention(&q, &k, &v, self.heads)?;
        Ok(heads.linear(&self.wo, &self.bo))
    }
}

#[derive(Debug, Clone)]
pub struct FeedForward {
    pub w1: Matrix,
    pub b1: Vec<f32>,
    pub w2: Matrix,
    pub b2: Vec<f32>,
}

impl FeedForward {
    pub fn load(w: &WeightBundle, prefix: &str, d: usize) -> Result<Self> {
        let w1 = w.matrix(&format!("{prefix}.w1"), None, Some(d))?;
        let h = w1.rows();
        Ok(FeedForward {
            b1: w.vector(&format!("{prefix}.b1"), h)?,
            w2: w.matrix(&format!("{prefix}.w2"), Some(d), Some(h))?,
            b2: w.vector(&format!("{prefix}.b2"), d)?,
            w1,
        })
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut h = x.linear(&self.w1, &self.b1);
        h.map_inplace(gelu);
        h.linear(&self.w2, &self.b2)
    }
}

/// Pre-norm cross-attention block:
/// `x += attn(ln_q(x), ln_kv(ctx)); x += ff(ln_ff(x))`.
#[derive(Debug, Clone)]
pub struct CrossBlock {
    pub ln_q: LayerNorm,
    pub ln_kv: LayerNorm,
    pub attn: MultiHeadAttention,
    pub ln_ff: LayerNorm,
    pub ff: FeedForward,
}

impl CrossBlock {
    pub fn load(w: &WeightBundle, prefix: &str, d: usize) -> Result<Self> {
        Ok(CrossBlock {
            ln_q: LayerNorm::load(w, &format!("{prefix}.ln_q"), d)?,
            ln_kv: LayerNorm::load(w, &format!("{prefix}.ln_kv"), d)?,
            attn: MultiHeadAttention::load(w, &format!("{prefix}.attn"), d)?,
            ln_ff: LayerNorm::load(w, &format!("{prefix}.ln_ff"), d)?,
            ff: FeedForward::load(w, &format!("{prefix}.ff"), d)?,
        })
    }

    pub fn forward(&self, x: &Matrix, context: &Matrix) -> Result<Matrix> {
        let kv = self.ln_kv.forward(context);
        let mut h = x.clone();
        h.add_assign(&self.attn.forward(&self.ln_q.forward(&h), &kv)?);
        let ff = self.ff.forward(&self.ln_ff.forward(&h));
        h.add_assign(&ff);
        Ok(h)
    }
}

/// Loads `<prefix>.0`, `<prefix>.1`, ... until the first missing layer.
pub fn load_stack(w: &WeightBundle, prefix: &str, d: usize) -> Result<Vec<CrossBlock>> {
    let mut blocks = Vec::new();
    while w.contains(&format!("{prefix}.{}.attn.wq", blocks.len())) {
        blocks.push(CrossBlock::load(w, &format!("{prefix}.{}", blocks.len()), d)?);
    }
    if blocks.is_empty() {
        return Err(Error::MissingTensor(format!("{prefix}.0.attn.wq")));
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identical_keys_give_uniform_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = rand_matrix(&mut rng, 3, 8);
        let row: Vec<f32> = (0..8).map(|i| i as f32 * 0.1).collect();
        let k = Matrix::from_rows(&[row.clone(), row.clone(), row.clone(), row]).unwrap();
        let v = rand_matrix(&mut rng, 4, 8);
        let (_, w) = scaled_dot_attention(&q, &k, &v, 4).unwrap();
        for head in &w {
            for x in head.data() {
                assert!((x - 0.25).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn single_key_returns_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = rand_matrix(&mut rng, 2, 8);
        let k = rand_matrix(&mut rng, 1, 8);
        let v = rand_matrix(&mut rng, 1, 8);
        let (out, _) = scaled_dot_attention(&q, &k, &v, 4).unwrap();
        assert_eq!(out.row(0), v.row(0));
        assert_eq!(out.row(1), v.row(0));
    }

    #[test]
    fn weight_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = rand_matrix(&mut rng, 5, 16);
        let k = rand_matrix(&mut rng, 7, 16);
        let v = rand_matrix(&mut rng, 7, 16);
        let (_, w) = scaled_dot_attention(&q, &k, &v, 4).unwrap();
        for head in &w {
            for r in head.iter_rows() {
                assert!((r.iter().sum::<f32>() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_heads() {
        let q = Matrix::from_vec(1, 8, vec![f32::NAN; 8]).unwrap();
        let k = Matrix::zeros(1, 8);
        assert!(matches!(scaled_dot_attention(&q, &k, &k, 4), Err(Error::NumericInput(_))));
        let q = Matrix::zeros(1, 6);
        let k = Matrix::zeros(1, 6);
        assert!(matches!(scaled_dot_attention(&q, &k, &k, 4), Err(Error::ShapeMismatch { .. })));
    }
}
