//! Deterministic toy embedder for fixtures and smoke runs.
//!
//! NOT a semantic model: each token maps to a seeded pseudo-random vector
//! derived from a hash of its text, so texts that share tokens end up with
//! correlated embeddings and nothing more.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::l2_normalize;
use crate::retrieval::tokenize;
use crate::tensor::Matrix;

const EMPTY_TOKEN: &str = "<empty>";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl ToyEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        ToyEmbedder { dim, seed }
    }

    fn keyed(&self, key: &str) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(key.as_bytes()) ^ self.seed.rotate_left(17));
        (0..self.dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
    }

    pub fn token(&self, token: &str) -> Vec<f32> {
        self.keyed(token)
    }

    fn tokens_or_placeholder(text: &str) -> Vec<String> {
        let toks = tokenize(text);
        if toks.is_empty() {
            vec![EMPTY_TOKEN.to_string()]
        } else {
            toks
        }
    }

    /// One row per token (a placeholder row for token-less text).
    pub fn token_matrix(&self, text: &str) -> Matrix {
        let rows: Vec<Vec<f32>> = Self::tokens_or_placeholder(text).iter().map(|t| self.token(t)).collect();
        Matrix::from_rows(&rows).expect("at least one token row")
    }

    /// Normalized sum of token vectors.
    pub fn text(&self, text: &str) -> Vec<f32> {
        let mut acc = vec![0.0f32; self.dim];
        for t in Self::tokens_or_placeholder(text) {
            for (a, v) in acc.iter_mut().zip(self.token(&t)) {
                *a += v;
            }
        }
        l2_normalize(&acc).unwrap_or_else(|_| self.keyed(EMPTY_TOKEN))
    }

    /// `n` frame embeddings: the text embedding plus per-frame noise keyed
    /// by `(segment_id, frame)`.
    pub fn frames(&self, segment_id: &str, text: &str, n: usize) -> Matrix {
        let base = self.text(text);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|f| {
                let noise = self.keyed(&format!("{segment_id}#frame{f}"));
                base.iter().zip(noise).map(|(b, e)| b + 0.5 * e / (self.dim as f32).sqrt()).collect()
            })
            .collect();
        Matrix::from_rows(&rows).expect("frame rows share a width")
    }
}
