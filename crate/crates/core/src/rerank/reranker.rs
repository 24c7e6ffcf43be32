use crate::error::{Error, Result};
use crate::numerics::{load_stack, CrossBlock, WeightBundle};
use crate::par::Exec;
use crate::retrieval::{ScoredEntry, ScoredList};
use crate::tensor::{dot, Matrix};

/// One first-stage hit with the embeddings the reranker reads.
#[derive(Debug, Clone)]
pub struct RerankCandidate {
    pub segment_id: String,
    pub asr_tokens: Matrix,
    /// Frame embeddings already projected to model width.
    pub frames: Matrix,
    pub first_stage_score: f64,
}

#[derive(Debug, Clone)]
pub struct RerankerInput {
    pub query_id: String,
    pub query_tokens: Matrix,
    pub candidates: Vec<RerankCandidate>,
}

/// Query tokens cross-attend over `[asr_tokens; frames]` of each candidate,
/// are mean-pooled and mapped to a scalar by a linear head.
#[derive(Debug, Clone)]
pub struct Reranker {
    pub blocks: Vec<CrossBlock>,
    pub head: Vec<f32>,
    pub bias: f32,
}

impl Reranker {
    pub fn load(w: &WeightBundle) -> Result<Self> {
        let head = w.get("rerank.head.weight")?.data.clone();
        let bias = w.vector("rerank.head.bias", 1)?[0];
        Ok(Reranker { blocks: load_stack(w, "rerank", head.len())?, head, bias })
    }

    pub fn model_dim(&self) -> usize {
        self.head.len()
    }

    pub fn score(&self, query_tokens: &Matrix, candidate: &RerankCandidate) -> Result<f32> {
        let d = self.model_dim();
        for (what, m) in [("query tokens", query_tokens), ("asr tokens", &candidate.asr_tokens), ("frames", &candidate.frames)] {
            if m.cols() != d {
                return Err(Error::shape(format!("{what} of `{}`", candidate.segment_id), d, m.cols()));
            }
            if !m.is_finite() {
                return Err(Error::NumericInput(format!("{what} of `{}`", candidate.segment_id)));
            }
        }
        if query_tokens.rows() == 0 {
            return Err(Error::Degenerate("empty query token set".into()));
        }
        let ctx = candidate.asr_tokens.vstack(&candidate.frames)?;
        let mut h = query_tokens.clone();
        for block in &self.blocks {
            h = block.forward(&h, &ctx)?;
        }
        Ok(dot(&h.mean_row(), &self.head) + self.bias)
    }

    pub fn rerank(&self, input: &RerankerInput) -> Result<ScoredList> {
        self.rerank_with(input, Exec::Sequential)
    }

    /// Scores candidates (optionally in parallel) and sorts with id tie-break.
    pub fn rerank_with(&self, input: &RerankerInput, exec: Exec) -> Result<ScoredList> {
        if input.candidates.is_empty() {
            return Err(Error::Degenerate(format!("no candidates to rerank for `{}`", input.query_id)));
        }
        let scores = exec.try_map(&input.candidates, |c| self.score(&input.query_tokens, c))?;
        let entries = input
            .candidates
            .iter()
            .zip(scores)
            .map(|(c, s)| ScoredEntry::new(c.segment_id.clone(), s as f64))
            .collect();
        Ok(ScoredList::from_unsorted(input.query_id.clone(), entries))
    }
}

pub fn rerank(input: &RerankerInput, w: &WeightBundle) -> Result<ScoredList> {
    Reranker::load(w)?.rerank(input)
}
