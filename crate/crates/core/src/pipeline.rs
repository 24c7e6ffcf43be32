//! End-to-end retrieval pipeline: dense (or hybrid) first stage, reranking
//! with optional temporal smoothing, MMR diversification and a stub
//! generation stage.

use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use crate::bench::Stages;
use crate::config::RunConfig;
use crate::corpus::{Corpus, OverlapGraph};
use crate::embed::ToyEmbedder;
use crate::error::{Error, Result};
use crate::numerics::{FusionModel, ModelDims, VisionProjection, WeightBundle};
use crate::par::Exec;
use crate::rerank::{mmr_select, smooth_list, RerankCandidate, Reranker, RerankerInput};
use crate::retrieval::{search_hybrid, Bm25Index, Bm25Params, FlatIndex, ScoredList};
use crate::tensor::Matrix;
use crate::vectors::VectorBlock;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub k: usize,
    pub top_m: usize,
    pub mmr_alpha: f64,
    pub smooth_lambda: f64,
    /// Dense weight for hybrid first-stage scoring; `None` means dense only.
    pub hybrid_w: Option<f64>,
    pub generate_delay: Duration,
    pub exec: Exec,
}

impl PipelineSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        PipelineSettings {
            k: cfg.retrieval.k,
            top_m: cfg.rerank.top_m,
            mmr_alpha: cfg.mmr.alpha,
            smooth_lambda: cfg.smooth.lambda,
            hybrid_w: None,
            generate_delay: Duration::ZERO,
            exec: Exec::Sequential,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineQuery {
    pub query_id: String,
    pub text: String,
    pub vector: Vec<f32>,
    pub tokens: Matrix,
}

/// Segment-side state: fused vectors, ASR token and projected frame
/// matrices, and the overlap graph.
#[derive(Debug, Clone)]
pub struct SegmentStore {
    pub fused: VectorBlock,
    pub tokens: HashMap<String, Matrix>,
    pub projected_frames: HashMap<String, Matrix>,
    pub graph: OverlapGraph,
}

pub struct Pipeline {
    index: FlatIndex,
    fused: HashMap<String, Vec<f32>>,
    tokens: HashMap<String, Matrix>,
    frames: HashMap<String, Matrix>,
    graph: OverlapGraph,
    reranker: Reranker,
    bm25: Option<Bm25Index>,
    queries: Vec<PipelineQuery>,
    settings: PipelineSettings,
}

/// Per-query state threaded through the stages.
#[derive(Debug, Clone)]
pub struct QueryState {
    pub query: usize,
    pub list: ScoredList,
}

impl Pipeline {
    pub fn new(
        store: SegmentStore,
        reranker: Reranker,
        bm25: Option<Bm25Index>,
        queries: Vec<PipelineQuery>,
        settings: PipelineSettings,
    ) -> Result<Self> {
        let index = FlatIndex::build(&store.fused)?;
        let fused = store.fused.rows().map(|(id, v)| (id.to_string(), v.to_vec())).collect();
        if settings.hybrid_w.is_some() && bm25.is_none() {
            return Err(Error::InvalidConfig("hybrid scoring needs a BM25 index".into()));
        }
        Ok(Pipeline {
            index,
            fused,
            tokens: store.tokens,
            frames: store.projected_frames,
            graph: store.graph,
            reranker,
            bm25,
            queries,
            settings,
        })
    }

    /// Builds everything from a corpus with the deterministic toy embedder
    /// and seeded random weights.
    pub fn toy(corpus: &Corpus, cfg: &RunConfig, settings: PipelineSettings) -> Result<Self> {
        let weights = toy_weights(cfg);
        let store = toy_store(corpus, cfg, &weights, settings.exec)?;
        let bm25 = settings.hybrid_w.map(|_| toy_bm25(corpus, cfg));
        let queries = toy_queries(corpus, cfg);
        Pipeline::new(store, Reranker::load(&weights)?, bm25, queries, settings)
    }

    pub fn queries(&self) -> &[PipelineQuery] {
        &self.queries
    }

    pub fn query_ids(&self) -> Vec<String> {
        self.queries.iter().map(|q| q.query_id.clone()).collect()
    }

    pub fn settings(&self) -> &PipelineSettings {
        &self.settings
    }

    pub fn query_position(&self, query_id: &str) -> Option<usize> {
        self.queries.iter().position(|q| q.query_id == query_id)
    }

    /// Top-`top_m` first-stage candidates.
    pub fn first_stage(&self, qi: usize) -> Result<ScoredList> {
        let q = &self.queries[qi];
        let m = self.settings.top_m;
        let dense = self.index.search(&q.query_id, &q.vector, m)?;
        match (self.settings.hybrid_w, &self.bm25) {
            (Some(w), Some(bm25)) => {
                let sparse = bm25.search(&q.query_id, &q.text, m).list;
                search_hybrid(&dense, &sparse, w, m)
            }
            _ => Ok(dense),
        }
    }

    /// Cross-attentive reranking of the first `top_m` entries, then temporal
    /// smoothing when `smooth_lambda > 0`.
    pub fn rerank_list(&self, qi: usize, list: &ScoredList) -> Result<ScoredList> {
        let q = &self.queries[qi];
        let candidates = list
            .top(self.settings.top_m)
            .iter()
            .map(|e| {
                let id = &e.segment_id;
                let missing = || Error::Integrity { kind: "candidate without embeddings", ids: vec![id.clone()] };
                Ok(RerankCandidate {
                    segment_id: id.clone(),
                    asr_tokens: self.tokens.get(id).ok_or_else(missing)?.clone(),
                    frames: self.frames.get(id).ok_or_else(missing)?.clone(),
                    first_stage_score: e.score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if candidates.is_empty() {
            return Ok(ScoredList::empty(q.query_id.clone()));
        }
        let input = RerankerInput { query_id: q.query_id.clone(), query_tokens: q.tokens.clone(), candidates };
        let ranked = self.reranker.rerank_with(&input, self.settings.exec)?;
        if self.settings.smooth_lambda > 0.0 {
            Ok(smooth_list(&ranked, &self.graph, self.settings.smooth_lambda))
        } else {
            Ok(ranked)
        }
    }

    pub fn diversify(&self, list: &ScoredList) -> Result<ScoredList> {
        if list.is_empty() {
            return Ok(list.clone());
        }
        mmr_select(list, &self.fused, self.settings.mmr_alpha, self.settings.k)
    }

    pub fn run_query(&self, qi: usize) -> Result<ScoredList> {
        let first = self.first_stage(qi)?;
        let reranked = self.rerank_list(qi, &first)?;
        self.diversify(&reranked)
    }

    /// Final top-k lists for every query, in query order.
    pub fn run_all(&self) -> Result<Vec<ScoredList>> {
        (0..self.queries.len()).map(|qi| self.run_query(qi)).collect()
    }

    /// Dense first-stage lists truncated to `k`.
    pub fn search_all(&self, k: usize) -> Result<Vec<ScoredList>> {
        let batch: Vec<(String, Vec<f32>)> =
            self.queries.iter().map(|q| (q.query_id.clone(), q.vector.clone())).collect();
        self.index.search_batch(&batch, k, self.settings.exec)
    }
}

impl Stages for Pipeline {
    type State = QueryState;

    fn retrieve(&self, query: usize) -> Result<QueryState> {
        Ok(QueryState { query, list: self.first_stage(query)? })
    }

    fn rerank(&self, state: &mut QueryState) -> Result<()> {
        state.list = self.rerank_list(state.query, &state.list)?;
        Ok(())
    }

    fn diversify(&self, state: &mut QueryState) -> Result<()> {
        state.list = Pipeline::diversify(self, &state.list)?;
        Ok(())
    }

    fn generate(&self, _: &mut QueryState) -> Result<()> {
        if !self.settings.generate_delay.is_zero() {
            thread::sleep(self.settings.generate_delay);
        }
        Ok(())
    }
}

pub fn toy_dims(cfg: &RunConfig) -> ModelDims {
    ModelDims {
        model: cfg.toy.model_dim,
        vision: cfg.toy.vision_dim,
        ff_hidden: cfg.toy.ff_hidden,
        fusion_layers: 2,
        rerank_layers: 2,
    }
}

pub fn toy_weights(cfg: &RunConfig) -> WeightBundle {
    WeightBundle::random(cfg.seed, toy_dims(cfg))
}

/// Text-side embedder (model width).
pub fn toy_text_embedder(cfg: &RunConfig) -> ToyEmbedder {
    ToyEmbedder::new(cfg.toy.model_dim, cfg.seed)
}

/// Frame embedder (vision width).
pub fn toy_frame_embedder(cfg: &RunConfig) -> ToyEmbedder {
    ToyEmbedder::new(cfg.toy.vision_dim, cfg.seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Per-segment ASR token matrices and raw frame matrices.
pub fn toy_segment_inputs(corpus: &Corpus, cfg: &RunConfig) -> Vec<(String, Matrix, Matrix)> {
    let text = toy_text_embedder(cfg);
    let vision = toy_frame_embedder(cfg);
    corpus
        .segments()
        .iter()
        .map(|s| {
            (
                s.segment_id.clone(),
                text.token_matrix(&s.asr_text),
                vision.frames(&s.segment_id, &s.asr_text, cfg.segment.frames_n),
            )
        })
        .collect()
}

pub fn toy_store(corpus: &Corpus, cfg: &RunConfig, weights: &WeightBundle, exec: Exec) -> Result<SegmentStore> {
    let inputs = toy_segment_inputs(corpus, cfg);
    store_from_inputs(corpus.overlap_graph(), &inputs, weights, exec)
}

/// Fuses `(segment_id, asr_tokens, raw_frames)` triples and keeps the
/// matrices the reranker needs.
pub fn store_from_inputs(
    graph: OverlapGraph,
    inputs: &[(String, Matrix, Matrix)],
    weights: &WeightBundle,
    exec: Exec,
) -> Result<SegmentStore> {
    let fusion = FusionModel::load(weights)?;
    let projection = VisionProjection::load(weights)?;
    let fused = fusion.fuse_batch(inputs, exec)?;
    let ids: Vec<String> = fused.iter().map(|f| f.segment_id.clone()).collect();
    let rows: Vec<Vec<f32>> = fused.into_iter().map(|f| f.vec).collect();
    let mut tokens = HashMap::with_capacity(inputs.len());
    let mut projected_frames = HashMap::with_capacity(inputs.len());
    for (id, t, f) in inputs {
        tokens.insert(id.clone(), t.clone());
        projected_frames.insert(id.clone(), projection.project_rows(f)?);
    }
    Ok(SegmentStore { fused: VectorBlock::from_rows(ids, &rows)?, tokens, projected_frames, graph })
}

pub fn toy_queries(corpus: &Corpus, cfg: &RunConfig) -> Vec<PipelineQuery> {
    let e = toy_text_embedder(cfg);
    corpus
        .queries()
        .iter()
        .map(|q| PipelineQuery {
            query_id: q.query_id.clone(),
            text: q.text.clone(),
            vector: e.text(&q.text),
            tokens: e.token_matrix(&q.text),
        })
        .collect()
}

pub fn toy_bm25(corpus: &Corpus, cfg: &RunConfig) -> Bm25Index {
    Bm25Index::build(
        corpus.segments().iter().map(|s| (s.segment_id.as_str(), s.asr_text.as_str())),
        Bm25Params { k1: cfg.bm25.k1, b: cfg.bm25.b },
    )
}

/// Toy text-embedding vectors for every segment's ASR text.
pub fn toy_text_vectors(corpus: &Corpus, cfg: &RunConfig) -> Result<VectorBlock> {
    let e = toy_text_embedder(cfg);
    let ids: Vec<String> = corpus.segments().iter().map(|s| s.segment_id.clone()).collect();
    let rows: Vec<Vec<f32>> = corpus.segments().iter().map(|s| e.text(&s.asr_text)).collect();
    VectorBlock::from_rows(ids, &rows)
}
