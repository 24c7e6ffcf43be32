use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coursetime::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "coursetime", version, about = "Timestamped lecture-video retrieval and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub segments: Option<PathBuf>,

    #[arg(long, global = true)]
    pub queries: Option<PathBuf>,

    #[arg(long, global = true)]
    pub videos: Option<PathBuf>,

    #[arg(long, global = true)]
    pub vectors: Option<PathBuf>,

    #[arg(long, global = true)]
    pub weights: Option<PathBuf>,

    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Run batch work on the current thread only.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(flatten)]
    pub knobs: Knobs,
}

#[derive(Debug, Args, Default)]
pub struct Knobs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub window: Option<f64>,
    #[arg(long, global = true)]
    pub stride: Option<f64>,
    #[arg(long, global = true)]
    pub frames_n: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub bm25_k1: Option<f64>,
    #[arg(long, global = true)]
    pub bm25_b: Option<f64>,
    #[arg(long, global = true)]
    pub hybrid_w: Option<f64>,
    #[arg(long, global = true)]
    pub mmr_alpha: Option<f64>,
    #[arg(long, global = true)]
    pub rerank_top_m: Option<usize>,
    #[arg(long, global = true)]
    pub smooth_lambda: Option<f64>,
    #[arg(long, global = true)]
    pub temporal_lambda: Option<f64>,
    #[arg(long, global = true)]
    pub infonce_tau: Option<f64>,
    #[arg(long, global = true)]
    pub bootstrap_replicates: Option<usize>,
    #[arg(long, global = true)]
    pub bootstrap_level: Option<f64>,
    #[arg(long, global = true)]
    pub bench_warmup: Option<usize>,
    #[arg(long, global = true)]
    pub toy_model_dim: Option<usize>,
    #[arg(long, global = true)]
    pub toy_vision_dim: Option<usize>,
    #[arg(long, global = true)]
    pub toy_ff_hidden: Option<usize>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl GlobalArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.paths;
        for (src, dst) in [
            (&self.segments, &mut p.segments),
            (&self.queries, &mut p.queries),
            (&self.videos, &mut p.videos),
            (&self.vectors, &mut p.vectors),
            (&self.weights, &mut p.weights),
            (&self.out_dir, &mut p.output_dir),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        let k = &self.knobs;
        set!(k.seed => cfg.seed);
        set!(k.window => cfg.segment.window);
        set!(k.stride => cfg.segment.stride);
        set!(k.frames_n => cfg.segment.frames_n);
        set!(k.k => cfg.retrieval.k);
        set!(k.bm25_k1 => cfg.bm25.k1);
        set!(k.bm25_b => cfg.bm25.b);
        set!(k.hybrid_w => cfg.hybrid.w);
        set!(k.mmr_alpha => cfg.mmr.alpha);
        set!(k.rerank_top_m => cfg.rerank.top_m);
        set!(k.smooth_lambda => cfg.smooth.lambda);
        set!(k.temporal_lambda => cfg.temporal.lambda);
        set!(k.infonce_tau => cfg.infonce.tau);
        set!(k.bootstrap_replicates => cfg.bootstrap.replicates);
        set!(k.bootstrap_level => cfg.bootstrap.level);
        set!(k.bench_warmup => cfg.bench.warmup);
        set!(k.toy_model_dim => cfg.toy.model_dim);
        set!(k.toy_vision_dim => cfg.toy.vision_dim);
        set!(k.toy_ff_hidden => cfg.toy.ff_hidden);
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate manifests; write normalized manifests, qrels and optional toy embeddings.
    Ingest(IngestArgs),
    /// Fuse per-segment token and frame embeddings into segment vectors.
    Fuse(FuseArgs),
    /// Build a flat inner-product index from a vector file.
    BuildIndex(OutArgs),
    /// First-stage retrieval (dense, BM25 or hybrid) to a run file.
    Search(SearchArgs),
    /// Rerank, smooth and diversify a first-stage run.
    Rerank(RerankArgs),
    /// Score a run against derived qrels.
    Evaluate(EvaluateArgs),
    /// Fit Platt scaling on a dev split and report calibration on a test split.
    Calibrate(CalibrateArgs),
    /// Per-stage latency measurement.
    Bench(BenchArgs),
    /// Run the oracle-equivalence checks on the bundled fixture.
    Selfcheck,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Also write toy token/frame/query embeddings and seeded random weights.
    #[arg(long)]
    pub toy: bool,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Token embeddings with ids `<segment_id>#<n>`.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Raw frame embeddings with ids `<segment_id>#<n>`.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Use toy embeddings and toy weights built from the segment manifest.
    #[arg(long)]
    pub toy: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scorer {
    Dense,
    Bm25,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query vectors with query ids; defaults to toy embeddings of the query texts.
    #[arg(long)]
    pub query_vectors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Scorer::Dense)]
    pub scorer: Scorer,
    #[arg(long, default_value = "coursetime")]
    pub tag: String,
    /// Run file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Query token embeddings with ids `<query_id>#<n>`.
    #[arg(long)]
    pub query_tokens: Option<PathBuf>,
    #[arg(long)]
    pub toy: bool,
    #[arg(long, default_value = "coursetime-rerank")]
    pub tag: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Precomputed qrels; derived from the manifests when absent.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// JSONL with `query_id, answer`.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// JSONL human ratings.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// IoU threshold for temporal recall.
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    /// Metric lines CSV; the table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with `score,label` columns.
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sleep-only stages in ms: retrieval,rerank,diversify,generate.
    #[arg(long, value_parser = parse_stub_ms)]
    pub stub_ms: Option<[u64; 4]>,
    /// Number of synthetic queries in stub mode without a query manifest.
    #[arg(long, default_value_t = 50)]
    pub n_queries: usize,
    /// Generation stub delay for the toy pipeline.
    #[arg(long, default_value_t = 0)]
    pub generate_ms: u64,
    /// Time queries concurrently (stage timings then include contention).
    #[arg(long)]
    pub concurrent: bool,
    /// Raw timing CSV.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_stub_ms(s: &str) -> Result<[u64; 4], String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|v: Vec<u64>| format!("expected 4 comma-separated values, got {}", v.len()))
}
