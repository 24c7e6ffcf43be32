use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use coursetime::bench::{measure, read_raw_log, summarize, write_raw_log, MeasureConfig, SleepStages, STAGES};
use coursetime::config::RunConfig;
use coursetime::corpus::{
    parse_queries, parse_segments, read_jsonl, read_jsonl_file, segments_from_videos, write_queries, write_segments,
    Corpus, ManifestPaths, VideoRecord,
};
use coursetime::eval::{
    answer_metrics, bootstrap_ci, calibrate, cohen_kappa, faithfulness_score, format_table, hallucination_rate,
    rank_metrics, span_lookup, temporal_hits, wer_bins, write_metric_lines, BootstrapConfig, LabelRecord, MetricLine,
    Qrels,
};
use coursetime::numerics::{FusionModel, VisionProjection, WeightBundle};
use coursetime::pipeline::{
    toy_bm25, toy_queries, toy_segment_inputs, toy_text_vectors, toy_weights,
    Pipeline, PipelineQuery, PipelineSettings, SegmentStore,
};
use coursetime::rerank::Reranker;
use coursetime::retrieval::{read_run, search_hybrid, write_run, FlatIndex, ScoredList};
use coursetime::selfcheck::run_selfcheck;
use coursetime::tensor::Matrix;
use coursetime::vectors::VectorBlock;
use coursetime::{Error, Exec, Result};
use serde::Deserialize;

use crate::args::{
    BenchArgs, CalibrateArgs, Cli, Command, EvaluateArgs, FuseArgs, IngestArgs, OutArgs, RerankArgs, Scorer, SearchArgs,
};

const FIXTURE_SEGMENTS: &str = include_str!("../fixtures/segments.jsonl");
const FIXTURE_QUERIES: &str = include_str!("../fixtures/queries.jsonl");
const FIXTURE_VIDEOS: &str = include_str!("../fixtures/videos.jsonl");

struct Ctx {
    cfg: RunConfig,
    exec: Exec,
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::from_json(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    cli.global.apply(&mut cfg);
    if let Command::Bench(b) = &cli.command {
        cfg.bench.concurrent |= b.concurrent;
    }
    cfg.validate()?;
    let exec = if cli.global.sequential { Exec::Sequential } else { Exec::Parallel };
    let ctx = Ctx { cfg, exec };
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, &a),
        Command::Fuse(a) => fuse(&ctx, &a),
        Command::BuildIndex(a) => build_index(&ctx, &a),
        Command::Search(a) => search(&ctx, &a),
        Command::Rerank(a) => rerank(&ctx, &a),
        Command::Evaluate(a) => evaluate(&ctx, &a),
        Command::Calibrate(a) => calibrate_cmd(&ctx, &a),
        Command::Bench(a) => bench(&ctx, &a),
        Command::Selfcheck => selfcheck(&ctx),
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidConfig(format!("missing required input: {what}"))
}

/// Writes the resolved config next to the primary artifact, into the
/// output directory, or to stderr.
fn emit_snapshot(cfg: &RunConfig, artifact: Option<&Path>) -> Result<()> {
    let snapshot = cfg.snapshot();
    let target = match artifact {
        Some(p) => {
            let mut name = p.as_os_str().to_owned();
            name.push(".config.json");
            Some(PathBuf::from(name))
        }
        None => cfg.paths.output_dir.as_ref().map(|d| d.join("config.json")),
    };
    match target {
        Some(t) => fs::write(t, snapshot)?,
        None => eprint!("{snapshot}"),
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_output(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn load_corpus(cfg: &RunConfig, vector_ids: Option<&[String]>) -> Result<Corpus> {
    let p = &cfg.paths;
    if p.segments.is_none() {
        if let Some(v) = &p.videos {
            let videos: Vec<VideoRecord> = read_jsonl_file(v)?;
            let segments = segments_from_videos(&videos, cfg.segment.window, cfg.segment.stride)?;
            let queries = match &p.queries {
                Some(q) => parse_queries(File::open(q)?, &q.display().to_string())?,
                None => Vec::new(),
            };
            return Corpus::new(segments, queries, videos, vector_ids);
        }
    }
    let paths = ManifestPaths { segments: p.segments.clone(), queries: p.queries.clone(), videos: p.videos.clone() };
    Corpus::load(&paths, vector_ids)
}

fn require_segments(corpus: &Corpus) -> Result<()> {
    if corpus.segments().is_empty() {
        return Err(missing("--segments or --videos"));
    }
    Ok(())
}

fn fixture_corpus() -> Result<Corpus> {
    Corpus::new(
        parse_segments(FIXTURE_SEGMENTS.as_bytes(), "fixtures/segments.jsonl")?,
        parse_queries(FIXTURE_QUERIES.as_bytes(), "fixtures/queries.jsonl")?,
        read_jsonl(FIXTURE_VIDEOS.as_bytes(), "fixtures/videos.jsonl")?,
        None,
    )
}

fn settings(ctx: &Ctx) -> PipelineSettings {
    let mut s = PipelineSettings::from_config(&ctx.cfg);
    s.exec = ctx.exec;
    s
}

fn grouped_block(ids: Vec<String>, mats: &[Matrix]) -> Result<VectorBlock> {
    let dim = mats.first().map_or(0, Matrix::cols);
    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for (id, m) in ids.iter().zip(mats) {
        for (n, row) in m.iter_rows().enumerate() {
            row_ids.push(format!("{id}#{n}"));
            data.extend_from_slice(row);
        }
    }
    VectorBlock::new(dim, row_ids, data)
}

fn ingest(ctx: &Ctx, args: &IngestArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let dir = cfg.paths.output_dir.clone().ok_or_else(|| missing("--out-dir"))?;
    let corpus = load_corpus(cfg, None)?;
    require_segments(&corpus)?;
    fs::create_dir_all(&dir)?;
    let mut w = create(&dir.join("segments.jsonl"))?;
    write_segments(&mut w, corpus.segments())?;
    w.flush()?;
    if !corpus.queries().is_empty() {
        let mut w = create(&dir.join("queries.jsonl"))?;
        write_queries(&mut w, corpus.queries())?;
        w.flush()?;
        let mut w = create(&dir.join("qrels.jsonl"))?;
        Qrels::derive(&corpus).write_to(&mut w)?;
        w.flush()?;
    }
    if args.toy {
        let inputs = toy_segment_inputs(&corpus, cfg);
        let ids: Vec<String> = inputs.iter().map(|(id, _, _)| id.clone()).collect();
        let tokens: Vec<Matrix> = inputs.iter().map(|(_, t, _)| t.clone()).collect();
        let frames: Vec<Matrix> = inputs.into_iter().map(|(_, _, f)| f).collect();
        grouped_block(ids.clone(), &tokens)?.save(&dir.join("tokens.cfv"))?;
        grouped_block(ids, &frames)?.save(&dir.join("frames.cfv"))?;
        if !corpus.queries().is_empty() {
            let qs = toy_queries(&corpus, cfg);
            let qids: Vec<String> = qs.iter().map(|q| q.query_id.clone()).collect();
            let rows: Vec<Vec<f32>> = qs.iter().map(|q| q.vector.clone()).collect();
            VectorBlock::from_rows(qids.clone(), &rows)?.save(&dir.join("query_vectors.cfv"))?;
            let qt: Vec<Matrix> = qs.into_iter().map(|q| q.tokens).collect();
            grouped_block(qids, &qt)?.save(&dir.join("query_tokens.cfv"))?;
        }
        toy_weights(cfg).save(&dir.join("weights.cfw"))?;
    }
    emit_snapshot(cfg, None)?;
    println!(
        "ingested {} segments, {} queries, {} edges",
        corpus.segments().len(),
        corpus.queries().len(),
        corpus.overlap_graph().edge_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_weights(cfg: &RunConfig) -> Result<WeightBundle> {
    WeightBundle::load(cfg.paths.weights.as_ref().ok_or_else(|| missing("--weights"))?)
}

fn load_grouped(path: Option<&PathBuf>, what: &str) -> Result<HashMap<String, Matrix>> {
    VectorBlock::load(path.ok_or_else(|| missing(what))?)?.grouped()
}

/// Segment ids in manifest order when a manifest is given, else sorted.
fn segment_order(corpus: &Corpus, groups: &HashMap<String, Matrix>) -> Vec<String> {
    if corpus.segments().is_empty() {
        let mut ids: Vec<String> = groups.keys().cloned().collect();
        ids.sort();
        ids
    } else {
        corpus.segments().iter().map(|s| s.segment_id.clone()).collect()
    }
}

fn fuse(ctx: &Ctx, args: &FuseArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let corpus = load_corpus(cfg, None)?;
    let (inputs, weights) = if args.toy {
        require_segments(&corpus)?;
        (toy_segment_inputs(&corpus, cfg), toy_weights(cfg))
    } else {
        let tokens = load_grouped(args.tokens.as_ref(), "--tokens")?;
        let mut frames = load_grouped(args.frames.as_ref(), "--frames")?;
        let mut inputs = Vec::new();
        let mut absent = Vec::new();
        for id in segment_order(&corpus, &tokens) {
            match (tokens.get(&id), frames.remove(&id)) {
                (Some(t), Some(f)) => inputs.push((id, t.clone(), f)),
                _ => absent.push(id),
            }
        }
        if !absent.is_empty() {
            return Err(Error::Integrity { kind: "segment embeddings", ids: absent });
        }
        (inputs, load_weights(cfg)?)
    };
    let fused = FusionModel::load(&weights)?.fuse_batch(&inputs, ctx.exec)?;
    let ids: Vec<String> = fused.iter().map(|f| f.segment_id.clone()).collect();
    let rows: Vec<Vec<f32>> = fused.into_iter().map(|f| f.vec).collect();
    VectorBlock::from_rows(ids, &rows)?.save(&args.out)?;
    emit_snapshot(cfg, Some(&args.out))?;
    println!("fused {} segments into {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn build_index(ctx: &Ctx, args: &OutArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let vectors = VectorBlock::load(cfg.paths.vectors.as_ref().ok_or_else(|| missing("--vectors"))?)?;
    let index = FlatIndex::build(&vectors)?;
    index.save(&args.out)?;
    emit_snapshot(cfg, Some(&args.out))?;
    println!("indexed {} vectors of dim {}", index.len(), index.dim());
    Ok(ExitCode::SUCCESS)
}

fn search(ctx: &Ctx, args: &SearchArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let corpus = load_corpus(cfg, None)?;
    let k = cfg.retrieval.k;
    let dense_index = || -> Result<FlatIndex> {
        match (&args.index, &cfg.paths.vectors) {
            (Some(p), _) => FlatIndex::load(p),
            (None, Some(v)) => FlatIndex::build(&VectorBlock::load(v)?),
            (None, None) => {
                require_segments(&corpus)?;
                FlatIndex::build(&toy_text_vectors(&corpus, cfg)?)
            }
        }
    };
    let dense_queries = || -> Result<Vec<(String, Vec<f32>)>> {
        match &args.query_vectors {
            Some(p) => Ok(VectorBlock::load(p)?.rows().map(|(id, v)| (id.to_string(), v.to_vec())).collect()),
            None => {
                if corpus.queries().is_empty() {
                    return Err(missing("--queries or --query-vectors"));
                }
                Ok(toy_queries(&corpus, cfg).into_iter().map(|q| (q.query_id, q.vector)).collect())
            }
        }
    };
    let sparse = || -> Result<HashMap<String, ScoredList>> {
        require_segments(&corpus)?;
        if corpus.queries().is_empty() {
            return Err(missing("--queries"));
        }
        let bm25 = toy_bm25(&corpus, cfg);
        Ok(corpus
            .queries()
            .iter()
            .map(|q| (q.query_id.clone(), bm25.search(&q.query_id, &q.text, k).list))
            .collect())
    };

    let mut lists = match args.scorer {
        Scorer::Dense => {
            let mut qs = dense_queries()?;
            qs.sort_by(|a, b| a.0.cmp(&b.0));
            dense_index()?.search_batch(&qs, k, ctx.exec)?
        }
        Scorer::Bm25 => sparse()?.into_values().collect(),
        Scorer::Hybrid => {
            let mut qs = dense_queries()?;
            qs.sort_by(|a, b| a.0.cmp(&b.0));
            let dense = dense_index()?.search_batch(&qs, k, ctx.exec)?;
            let sparse = sparse()?;
            dense
                .iter()
                .map(|d| {
                    let empty = ScoredList::empty(d.query_id.clone());
                    search_hybrid(d, sparse.get(&d.query_id).unwrap_or(&empty), cfg.hybrid.w, k)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    lists.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    write_output(args.out.as_deref(), |w| write_run(w, &lists, &args.tag))?;
    emit_snapshot(cfg, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn file_pipeline(ctx: &Ctx, args: &RerankArgs, corpus: &Corpus) -> Result<Pipeline> {
    let cfg = &ctx.cfg;
    let weights = load_weights(cfg)?;
    let fused = VectorBlock::load(cfg.paths.vectors.as_ref().ok_or_else(|| missing("--vectors (fused)"))?)?;
    let tokens = load_grouped(args.tokens.as_ref(), "--tokens")?;
    let raw_frames = load_grouped(args.frames.as_ref(), "--frames")?;
    let projection = VisionProjection::load(&weights)?;
    let mut projected_frames = HashMap::with_capacity(raw_frames.len());
    for (id, f) in &raw_frames {
        projected_frames.insert(id.clone(), projection.project_rows(f)?);
    }
    let mut query_tokens = load_grouped(args.query_tokens.as_ref(), "--query-tokens")?;
    let mut qids: Vec<String> = query_tokens.keys().cloned().collect();
    qids.sort();
    let queries = qids
        .into_iter()
        .map(|id| {
            let tokens = query_tokens.remove(&id).expect("key listed above");
            let text = corpus.queries().iter().find(|q| q.query_id == id).map(|q| q.text.clone()).unwrap_or_default();
            PipelineQuery { vector: tokens.mean_row(), query_id: id, text, tokens }
        })
        .collect();
    let store = SegmentStore { fused, tokens, projected_frames, graph: corpus.overlap_graph() };
    Pipeline::new(store, Reranker::load(&weights)?, None, queries, settings(ctx))
}

fn rerank(ctx: &Ctx, args: &RerankArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let corpus = load_corpus(cfg, None)?;
    let pipeline = if args.toy {
        require_segments(&corpus)?;
        Pipeline::toy(&corpus, cfg, settings(ctx))?
    } else {
        file_pipeline(ctx, args, &corpus)?
    };
    let run = read_run(BufReader::new(File::open(&args.run)?), &args.run.display().to_string())?;
    let mut unknown = Vec::new();
    let mut out = Vec::with_capacity(run.len());
    for list in &run {
        let Some(qi) = pipeline.query_position(&list.query_id) else {
            unknown.push(list.query_id.clone());
            continue;
        };
        let reranked = pipeline.rerank_list(qi, list)?;
        out.push(pipeline.diversify(&reranked)?);
    }
    if !unknown.is_empty() {
        return Err(Error::Integrity { kind: "query", ids: unknown });
    }
    write_output(args.out.as_deref(), |w| write_run(w, &out, &args.tag))?;
    emit_snapshot(cfg, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
struct AnswerLine {
    query_id: String,
    answer: String,
}

fn mean(v: &BTreeMap<String, f64>) -> f64 {
    v.values().sum::<f64>() / v.len() as f64
}

fn evaluate(ctx: &Ctx, args: &EvaluateArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let corpus = load_corpus(cfg, None)?;
    let qrels = match &args.qrels {
        Some(p) => Qrels::read_from(File::open(p)?, &p.display().to_string())?,
        None => {
            if corpus.queries().is_empty() {
                return Err(missing("--queries or --qrels"));
            }
            Qrels::derive(&corpus)
        }
    };
    let runs = read_run(BufReader::new(File::open(&args.run)?), &args.run.display().to_string())?;
    let course_of: HashMap<String, String> = qrels
        .entries
        .keys()
        .map(|q| {
            let course = corpus.queries().iter().find(|r| &r.query_id == q).map(|r| r.course_id.clone());
            (q.clone(), course.unwrap_or_default())
        })
        .collect();
    let bc = BootstrapConfig { replicates: cfg.bootstrap.replicates, level: cfg.bootstrap.level, seed: cfg.seed };
    let with_ci = |name: String, scores: &BTreeMap<String, f64>| -> Result<MetricLine> {
        if scores.is_empty() {
            return Ok(MetricLine::new(name, 0.0, None));
        }
        let ci = bootstrap_ci(scores, &course_of, &bc, ctx.exec)?;
        Ok(MetricLine::new(name, ci.mean, Some(ci.half_width)))
    };

    let report = rank_metrics(&runs, &qrels, &[1, 5, 10], 10);
    let mut lines = Vec::new();
    for (i, k) in [1usize, 5, 10].into_iter().enumerate() {
        let s = report.per_query.iter().map(|(q, m)| (q.clone(), m.recall[i].1)).collect();
        lines.push(with_ci(format!("recall@{k}"), &s)?);
    }
    let mrr = report.per_query.iter().map(|(q, m)| (q.clone(), m.reciprocal_rank)).collect();
    lines.push(with_ci("mrr".into(), &mrr)?);
    let ndcg: BTreeMap<String, f64> = report.per_query.iter().map(|(q, m)| (q.clone(), m.ndcg)).collect();
    lines.push(with_ci("ndcg@10".into(), &ndcg)?);

    let gold: BTreeMap<String, Vec<_>> =
        corpus.queries().iter().map(|q| (q.query_id.clone(), q.gold_spans.clone())).collect();
    if !corpus.segments().is_empty() && gold.values().any(|g| !g.is_empty()) {
        let spans = span_lookup(&corpus);
        for k in [1usize, 5] {
            let hits = temporal_hits(&runs, &spans, &gold, k, args.iou);
            let s = hits.into_iter().map(|(q, h)| (q, if h { 1.0 } else { 0.0 })).collect();
            lines.push(with_ci(format!("temporal_recall@{k}_iou{}", args.iou), &s)?);
        }
    }

    let evaluated: Vec<(String, f64)> = corpus
        .queries()
        .iter()
        .filter(|q| ndcg.contains_key(&q.query_id))
        .map(|q| (q.query_id.clone(), q.wer))
        .collect();
    if evaluated.len() >= 4 {
        for (b, ids) in wer_bins(&evaluated).iter().enumerate() {
            let s: BTreeMap<String, f64> = ids.iter().map(|q| (q.clone(), ndcg[q])).collect();
            lines.push(MetricLine::new(format!("ndcg@10_wer_q{}", b + 1), mean(&s), None));
        }
    }

    if let Some(p) = &args.answers {
        let answers: Vec<AnswerLine> = read_jsonl_file(p)?;
        let run_of: HashMap<&str, &ScoredList> = runs.iter().map(|l| (l.query_id.as_str(), l)).collect();
        let (mut em, mut f1, mut faith) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for a in &answers {
            let q = corpus.queries().iter().find(|q| q.query_id == a.query_id);
            if let Some(r) = q.and_then(|q| q.reference_answer.as_ref()) {
                let m = answer_metrics(&a.answer, r)?;
                em.insert(a.query_id.clone(), m.exact_match);
                f1.insert(a.query_id.clone(), m.f1);
            }
            let evidence: Vec<&str> = run_of
                .get(a.query_id.as_str())
                .map(|l| l.top(3).iter().filter_map(|e| corpus.segment(&e.segment_id)).map(|s| s.asr_text.as_str()).collect())
                .unwrap_or_default();
            if !evidence.is_empty() && !a.answer.trim().is_empty() {
                faith.insert(a.query_id.clone(), faithfulness_score(&a.answer, &evidence)?.score);
            }
        }
        lines.push(with_ci("answer_em".into(), &em)?);
        lines.push(with_ci("answer_f1".into(), &f1)?);
        lines.push(with_ci("faithfulness".into(), &faith)?);
    }

    if let Some(p) = &args.labels {
        let labels: Vec<LabelRecord> = read_jsonl_file(p)?;
        let a: Vec<_> = labels.iter().map(|l| l.rater_a).collect();
        let b: Vec<_> = labels.iter().map(|l| l.rater_b).collect();
        lines.push(MetricLine::new("cohen_kappa", cohen_kappa(&a, &b)?, None));
        if let Some(h) = hallucination_rate(&labels) {
            lines.push(MetricLine::new("hallucination_rate", h, None));
        }
    }

    print!("{}", format_table(&lines));
    if !report.excluded.is_empty() {
        eprintln!("excluded queries: {}", report.excluded.join(", "));
    }
    if let Some(out) = &args.out {
        let mut w = create(out)?;
        write_metric_lines(&mut w, &lines)?;
        w.flush()?;
    }
    emit_snapshot(cfg, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    score: f64,
    label: u8,
}

fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<bool>)> {
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::InvalidInput(format!("{name}: {e}")))?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in rdr.deserialize::<ScoreRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse { source_name: name.clone(), line: i + 2, message: e.to_string() })?;
        if row.label > 1 {
            return Err(Error::Parse { source_name: name.clone(), line: i + 2, message: "label must be 0 or 1".into() });
        }
        scores.push(row.score);
        labels.push(row.label == 1);
    }
    Ok((scores, labels))
}

fn calibrate_cmd(ctx: &Ctx, args: &CalibrateArgs) -> Result<ExitCode> {
    let (ds, dl) = read_scores(&args.dev)?;
    let (ts, tl) = read_scores(&args.test)?;
    let r = calibrate((&ds, &dl), (&ts, &tl))?;
    let mut lines = vec![
        MetricLine::new("platt_a", r.model.a, None),
        MetricLine::new("platt_b", r.model.b, None),
        MetricLine::new("brier", r.brier, None),
    ];
    if let (Some(s), Some(i)) = (r.slope, r.intercept) {
        lines.push(MetricLine::new("reliability_slope", s, None));
        lines.push(MetricLine::new("reliability_intercept", i, None));
    }
    print!("{}", format_table(&lines));
    println!("\n{:>5} {:>5} {:>6} {:>9} {:>9}", "lo", "hi", "count", "mean_pred", "observed");
    for b in &r.bins {
        println!("{:>5.2} {:>5.2} {:>6} {:>9.4} {:>9.4}", b.lo, b.hi, b.count, b.mean_predicted, b.observed_rate);
    }
    if let Some(out) = &args.out {
        let mut w = create(out)?;
        write_metric_lines(&mut w, &lines)?;
        w.flush()?;
    }
    emit_snapshot(&ctx.cfg, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn bench(ctx: &Ctx, args: &BenchArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let mc = MeasureConfig { warmup: cfg.bench.warmup, concurrent: cfg.bench.concurrent };
    let corpus = load_corpus(cfg, None)?;
    let timings = match &args.stub_ms {
        Some(ms) => {
            let stages = SleepStages::from_millis(*ms);
            let ids: Vec<String> = if corpus.queries().is_empty() {
                (1..=args.n_queries).map(|i| format!("q{i:04}")).collect()
            } else {
                corpus.queries().iter().map(|q| q.query_id.clone()).collect()
            };
            measure(&stages, &ids, &mc)?
        }
        None => {
            require_segments(&corpus)?;
            if corpus.queries().is_empty() {
                return Err(missing("--queries"));
            }
            let mut s = settings(ctx);
            s.generate_delay = Duration::from_millis(args.generate_ms);
            let pipeline = Pipeline::toy(&corpus, cfg, s)?;
            measure(&pipeline, &pipeline.query_ids(), &mc)?
        }
    };
    let mut w = create(&args.out)?;
    write_raw_log(&mut w, &timings)?;
    w.flush()?;
    // Summaries are computed from the saved log so they reproduce exactly.
    let saved = read_raw_log(File::open(&args.out)?)?;
    let s = summarize(&saved)?;
    for (name, m) in STAGES.iter().zip(s.stage_medians_ms) {
        println!("{name:<10} median {m:>10.3} ms");
    }
    println!(
        "end-to-end median {:.3} ms  p5 {:.3}  p95 {:.3}  (n={})",
        s.end_to_end_median_ms, s.end_to_end_p5_ms, s.end_to_end_p95_ms, s.count
    );
    println!("additivity gap {:+.3} ms", s.additivity_gap_ms);
    emit_snapshot(cfg, Some(&args.out))?;
    Ok(ExitCode::SUCCESS)
}

fn selfcheck(ctx: &Ctx) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let corpus = if cfg.paths.segments.is_some() || cfg.paths.videos.is_some() {
        load_corpus(cfg, None)?
    } else {
        fixture_corpus()?
    };
    let report = run_selfcheck(&corpus, cfg)?;
    print!("{}", report.render());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
