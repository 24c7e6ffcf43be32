//! Per-stage latency measurement.
//!
//! Each query runs retrieval, rerank, diversify and generate in order. Every
//! stage has its own timer and an independent outer timer brackets the
//! whole query. Summaries use nearest-rank percentiles, and stage medians
//! are taken independently, so they need not add up to the end-to-end median.

use std::io::{Read, Write};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::nearest_rank;
use crate::par::Exec;

pub const STAGES: [&str; 4] = ["retrieval", "rerank", "diversify", "generate"];

/// One row of the raw timing log, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub query_id: String,
    pub retrieval_ms: f64,
    pub rerank_ms: f64,
    pub diversify_ms: f64,
    pub generate_ms: f64,
    pub end_to_end_ms: f64,
}

impl StageTiming {
    pub fn stages(&self) -> [f64; 4] {
        [self.retrieval_ms, self.rerank_ms, self.diversify_ms, self.generate_ms]
    }
}

/// A pipeline split into timed stages. `retrieve` creates the per-query
/// state the later stages consume.
pub trait Stages: Sync {
    type State: Send;

    fn retrieve(&self, query: usize) -> Result<Self::State>;
    fn rerank(&self, state: &mut Self::State) -> Result<()>;
    fn diversify(&self, state: &mut Self::State) -> Result<()>;
    fn generate(&self, state: &mut Self::State) -> Result<()>;
}

/// Stages that only sleep. All-zero durations give a zero-work pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct SleepStages {
    pub durations: [Duration; 4],
}

impl SleepStages {
    pub fn from_millis(ms: [u64; 4]) -> Self {
        SleepStages { durations: ms.map(Duration::from_millis) }
    }

    fn nap(d: Duration) {
        if !d.is_zero() {
            thread::sleep(d);
        }
    }
}

impl Stages for SleepStages {
    type State = ();

    fn retrieve(&self, _: usize) -> Result<()> {
        Self::nap(self.durations[0]);
        Ok(())
    }

    fn rerank(&self, _: &mut ()) -> Result<()> {
        Self::nap(self.durations[1]);
        Ok(())
    }

    fn diversify(&self, _: &mut ()) -> Result<()> {
        Self::nap(self.durations[2]);
        Ok(())
    }

    fn generate(&self, _: &mut ()) -> Result<()> {
        Self::nap(self.durations[3]);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureConfig {
    /// Untimed iterations before measurement, cycling through the queries.
    pub warmup: usize,
    /// Run queries concurrently. Stage timings then include contention.
    pub concurrent: bool,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { warmup: 20, concurrent: false }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn time_query<S: Stages>(stages: &S, query: usize, query_id: &str) -> Result<StageTiming> {
    let outer = Instant::now();
    let t = Instant::now();
    let mut state = stages.retrieve(query)?;
    let retrieval = t.elapsed();
    let t = Instant::now();
    stages.rerank(&mut state)?;
    let rerank = t.elapsed();
    let t = Instant::now();
    stages.diversify(&mut state)?;
    let diversify = t.elapsed();
    let t = Instant::now();
    stages.generate(&mut state)?;
    let generate = t.elapsed();
    let end_to_end = outer.elapsed();

    let timing = StageTiming {
        query_id: query_id.to_string(),
        retrieval_ms: ms(retrieval),
        rerank_ms: ms(rerank),
        diversify_ms: ms(diversify),
        generate_ms: ms(generate),
        end_to_end_ms: ms(end_to_end),
    };
    let max_stage = timing.stages().into_iter().fold(0.0, f64::max);
    if timing.end_to_end_ms < max_stage {
        return Err(Error::Clock(format!(
            "query `{query_id}`: outer timer {:.3} ms is shorter than a stage ({max_stage:.3} ms)",
            timing.end_to_end_ms
        )));
    }
    Ok(timing)
}

/// Times every query once after the warmup iterations.
pub fn measure<S: Stages>(stages: &S, query_ids: &[String], cfg: &MeasureConfig) -> Result<Vec<StageTiming>> {
    if !query_ids.is_empty() {
        for i in 0..cfg.warmup {
            time_query(stages, i % query_ids.len(), &query_ids[i % query_ids.len()])?;
        }
    }
    let exec = if cfg.concurrent { Exec::Parallel } else { Exec::Sequential };
    let idx: Vec<usize> = (0..query_ids.len()).collect();
    exec.try_map(&idx, |&i| time_query(stages, i, &query_ids[i]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencySummary {
    pub count: usize,
    /// Medians in [`STAGES`] order.
    pub stage_medians_ms: [f64; 4],
    pub end_to_end_median_ms: f64,
    pub end_to_end_p5_ms: f64,
    pub end_to_end_p95_ms: f64,
    /// End-to-end median minus the sum of stage medians.
    pub additivity_gap_ms: f64,
}

fn sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn summarize(timings: &[StageTiming]) -> Result<LatencySummary> {
    if timings.is_empty() {
        return Err(Error::InvalidInput("no timings to summarize".into()));
    }
    let mut stage_medians_ms = [0.0; 4];
    for (s, m) in stage_medians_ms.iter_mut().enumerate() {
        *m = nearest_rank(&sorted(timings.iter().map(|t| t.stages()[s])), 0.5);
    }
    let e2e = sorted(timings.iter().map(|t| t.end_to_end_ms));
    let end_to_end_median_ms = nearest_rank(&e2e, 0.5);
    Ok(LatencySummary {
        count: timings.len(),
        stage_medians_ms,
        end_to_end_median_ms,
        end_to_end_p5_ms: nearest_rank(&e2e, 0.05),
        end_to_end_p95_ms: nearest_rank(&e2e, 0.95),
        additivity_gap_ms: end_to_end_median_ms - stage_medians_ms.iter().sum::<f64>(),
    })
}

/// Writes the raw log as CSV:
/// `query_id,retrieval_ms,rerank_ms,diversify_ms,generate_ms,end_to_end_ms`.
pub fn write_raw_log<W: Write>(w: W, timings: &[StageTiming]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for t in timings {
        wtr.serialize(t).map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_raw_log<R: Read>(r: R) -> Result<Vec<StageTiming>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse { source_name: "timing log".into(), line: i + 2, message: e.to_string() })
        })
        .collect()
}
