//! Course-stratified percentile bootstrap.
//!
//! Replicate `r` draws from its own ChaCha stream `(seed, r)`, so results are
//! identical for any thread count.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: 10_000, level: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
}

/// Nearest-rank quantile of sorted data, `q` in `(0, 1]`.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn strata(scores: &BTreeMap<String, f64>, course_of: &HashMap<String, String>) -> Result<Vec<Vec<f64>>> {
    let mut by_course: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (q, &s) in scores {
        let c = course_of
            .get(q)
            .ok_or_else(|| Error::Integrity { kind: "course for query", ids: vec![q.clone()] })?;
        if !s.is_finite() {
            return Err(Error::NumericInput(format!("score of `{q}`")));
        }
        by_course.entry(c.as_str()).or_default().push(s);
    }
    if by_course.is_empty() {
        return Err(Error::Degenerate("empty stratum: no scored queries".into()));
    }
    Ok(by_course.into_values().collect())
}

fn replicate_mean(strata: &[Vec<f64>], total: usize, seed: u64, r: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let mut sum = 0.0;
    for s in strata {
        for _ in 0..s.len() {
            sum += s[rng.gen_range(0..s.len())];
        }
    }
    sum / total as f64
}

/// Sorted replicate means.
pub fn bootstrap_replicates(
    scores: &BTreeMap<String, f64>,
    course_of: &HashMap<String, String>,
    cfg: &BootstrapConfig,
    exec: Exec,
) -> Result<Vec<f64>> {
    let strata = strata(scores, course_of)?;
    let total = scores.len();
    let mut reps = exec.map_range(cfg.replicates, |r| replicate_mean(&strata, total, cfg.seed, r));
    reps.sort_by(f64::total_cmp);
    Ok(reps)
}

pub fn bootstrap_ci(
    scores: &BTreeMap<String, f64>,
    course_of: &HashMap<String, String>,
    cfg: &BootstrapConfig,
    exec: Exec,
) -> Result<BootstrapCi> {
    if cfg.replicates == 0 || !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs replicates > 0 and level in (0, 1), got {} / {}",
            cfg.replicates, cfg.level
        )));
    }
    let reps = bootstrap_replicates(scores, course_of, cfg, exec)?;
    let mean = scores.values().sum::<f64>() / scores.len() as f64;
    let tail = (1.0 - cfg.level) / 2.0;
    let lo = nearest_rank(&reps, tail);
    let hi = nearest_rank(&reps, 1.0 - tail);
    Ok(BootstrapCi { mean, lo, hi, half_width: (hi - lo) / 2.0 })
}

/// Averages per-query scores across seeds before bootstrapping. Queries
/// missing from any seed are dropped.
pub fn average_over_seeds(per_seed: &[BTreeMap<String, f64>]) -> BTreeMap<String, f64> {
    let Some(first) = per_seed.first() else { return BTreeMap::new() };
    first
        .keys()
        .filter_map(|q| {
            let vals: Option<Vec<f64>> = per_seed.iter().map(|m| m.get(q).copied()).collect();
            vals.map(|v| (q.clone(), v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect()
}
