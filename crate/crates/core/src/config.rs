//! Resolved run configuration.
//!
//! Every knob has a default; a serialized [`RunConfig`] is enough to
//! reproduce a run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub segments: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub videos: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub window: f64,
    pub stride: f64,
    pub frames_n: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { window: 20.0, stride: 10.0, frames_n: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Bm25Config { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    pub w: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig { w: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmrConfig {
    pub alpha: f64,
}

impl Default for MmrConfig {
    fn default() -> Self {
        MmrConfig { alpha: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankConfig {
    pub top_m: usize,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig { top_m: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaConfig {
    pub lambda: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig { lambda: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfoNceConfig {
    pub tau: f64,
}

impl Default for InfoNceConfig {
    fn default() -> Self {
        InfoNceConfig { tau: 0.07 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: usize,
    pub level: f64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection { replicates: 10_000, level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub warmup: usize,
    pub concurrent: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { warmup: 20, concurrent: false }
    }
}

/// Dimensions of the deterministic toy embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub model_dim: usize,
    pub vision_dim: usize,
    pub ff_hidden: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { model_dim: 32, vision_dim: 24, ff_hidden: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub segment: SegmentConfig,
    pub retrieval: RetrievalConfig,
    pub bm25: Bm25Config,
    pub hybrid: HybridConfig,
    pub mmr: MmrConfig,
    pub rerank: RerankConfig,
    pub smooth: LambdaConfig,
    pub temporal: LambdaConfig,
    pub infonce: InfoNceConfig,
    pub bootstrap: BootstrapSection,
    pub bench: BenchConfig,
    pub toy: ToyConfig,
    pub seed: u64,
}


fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.to_string()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.segment;
        check(s.window > 0.0 && s.window.is_finite(), "segment.window must be positive")?;
        check(s.stride > 0.0 && s.stride <= s.window, "segment.stride must be in (0, window]")?;
        check(s.frames_n > 0, "segment.frames_n must be positive")?;
        check(self.retrieval.k > 0, "retrieval.k must be positive")?;
        check(self.bm25.k1 >= 0.0 && (0.0..=1.0).contains(&self.bm25.b), "bm25.k1 must be >= 0 and bm25.b in [0, 1]")?;
        check((0.0..=1.0).contains(&self.hybrid.w), "hybrid.w must be in [0, 1]")?;
        check((0.0..=1.0).contains(&self.mmr.alpha), "mmr.alpha must be in [0, 1]")?;
        check(self.rerank.top_m > 0, "rerank.top_m must be positive")?;
        check(self.smooth.lambda >= 0.0 && self.smooth.lambda.is_finite(), "smooth.lambda must be >= 0")?;
        check(self.temporal.lambda >= 0.0 && self.temporal.lambda.is_finite(), "temporal.lambda must be >= 0")?;
        check(self.infonce.tau > 0.0 && self.infonce.tau.is_finite(), "infonce.tau must be positive")?;
        check(self.bootstrap.replicates > 0, "bootstrap.replicates must be positive")?;
        check(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0, "bootstrap.level must be in (0, 1)")?;
        let t = &self.toy;
        check(t.model_dim > 0 && t.model_dim.is_multiple_of(crate::numerics::HEADS), "toy.model_dim must be a positive multiple of 4")?;
        check(t.vision_dim > 0 && t.ff_hidden > 0, "toy dims must be positive")?;
        Ok(())
    }

    /// Pretty JSON snapshot with a trailing newline. Field order is fixed.
    pub fn snapshot(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
