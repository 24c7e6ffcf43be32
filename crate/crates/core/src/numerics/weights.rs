//! `.cfw` weight bundles.
//!
//! Layout: magic `CFW1`, `u32` tensor count, then per tensor a `u16` name
//! length, the UTF-8 name, a `u8` rank, `rank` `u32` dims and the
//! little-endian `f32` payload. Tensors keep file order so a load/save cycle
//! is byte-identical.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::vectors::{read_f32s, read_u32};

pub const CFW_MAGIC: &[u8; 4] = b"CFW1";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().map(|&d| d as usize).product();
        if n != data.len() {
            return Err(Error::shape("tensor", format!("{dims:?}"), format!("{} values", data.len())));
        }
        Ok(Tensor { dims, data })
    }

    pub fn vector(data: Vec<f32>) -> Self {
        Tensor { dims: vec![data.len() as u32], data }
    }

    pub fn matrix(m: &Matrix) -> Self {
        Tensor { dims: vec![m.rows() as u32, m.cols() as u32], data: m.data().to_vec() }
    }
}

/// Named tensors in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightBundle {
    names: Vec<String>,
    tensors: HashMap<String, Tensor>,
}

impl WeightBundle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a tensor; replacement keeps the original position.
    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        let name = name.into();
        if self.tensors.insert(name.clone(), t).is_none() {
            self.names.push(name);
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors.get(name).ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors.get_mut(name).ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn matrix(&self, name: &str, rows: Option<usize>, cols: Option<usize>) -> Result<Matrix> {
        let t = self.get(name)?;
        if t.dims.len() != 2 {
            return Err(Error::shape(name, "rank 2", format!("rank {}", t.dims.len())));
        }
        let (r, c) = (t.dims[0] as usize, t.dims[1] as usize);
        if rows.is_some_and(|x| x != r) || cols.is_some_and(|x| x != c) {
            let want = |o: Option<usize>| o.map_or("*".to_string(), |v| v.to_string());
            return Err(Error::shape(name, format!("{}x{}", want(rows), want(cols)), format!("{r}x{c}")));
        }
        Matrix::from_vec(r, c, t.data.clone())
    }

    pub fn vector(&self, name: &str, len: usize) -> Result<Vec<f32>> {
        let t = self.get(name)?;
        if t.dims.len() != 1 || t.data.len() != len {
            return Err(Error::shape(name, format!("[{len}]"), format!("{:?}", t.dims)));
        }
        Ok(t.data.clone())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CFW_MAGIC)?;
        w.write_all(&(self.names.len() as u32).to_le_bytes())?;
        for name in &self.names {
            let t = &self.tensors[name];
            let nb = name.as_bytes();
            let len = u16::try_from(nb.len()).map_err(|_| Error::Format(format!("tensor name too long: {name}")))?;
            let rank = u8::try_from(t.dims.len()).map_err(|_| Error::Format(format!("rank too high: {name}")))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(nb)?;
            w.write_all(&[rank])?;
            for d in &t.dims {
                w.write_all(&d.to_le_bytes())?;
            }
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CFW_MAGIC {
            return Err(Error::Format(format!("expected CFW1 magic, got {magic:?}")));
        }
        let count = read_u32(&mut r)?;
        let mut out = WeightBundle::new();
        for _ in 0..count {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2)?;
            let mut name = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
            let mut rank = [0u8; 1];
            r.read_exact(&mut rank)?;
            let dims = (0..rank[0]).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
            let n: usize = dims.iter().map(|&d| d as usize).product();
            let data = read_f32s(&mut r, n)?;
            if out.contains(&name) {
                return Err(Error::DuplicateKey(name));
            }
            out.insert(name, Tensor { dims, data });
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        WeightBundle::read_from(BufReader::new(File::open(path)?))
    }
}

/// Sizes for a freshly initialized bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub model: usize,
    pub vision: usize,
    pub ff_hidden: usize,
    pub fusion_layers: usize,
    pub rerank_layers: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims { model: 768, vision: 512, ff_hidden: 256, fusion_layers: 2, rerank_layers: 2 }
    }
}

struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    fn uniform(&mut self, rows: usize, cols: usize) -> Tensor {
        let bound = 1.0 / (cols as f32).sqrt();
        let data = (0..rows * cols).map(|_| self.rng.gen_range(-bound..bound)).collect();
        Tensor { dims: vec![rows as u32, cols as u32], data }
    }

    fn small(&mut self, n: usize) -> Tensor {
        Tensor::vector((0..n).map(|_| self.rng.gen_range(-0.05..0.05)).collect())
    }
}

fn add_block(b: &mut WeightBundle, init: &mut Init, prefix: &str, d: usize, hidden: usize) {
    for ln in ["ln_q", "ln_kv", "ln_ff"] {
        b.insert(format!("{prefix}.{ln}.gamma"), Tensor::vector(vec![1.0; d]));
        b.insert(format!("{prefix}.{ln}.beta"), Tensor::vector(vec![0.0; d]));
    }
    for p in ["q", "k", "v", "o"] {
        b.insert(format!("{prefix}.attn.w{p}"), init.uniform(d, d));
        b.insert(format!("{prefix}.attn.b{p}"), init.small(d));
    }
    b.insert(format!("{prefix}.ff.w1"), init.uniform(hidden, d));
    b.insert(format!("{prefix}.ff.b1"), init.small(hidden));
    b.insert(format!("{prefix}.ff.w2"), init.uniform(d, hidden));
    b.insert(format!("{prefix}.ff.b2"), init.small(d));
}

impl WeightBundle {
    /// Seeded random bundle holding every tensor the models read.
    pub fn random(seed: u64, dims: ModelDims) -> Self {
        let mut init = Init { rng: ChaCha8Rng::seed_from_u64(seed) };
        let (d, h) = (dims.model, dims.ff_hidden);
        let mut b = WeightBundle::new();
        b.insert("proj.weight", init.uniform(d, dims.vision));
        b.insert("proj.bias", init.small(d));
        for l in 0..dims.fusion_layers {
            add_block(&mut b, &mut init, &format!("fusion.{l}"), d, h);
        }
        b.insert("fusion.pool", init.small(d));
        b.insert("gate.w1", init.uniform(h, 2 * d));
        b.insert("gate.b1", init.small(h));
        b.insert("gate.w2", init.uniform(d, h));
        b.insert("gate.b2", init.small(d));
        for l in 0..dims.rerank_layers {
            add_block(&mut b, &mut init, &format!("rerank.{l}"), d, h);
        }
        b.insert("rerank.head.weight", init.small(d));
        b.insert("rerank.head.bias", Tensor::vector(vec![0.0]));
        b
    }
}
