use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::l2_normalize;
use crate::par::Exec;
use crate::retrieval::scored::{rank_order, ScoredEntry, ScoredList};
use crate::tensor::dot;
use crate::vectors::{ids_path, read_f32s, read_ids, read_u32, read_u64, write_ids, VectorBlock};

pub const CFI_MAGIC: &[u8; 4] = b"CFI1";

/// Exact inner-product index over L2-normalized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatIndex {
    dim: usize,
    ids: Vec<String>,
    matrix: Vec<f32>,
}

impl FlatIndex {
    /// Normalizes every row. Zero rows and duplicate ids are rejected.
    pub fn build(vectors: &VectorBlock) -> Result<Self> {
        let mut seen = HashSet::with_capacity(vectors.len());
        let mut matrix = Vec::with_capacity(vectors.data().len());
        for (id, row) in vectors.rows() {
            if !seen.insert(id) {
                return Err(Error::DuplicateKey(id.to_string()));
            }
            let unit = l2_normalize(row).map_err(|e| match e {
                Error::Degenerate(_) => Error::Degenerate(format!("zero vector for `{id}`")),
                other => other,
            })?;
            matrix.extend(unit);
        }
        Ok(FlatIndex { dim: vectors.dim(), ids: vectors.ids().to_vec(), matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact top-`k` by cosine, ties broken by ascending id.
    pub fn search(&self, query_id: &str, q: &[f32], k: usize) -> Result<ScoredList> {
        if q.len() != self.dim {
            return Err(Error::shape("query vector", self.dim, q.len()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let q = l2_normalize(q)?;
        let mut scored: Vec<(f32, usize)> =
            self.matrix.chunks_exact(self.dim).map(|r| dot(r, &q)).zip(0..).collect();
        let cmp = |a: &(f32, usize), b: &(f32, usize)| rank_order(a.0 as f64, &self.ids[a.1], b.0 as f64, &self.ids[b.1]);
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        let entries = scored.into_iter().map(|(s, i)| ScoredEntry::new(self.ids[i].clone(), s as f64)).collect();
        ScoredList::from_ranked(query_id, entries)
    }

    /// One search per query; order and results are independent of `exec`.
    pub fn search_batch(&self, queries: &[(String, Vec<f32>)], k: usize, exec: Exec) -> Result<Vec<ScoredList>> {
        exec.try_map(queries, |(id, q)| self.search(id, q, k))
    }

    pub fn to_vectors(&self) -> VectorBlock {
        VectorBlock::new(self.dim, self.ids.clone(), self.matrix.clone()).expect("index shape is consistent")
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CFI_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for v in &self.matrix {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a persisted index. Rows are trusted to be normalized already.
    pub fn read_from<R: Read>(mut r: R, ids: Vec<String>) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CFI_MAGIC {
            return Err(Error::Format(format!("expected CFI1 magic, got {magic:?}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        if count != ids.len() {
            return Err(Error::Format(format!("header says {count} rows but sidecar has {} ids", ids.len())));
        }
        let matrix = read_f32s(&mut r, dim * count)?;
        Ok(FlatIndex { dim, ids, matrix })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        write_ids(&ids_path(path), &self.ids)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ids = read_ids(&ids_path(path))?;
        FlatIndex::read_from(BufReader::new(File::open(path)?), ids)
    }
}
