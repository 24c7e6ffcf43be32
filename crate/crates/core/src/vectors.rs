//! `.cfv` dense vector blocks with an `.ids` sidecar.
//!
//! Layout: magic `CFV1`, `u32` dim, `u64` count, then `count * dim` little-endian
//! `f32` values row-major. The sidecar `<path>.ids` holds one id per line.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const CFV_MAGIC: &[u8; 4] = b"CFV1";

/// Embedding rows keyed by string id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorBlock {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl VectorBlock {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("vector dim must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::shape("vector block", format!("{}x{dim}", ids.len()), data.len()));
        }
        Ok(VectorBlock { dim, ids, data })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f32>]) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::shape("vector ids", rows.len(), ids.len()));
        }
        let m = Matrix::from_rows(rows)?;
        VectorBlock::new(m.cols(), ids, m.into_data())
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    /// Id to row position. Later duplicates shadow earlier ones.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Rows whose id is `<key>#<n>` grouped by `key`, ordered by `n`.
    /// Used for per-segment token and frame embeddings.
    pub fn grouped(&self) -> Result<HashMap<String, Matrix>> {
        let mut groups: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (row, id) in self.ids.iter().enumerate() {
            let (key, n) = id
                .rsplit_once('#')
                .and_then(|(k, n)| n.parse::<usize>().ok().map(|n| (k, n)))
                .ok_or_else(|| Error::InvalidInput(format!("row id `{id}` is not of the form key#n")))?;
            groups.entry(key.to_string()).or_default().push((n, row));
        }
        groups
            .into_iter()
            .map(|(k, mut rows)| {
                rows.sort_unstable();
                let data = rows.iter().flat_map(|&(_, r)| self.row(r).iter().copied()).collect();
                Ok((k, Matrix::from_vec(rows.len(), self.dim, data)?))
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CFV_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R, ids: Vec<String>) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CFV_MAGIC {
            return Err(Error::Format(format!("expected CFV1 magic, got {magic:?}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        if count != ids.len() {
            return Err(Error::Format(format!("header says {count} rows but sidecar has {} ids", ids.len())));
        }
        let data = read_f32s(&mut r, count * dim)?;
        VectorBlock::new(dim, ids, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        write_ids(&ids_path(path), &self.ids)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ids = read_ids(&ids_path(path))?;
        VectorBlock::read_from(BufReader::new(File::open(path)?), ids)
    }
}

/// Sidecar path: `<path>.ids`.
pub fn ids_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

pub(crate) fn write_ids(path: &Path, ids: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for id in ids {
        if id.contains('\n') {
            return Err(Error::InvalidInput(format!("id {id:?} contains a newline")));
        }
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_ids(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(str::to_string).collect())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated payload, expected {n} floats")),
        _ => Error::Io(e),
    })?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}
