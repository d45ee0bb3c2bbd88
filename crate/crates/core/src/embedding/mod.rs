//! Document embedding store and the `EMB1` interchange format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "EMB1" | u32 dim | repeated { u16 id_len | id (UTF-8) | dim × f32 }
//! ```
//!
//! Records are written in ascending id order. Vectors are stored exactly as
//! the extractor produced them; normalization happens when they are scored.

use std::collections::BTreeMap;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const DEFAULT_DIM: usize = 768;

/// Provenance sidecar written next to a store as `<store>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub extractor_version: String,
    pub model_identifier: String,
    pub truncation_length: u32,
    pub pooling: String,
    pub created: String,
    #[serde(default)]
    pub skipped_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
    pub manifest: Option<StoreManifest>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            vectors: BTreeMap::new(),
            manifest: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, values: Vec<f32>) -> Result<()> {
        let id = id.into();
        if values.len() != self.dim {
            return Err(Error::DimMismatch {
                id,
                expected: self.dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVector(id));
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidStore(format!("id of {} bytes exceeds u16 length prefix", id.len())));
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.vectors.insert(id, values);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

pub fn manifest_path(store_path: &Path) -> PathBuf {
    let mut s = store_path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_store_to<W: Write>(store: &VectorStore, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(store.dim as u32).to_le_bytes())?;
    for (id, values) in &store.vectors {
        w.write_all(&(id.len() as u16).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

/// Writes the store (and its manifest sidecar, if any) to `path`.
pub fn write_store(store: &VectorStore, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + store.len() * (store.dim * 4 + 16));
    write_store_to(store, &mut buf).map_err(|e| Error::io(path, e))?;
    crate::util::write_atomic(path, &buf)?;
    if let Some(m) = &store.manifest {
        let text = serde_json::to_vec_pretty(m)?;
        crate::util::write_atomic(&manifest_path(path), &text)?;
    }
    Ok(())
}

/// Fills `buf` completely, returning `false` on a clean EOF before the first byte.
fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8], offset: &mut u64) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(Error::TruncatedFile { offset: *offset + filled as u64 }),
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("<vector store>", e)),
        }
    }
    *offset += buf.len() as u64;
    Ok(true)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: &mut u64) -> Result<()> {
    if read_exact_or_eof(r, buf, offset)? {
        Ok(())
    } else {
        Err(Error::TruncatedFile { offset: *offset })
    }
}

pub fn read_store_from<R: Read>(mut r: R) -> Result<VectorStore> {
    let mut offset = 0u64;
    let mut magic = [0u8; 4];
    if !read_exact_or_eof(&mut r, &mut magic, &mut offset)? || &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut dim_bytes = [0u8; 4];
    read_exact(&mut r, &mut dim_bytes, &mut offset)?;
    let dim = u32::from_le_bytes(dim_bytes) as usize;
    if dim == 0 {
        return Err(Error::InvalidStore("dimension 0".into()));
    }
    let mut store = VectorStore::new(dim);
    let mut raw = vec![0u8; dim * 4];
    loop {
        let mut len_bytes = [0u8; 2];
        if !read_exact_or_eof(&mut r, &mut len_bytes, &mut offset)? {
            break;
        }
        let mut id = vec![0u8; u16::from_le_bytes(len_bytes) as usize];
        read_exact(&mut r, &mut id, &mut offset)?;
        let id = String::from_utf8(id).map_err(|_| Error::InvalidStore(format!("non-UTF-8 id before byte {offset}")))?;
        read_exact(&mut r, &mut raw, &mut offset)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        store.insert(id, values)?;
    }
    Ok(store)
}

/// Reads a store; a manifest sidecar is attached when present.
pub fn read_store(path: &Path) -> Result<VectorStore> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut store = read_store_from(BufReader::new(f))?;
    let mp = manifest_path(path);
    if mp.exists() {
        let text = std::fs::read(&mp).map_err(|e| Error::io(&mp, e))?;
        store.manifest = Some(serde_json::from_slice(&text)?);
    }
    Ok(store)
}

/// Streams records without building a map. Used for stores too large to hold.
pub fn for_each_record<R: Read>(r: R, mut f: impl FnMut(&str, &[f32]) -> Result<()>) -> Result<usize> {
    let mut r = BufReader::new(r);
    let mut offset = 0u64;
    let mut magic = [0u8; 4];
    if !read_exact_or_eof(&mut r, &mut magic, &mut offset)? || &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut dim_bytes = [0u8; 4];
    read_exact(&mut r, &mut dim_bytes, &mut offset)?;
    let dim = u32::from_le_bytes(dim_bytes) as usize;
    let mut raw = vec![0u8; dim * 4];
    let mut vals = vec![0f32; dim];
    let mut n = 0;
    loop {
        let mut len_bytes = [0u8; 2];
        if !read_exact_or_eof(&mut r, &mut len_bytes, &mut offset)? {
            return Ok(n);
        }
        let mut id = vec![0u8; u16::from_le_bytes(len_bytes) as usize];
        read_exact(&mut r, &mut id, &mut offset)?;
        let id = String::from_utf8(id).map_err(|_| Error::InvalidStore("non-UTF-8 id".into()))?;
        read_exact(&mut r, &mut raw, &mut offset)?;
        for (v, c) in vals.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        f(&id, &vals)?;
        n += 1;
    }
}

/// Unit-length copy of `v` in 64-bit.
pub fn l2_normalize<T: Copy + Into<f64>>(v: &[T]) -> Result<Vec<f64>> {
    let x: Vec<f64> = v.iter().map(|&a| a.into()).collect();
    if x.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFiniteVector(String::new()));
    }
    // Scale by the max magnitude first so tiny or huge inputs do not under/overflow.
    let scale = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    let norm = x.iter().map(|a| (a / scale).powi(2)).sum::<f64>().sqrt() * scale;
    Ok(x.into_iter().map(|a| a / norm).collect())
}
