//! Precomputed vector files.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic         8 bytes  "ONTOVEC\n"
//! format        u32
//! dim           u32
//! count         u64
//! meta_len      u32      length of the JSON provenance block (may be 0)
//! meta          meta_len bytes
//! count records:
//!   id_len      u16
//!   id          id_len bytes, UTF-8
//!   values      dim x f32
//! ```
//!
//! The textual variant is newline-delimited JSON: a header line
//! `{"format_version", "dim", "count", "meta"}` followed by one
//! `{"sample_id", "vector"}` object per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

pub const STORE_FORMAT_VERSION: u32 = 1;
pub const MAGIC: &[u8; 8] = b"ONTOVEC\n";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<String>,
    values: Vec<f32>,
    index: HashMap<String, usize>,
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct TextHeader {
    format_version: u32,
    dim: usize,
    count: usize,
    #[serde(default)]
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct TextRecord {
    sample_id: String,
    vector: Vec<f32>,
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated vector store: {e}")))?;
    Ok(buf)
}

impl VectorStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        Ok(VectorStore {
            dim,
            ..VectorStore::default()
        })
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

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }

    pub fn set_meta(&mut self, meta: serde_json::Value) {
        self.meta = Some(meta);
    }

    /// Adds a vector stored at single precision. Ids must be unique.
    pub fn insert(&mut self, sample_id: &str, values: &[f64]) -> Result<()> {
        let values: Vec<f32> = values.iter().map(|&v| v as f32).collect();
        self.insert_f32(sample_id, &values)
    }

    pub fn insert_f32(&mut self, sample_id: &str, values: &[f32]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
                context: Some(format!("sample {sample_id}")),
            });
        }
        if sample_id.len() > u16::MAX as usize {
            return Err(Error::InvalidInput("sample id longer than 65535 bytes".into()));
        }
        if self.index.contains_key(sample_id) {
            return Err(Error::InvalidInput(format!("duplicate sample id {sample_id}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {sample_id} component {i} is not finite"
            )));
        }
        self.index.insert(sample_id.to_string(), self.ids.len());
        self.ids.push(sample_id.to_string());
        self.values.extend_from_slice(values);
        Ok(())
    }

    pub fn get_f32(&self, sample_id: &str) -> Option<&[f32]> {
        self.index
            .get(sample_id)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn get(&self, sample_id: &str) -> Option<EmbeddingVector> {
        self.get_f32(sample_id).map(|v| {
            EmbeddingVector::new(v.iter().map(|&x| f64::from(x)).collect())
                .expect("stored values are finite")
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), &self.values[i * self.dim..(i + 1) * self.dim]))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&STORE_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        let meta = match &self.meta {
            Some(m) => serde_json::to_vec(m)?,
            None => Vec::new(),
        };
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(&meta)?;
        for (id, values) in self.iter() {
            w.write_all(&(id.len() as u16).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let magic: [u8; 8] = read_exact(&mut r)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a binary vector store".into()));
        }
        let version = u32::from_le_bytes(read_exact(&mut r)?);
        if version != STORE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "vector store format version {version}, expected {STORE_FORMAT_VERSION}"
            )));
        }
        let dim = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let count = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        let meta_len = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut store = VectorStore::new(dim)?;
        if meta_len > 0 {
            let mut meta = vec![0u8; meta_len];
            r.read_exact(&mut meta)
                .map_err(|e| Error::Format(format!("truncated vector store: {e}")))?;
            store.meta = Some(serde_json::from_slice(&meta)?);
        }
        let mut values = vec![0f32; dim];
        for _ in 0..count {
            let id_len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id)
                .map_err(|e| Error::Format(format!("truncated vector store: {e}")))?;
            let id = String::from_utf8(id)
                .map_err(|_| Error::Format("sample id is not UTF-8".into()))?;
            for v in values.iter_mut() {
                *v = f32::from_le_bytes(read_exact(&mut r)?);
            }
            store.insert_f32(&id, &values)?;
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after vector store records".into()));
        }
        Ok(store)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let header = TextHeader {
            format_version: STORE_FORMAT_VERSION,
            dim: self.dim,
            count: self.len(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (id, values) in self.iter() {
            let record = TextRecord {
                sample_id: id.to_string(),
                vector: values.to_vec(),
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: TextHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Format("empty vector store".into())),
        };
        if header.format_version != STORE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "vector store format version {}, expected {STORE_FORMAT_VERSION}",
                header.format_version
            )));
        }
        let mut store = VectorStore::new(header.dim)?;
        store.meta = header.meta;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: TextRecord = serde_json::from_str(&line)?;
            store.insert_f32(&record.sample_id, &record.vector)?;
        }
        if store.len() != header.count {
            return Err(Error::Format(format!(
                "vector store header declares {} records, found {}",
                header.count,
                store.len()
            )));
        }
        Ok(store)
    }

    /// Reads either variant, detected from the leading magic bytes.
    pub fn read_path(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let head = reader.fill_buf()?;
        if head.starts_with(MAGIC) {
            VectorStore::read_binary(reader)
        } else {
            VectorStore::read_text(reader)
        }
    }

    /// Writes the textual variant when the path ends in `.jsonl`, binary
    /// otherwise.
    pub fn write_path(&self, path: &Path) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        if path.extension().is_some_and(|e| e == "jsonl") {
            self.write_text(w)
        } else {
            self.write_binary(w)
        }
    }
}

/// Exact stored vectors for `sample_ids`, in request order.
pub fn vector_store_lookup(sample_ids: &[String], store: &VectorStore) -> Result<Vec<EmbeddingVector>> {
    sample_ids
        .iter()
        .map(|id| store.get(id).ok_or_else(|| Error::UnknownSampleId(id.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_lookup_and_unknown_id() {
        let mut store = VectorStore::new(2).unwrap();
        store.insert("h1", &[0.5, -1.0]).unwrap();
        let out = vector_store_lookup(&["h1".into()], &store).unwrap();
        assert_eq!(out[0].as_slice(), &[0.5, -1.0]);
        let err = vector_store_lookup(&["nope".into()], &store).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn rejects_duplicates_and_wrong_dim() {
        let mut store = VectorStore::new(2).unwrap();
        store.insert("a", &[1.0, 2.0]).unwrap();
        assert!(store.insert("a", &[1.0, 2.0]).is_err());
        assert!(store.insert("b", &[1.0]).is_err());
    }

    #[test]
    fn bad_magic_and_version() {
        assert!(VectorStore::read_binary(&b"NOTASTORE......."[..]).is_err());
        let mut bytes = Vec::new();
        VectorStore::new(1).unwrap().write_binary(&mut bytes).unwrap();
        bytes[8] = 9;
        assert!(matches!(VectorStore::read_binary(&bytes[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn binary_and_text_round_trip_bitwise(
            dim in 1usize..12,
            raw in prop::collection::vec(prop::num::f32::NORMAL | prop::num::f32::ZERO, 0..120),
        ) {
            let mut store = VectorStore::new(dim).unwrap();
            for (i, chunk) in raw.chunks_exact(dim).enumerate() {
                store.insert_f32(&format!("id{i}"), chunk).unwrap();
            }
            store.set_meta(serde_json::json!({"command": "test"}));
            let mut bin = Vec::new();
            store.write_binary(&mut bin).unwrap();
            let back = VectorStore::read_binary(&bin[..]).unwrap();
            prop_assert_eq!(back.len(), store.len());
            for ((a, va), (b, vb)) in store.iter().zip(back.iter()) {
                prop_assert_eq!(a, b);
                let bits_a: Vec<u32> = va.iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u32> = vb.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(bits_a, bits_b);
            }
            let mut text = Vec::new();
            store.write_text(&mut text).unwrap();
            let back = VectorStore::read_text(&text[..]).unwrap();
            prop_assert_eq!(&back, &store);
        }
    }
}
