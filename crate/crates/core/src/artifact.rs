//! Self-describing artifact files.
//!
//! Record artifacts are newline-delimited JSON: one header line followed by
//! one record per line. The header names the artifact kind, the producing
//! command, the seeds, the SHA-256 of every input file and of the body.
//! Vector stores carry the same header in their provenance block, with the
//! body digest taken over their records.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::TrainedModel;
use crate::embed::VectorStore;
use crate::error::{Error, Result};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Annotations,
    Paragraphs,
    Vectors,
    Dataset,
    CvResult,
    Model,
    Metrics,
    Comparison,
    Predictions,
    Report,
}

impl ArtifactKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Annotations => "annotations",
            ArtifactKind::Paragraphs => "paragraphs",
            ArtifactKind::Vectors => "vectors",
            ArtifactKind::Dataset => "dataset",
            ArtifactKind::CvResult => "cv_result",
            ArtifactKind::Model => "model",
            ArtifactKind::Metrics => "metrics",
            ArtifactKind::Comparison => "comparison",
            ArtifactKind::Predictions => "predictions",
            ArtifactKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub artifact: ArtifactKind,
    pub command: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<InputDigest>,
    /// Settings of the producing command that shape the output.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
    pub records: usize,
    pub body_sha256: String,
}

impl ArtifactHeader {
    pub fn new(artifact: ArtifactKind, command: &str) -> Self {
        ArtifactHeader {
            format_version: ARTIFACT_FORMAT_VERSION,
            artifact,
            command: command.to_string(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            config: serde_json::Value::Null,
            records: 0,
            body_sha256: String::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    /// Records the digest of an input file.
    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: file_digest(path)?,
        });
        Ok(self)
    }

    pub fn inputs<'a>(mut self, paths: impl IntoIterator<Item = &'a Path>) -> Result<Self> {
        for path in paths {
            self = self.input(path)?;
        }
        Ok(self)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| io_context(e, path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes to a sibling temporary file and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_context(e, parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes).map_err(|e| io_context(e, tmp))?;
    fs::rename(tmp, path).map_err(|e| io_context(e, path))?;
    Ok(())
}

/// Serializes the header and records; fills in the record count and body
/// digest.
pub fn encode_records<T: Serialize>(mut header: ArtifactHeader, records: &[T]) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    for record in records {
        serde_json::to_writer(&mut body, record)?;
        body.push(b'\n');
    }
    header.records = records.len();
    header.body_sha256 = sha256_hex(&body);
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn write_records<T: Serialize>(path: &Path, header: ArtifactHeader, records: &[T]) -> Result<()> {
    write_atomic(path, &encode_records(header, records)?)
}

fn split_header(bytes: &[u8]) -> Result<(ArtifactHeader, &[u8])> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("artifact has no header line".into()))?;
    let header: ArtifactHeader = serde_json::from_slice(&bytes[..end])
        .map_err(|e| Error::Format(format!("artifact header: {e}")))?;
    if header.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "artifact format version {} is not supported (expected {ARTIFACT_FORMAT_VERSION})",
            header.format_version
        )));
    }
    Ok((header, &bytes[end + 1..]))
}

/// Parses an artifact of the expected kind, checking its body digest.
pub fn decode_records<T: DeserializeOwned>(bytes: &[u8], expected: ArtifactKind) -> Result<(ArtifactHeader, Vec<T>)> {
    let (header, body) = split_header(bytes)?;
    if header.artifact != expected {
        return Err(Error::Format(format!(
            "expected a {} artifact, found {}",
            expected.as_str(),
            header.artifact.as_str()
        )));
    }
    if sha256_hex(body) != header.body_sha256 {
        return Err(Error::Format("artifact body does not match its digest".into()));
    }
    let mut records = Vec::with_capacity(header.records);
    for (i, line) in BufReader::new(body).lines().enumerate() {
        let line = line?;
        let record = serde_json::from_str(&line).map_err(|e| Error::Format(format!("record {}: {e}", i + 1)))?;
        records.push(record);
    }
    if records.len() != header.records {
        return Err(Error::Format(format!(
            "header announces {} records, body has {}",
            header.records,
            records.len()
        )));
    }
    Ok((header, records))
}

pub fn read_records<T: DeserializeOwned>(path: &Path, expected: ArtifactKind) -> Result<(ArtifactHeader, Vec<T>)> {
    let bytes = fs::read(path).map_err(|e| io_context(e, path))?;
    decode_records(&bytes, expected).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Digest of a store's records: ids and little-endian `f32` components in
/// store order.
pub fn store_digest(store: &VectorStore) -> String {
    let mut hasher = Sha256::new();
    for (id, values) in store.iter() {
        hasher.update((id.len() as u64).to_le_bytes());
        hasher.update(id.as_bytes());
        for v in values {
            hasher.update(v.to_le_bytes());
        }
    }
    hex(&hasher.finalize())
}

pub fn write_store(path: &Path, mut header: ArtifactHeader, store: &mut VectorStore) -> Result<()> {
    header.records = store.len();
    header.body_sha256 = store_digest(store);
    store.set_meta(serde_json::to_value(&header)?);
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|e| e == "jsonl") {
        store.write_text(&mut bytes)?;
    } else {
        store.write_binary(&mut bytes)?;
    }
    write_atomic(path, &bytes)
}

fn store_header(store: &VectorStore) -> Result<ArtifactHeader> {
    let meta = store
        .meta()
        .ok_or_else(|| Error::Format("vector store has no provenance header".into()))?;
    let header: ArtifactHeader = serde_json::from_value(meta.clone())?;
    if header.format_version != ARTIFACT_FORMAT_VERSION || header.artifact != ArtifactKind::Vectors {
        return Err(Error::Format("vector store provenance header is not a vectors artifact".into()));
    }
    Ok(header)
}

pub fn read_store(path: &Path) -> Result<(ArtifactHeader, VectorStore)> {
    let store = VectorStore::read_path(path)?;
    let header = store_header(&store)?;
    if store_digest(&store) != header.body_sha256 {
        return Err(Error::Format(format!("{}: vector records do not match their digest", path.display())));
    }
    Ok((header, store))
}

/// Header of a record artifact or vector store, without checking the body.
pub fn read_header(path: &Path) -> Result<ArtifactHeader> {
    let bytes = fs::read(path).map_err(|e| io_context(e, path))?;
    if bytes.starts_with(crate::embed::STORE_MAGIC) || looks_like_store_text(&bytes) {
        return store_header(&VectorStore::read_path(path)?);
    }
    split_header(&bytes)
        .map(|(h, _)| h)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_model(path: &Path, header: ArtifactHeader, model: &TrainedModel) -> Result<()> {
    write_records(path, header, std::slice::from_ref(model))
}

/// Reads a model artifact, checking the model format version.
pub fn read_model(path: &Path) -> Result<(ArtifactHeader, TrainedModel)> {
    let (header, mut records) = read_records::<serde_json::Value>(path, ArtifactKind::Model)?;
    if records.len() != 1 {
        return Err(Error::Format(format!("{}: a model artifact holds exactly one model", path.display())));
    }
    let model = TrainedModel::read_json(serde_json::to_vec(&records.remove(0))?.as_slice())?;
    Ok((header, model))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigestStatus {
    Ok,
    Mismatch,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub artifact: ArtifactKind,
    pub body: DigestStatus,
    pub inputs: Vec<(String, DigestStatus)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.body == DigestStatus::Ok && self.inputs.iter().all(|(_, s)| *s == DigestStatus::Ok)
    }
}

/// Re-checks the body digest of an artifact and the digests of the inputs
/// it records, resolving input paths against the working directory.
pub fn verify(path: &Path) -> Result<VerifyReport> {
    let bytes = fs::read(path).map_err(|e| io_context(e, path))?;
    let (header, body_ok) = if bytes.starts_with(crate::embed::STORE_MAGIC) || looks_like_store_text(&bytes) {
        let store = VectorStore::read_path(path)?;
        let header = store_header(&store)?;
        let ok = store_digest(&store) == header.body_sha256;
        (header, ok)
    } else {
        let (header, body) = split_header(&bytes)?;
        let ok = sha256_hex(body) == header.body_sha256;
        (header, ok)
    };
    let inputs = header
        .inputs
        .iter()
        .map(|input| {
            let status = match file_digest(Path::new(&input.path)) {
                Ok(d) if d == input.sha256 => DigestStatus::Ok,
                Ok(_) => DigestStatus::Mismatch,
                Err(_) => DigestStatus::Missing,
            };
            (input.path.clone(), status)
        })
        .collect();
    Ok(VerifyReport {
        artifact: header.artifact,
        body: if body_ok { DigestStatus::Ok } else { DigestStatus::Mismatch },
        inputs,
    })
}

fn looks_like_store_text(bytes: &[u8]) -> bool {
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    serde_json::from_slice::<serde_json::Value>(first)
        .ok()
        .is_some_and(|v| v.get("dim").is_some() && v.get("artifact").is_none())
}

/// Reads the whole of `reader` as an artifact.
pub fn read_records_from<T: DeserializeOwned, R: Read>(mut reader: R, expected: ArtifactKind) -> Result<(ArtifactHeader, Vec<T>)> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_records(&bytes, expected)
}

/// Writes an encoded artifact to any sink.
pub fn write_records_to<T: Serialize, W: Write>(mut writer: W, header: ArtifactHeader, records: &[T]) -> Result<()> {
    writer.write_all(&encode_records(header, records)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        id: String,
        x: f64,
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let rows = vec![
            Row { id: "a".into(), x: 0.1 },
            Row { id: "b".into(), x: 1e-300 },
        ];
        let header = ArtifactHeader::new(ArtifactKind::Metrics, "evaluate").seed("split", 7);
        let bytes = encode_records(header, &rows).unwrap();
        let (h, back): (_, Vec<Row>) = decode_records(&bytes, ArtifactKind::Metrics).unwrap();
        assert_eq!(back, rows);
        assert_eq!(h.records, 2);
        assert_eq!(h.seeds["split"], 7);
        assert!(decode_records::<Row>(&bytes, ArtifactKind::Model).is_err());
        let mut tampered = bytes.clone();
        let last = tampered.len() - 3;
        tampered[last] = b'9';
        assert!(matches!(decode_records::<Row>(&tampered, ArtifactKind::Metrics), Err(Error::Format(_))));
    }

    #[test]
    fn encoding_is_deterministic() {
        let rows = vec![Row { id: "a".into(), x: 2.5 }];
        let a = encode_records(ArtifactHeader::new(ArtifactKind::Report, "report"), &rows).unwrap();
        let b = encode_records(ArtifactHeader::new(ArtifactKind::Report, "report"), &rows).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_version_rejected() {
        let rows: Vec<Row> = Vec::new();
        let mut header = ArtifactHeader::new(ArtifactKind::Report, "report");
        header.format_version = 99;
        let bytes = encode_records(header, &rows).unwrap();
        let err = decode_records::<Row>(&bytes, ArtifactKind::Report).unwrap_err();
        assert!(err.to_string().contains("version 99"));
    }
}
