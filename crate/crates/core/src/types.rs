use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Short ontology identifier such as `NCIT` or `CHEBI`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OntologyId(String);

impl OntologyId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::InvalidInput("ontology id must be non-empty".into()));
        }
        Ok(OntologyId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for OntologyId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        OntologyId::new(value)
    }
}

impl From<OntologyId> for String {
    fn from(id: OntologyId) -> String {
        id.0
    }
}

impl fmt::Display for OntologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Hex digest of the first 16 bytes of SHA-256 over the given parts,
/// separated by NUL bytes.
pub fn content_id<S: AsRef<[u8]>>(parts: &[S]) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0u8]);
        }
        hasher.update(part.as_ref());
    }
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixed-dimension real vector produced by an embedding backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("embedding vector must have dim >= 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "embedding vector component {i} is not finite"
            )));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Annotation,
    Paragraph,
}

/// An embedded text: labeled when it came from an ontology annotation,
/// unlabeled when it is a corpus paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSample {
    pub sample_id: String,
    pub vector: EmbeddingVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<OntologyId>,
    pub source: SampleSource,
}

impl EmbeddedSample {
    pub fn annotation(sample_id: String, vector: EmbeddingVector, label: OntologyId) -> Self {
        EmbeddedSample {
            sample_id,
            vector,
            label: Some(label),
            source: SampleSource::Annotation,
        }
    }

    pub fn paragraph(sample_id: String, vector: EmbeddingVector) -> Self {
        EmbeddedSample {
            sample_id,
            vector,
            label: None,
            source: SampleSource::Paragraph,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.source, &self.label) {
            (SampleSource::Annotation, Some(_)) | (SampleSource::Paragraph, None) => Ok(()),
            (SampleSource::Annotation, None) => Err(Error::InvalidInput(format!(
                "annotation sample {} has no label",
                self.sample_id
            ))),
            (SampleSource::Paragraph, Some(_)) => Err(Error::InvalidInput(format!(
                "paragraph sample {} carries a label",
                self.sample_id
            ))),
        }
    }
}
