//! Text embedding behind one interface with interchangeable backends: a
//! deterministic feature-hashing backend, precomputed vector stores, and a
//! remote transformer sidecar.

mod hashing;
#[cfg(feature = "remote")]
mod remote;
mod store;

use std::fmt;
use std::str::FromStr;

pub use hashing::{hashing_embed, HashingBackend};
#[cfg(feature = "remote")]
pub use remote::{EmbedRequest, EmbedResponse, Health, RemoteBackend, RemoteConfig, SIDECAR_URL_ENV};
pub use store::{vector_store_lookup, VectorStore, MAGIC as STORE_MAGIC, STORE_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

/// Default embedding dimension of the transformer backend.
pub const DEFAULT_DIM: usize = 768;

pub trait EmbeddingBackend: Send + Sync {
    /// Dimension of every vector this backend produces.
    fn dim(&self) -> usize;

    /// Embeds already validated texts. Implementations must return one vector
    /// per text, in order.
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

/// Embeds `texts` with `backend`, rejecting empty strings before dispatch and
/// checking alignment and dimension of the result.
pub fn embed_batch(texts: &[String], backend: &dyn EmbeddingBackend) -> Result<Vec<EmbeddingVector>> {
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::InvalidInput(format!("text at index {i} is empty")));
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = backend.embed_texts(texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Contract(format!(
            "backend returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    let dim = backend.dim();
    for (i, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::Contract(format!(
                "vector {i} has dim {}, backend declares {dim}",
                v.dim()
            )));
        }
    }
    Ok(vectors)
}

/// Backend selection as given on the command line:
/// `hashing:<dim>`, `store:<path>` or `remote:<url>[#<dim>]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendDescriptor {
    Hashing { dim: usize },
    Store { path: String },
    Remote { url: String, dim: usize },
}

impl FromStr for BackendDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "hashing" => {
                let dim = if rest.is_empty() {
                    DEFAULT_DIM
                } else {
                    rest.parse()
                        .map_err(|_| Error::param("backend", format!("bad dim {rest:?}")))?
                };
                Ok(BackendDescriptor::Hashing { dim })
            }
            "store" if !rest.is_empty() => Ok(BackendDescriptor::Store {
                path: rest.to_string(),
            }),
            "remote" => {
                let (url, dim) = match rest.rsplit_once('#') {
                    Some((url, dim)) => (
                        url.to_string(),
                        dim.parse()
                            .map_err(|_| Error::param("backend", format!("bad dim {dim:?}")))?,
                    ),
                    None => (rest.to_string(), DEFAULT_DIM),
                };
                Ok(BackendDescriptor::Remote { url, dim })
            }
            _ => Err(Error::param(
                "backend",
                format!("unknown backend {s:?}, expected hashing:<dim>, store:<path> or remote:<url>"),
            )),
        }
    }
}

impl fmt::Display for BackendDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendDescriptor::Hashing { dim } => write!(f, "hashing:{dim}"),
            BackendDescriptor::Store { path } => write!(f, "store:{path}"),
            BackendDescriptor::Remote { url, dim } => write!(f, "remote:{url}#{dim}"),
        }
    }
}

/// An opened backend: either a text embedder or a precomputed store that is
/// addressed by sample id.
pub enum Backend {
    Texts(Box<dyn EmbeddingBackend>),
    Store(VectorStore),
}

impl Backend {
    pub fn dim(&self) -> usize {
        match self {
            Backend::Texts(b) => b.dim(),
            Backend::Store(s) => s.dim(),
        }
    }

    /// Embeds `(sample_id, text)` pairs: text backends see the texts, stores
    /// are looked up by id.
    pub fn embed_samples(&self, samples: &[(String, String)]) -> Result<Vec<EmbeddingVector>> {
        match self {
            Backend::Texts(b) => {
                let texts: Vec<String> = samples.iter().map(|(_, t)| t.clone()).collect();
                embed_batch(&texts, b.as_ref())
            }
            Backend::Store(s) => {
                let ids: Vec<String> = samples.iter().map(|(id, _)| id.clone()).collect();
                vector_store_lookup(&ids, s)
            }
        }
    }
}

impl BackendDescriptor {
    pub fn open(&self) -> Result<Backend> {
        match self {
            BackendDescriptor::Hashing { dim } => Ok(Backend::Texts(Box::new(HashingBackend::new(*dim)?))),
            BackendDescriptor::Store { path } => Ok(Backend::Store(VectorStore::read_path(
                std::path::Path::new(path),
            )?)),
            #[cfg(feature = "remote")]
            BackendDescriptor::Remote { url, dim } => {
                let url = if url.is_empty() {
                    std::env::var(SIDECAR_URL_ENV).map_err(|_| {
                        Error::param("backend", format!("no sidecar url given and {SIDECAR_URL_ENV} unset"))
                    })?
                } else {
                    url.clone()
                };
                let backend = RemoteBackend::new(RemoteConfig {
                    url,
                    dim: *dim,
                    ..RemoteConfig::default()
                });
                backend.health()?;
                Ok(Backend::Texts(Box::new(backend)))
            }
            #[cfg(not(feature = "remote"))]
            BackendDescriptor::Remote { .. } => Err(Error::param(
                "backend",
                "remote backend not compiled in",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_text_before_dispatch() {
        let backend = HashingBackend::new(8).unwrap();
        let err = embed_batch(&["ok".into(), " ".into()], &backend).unwrap_err();
        assert!(err.to_string().contains("index 1"));
    }

    struct Broken;

    impl EmbeddingBackend for Broken {
        fn dim(&self) -> usize {
            4
        }

        fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
            Ok(texts
                .iter()
                .map(|_| EmbeddingVector::new(vec![1.0; 3]).unwrap())
                .collect())
        }
    }

    #[test]
    fn dimension_mismatch_is_contract_violation() {
        let err = embed_batch(&["a".into()], &Broken).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn descriptor_parsing() {
        assert_eq!(
            "hashing:32".parse::<BackendDescriptor>().unwrap(),
            BackendDescriptor::Hashing { dim: 32 }
        );
        assert_eq!(
            "remote:http://localhost:8000#16".parse::<BackendDescriptor>().unwrap(),
            BackendDescriptor::Remote {
                url: "http://localhost:8000".into(),
                dim: 16
            }
        );
        assert!("bogus".parse::<BackendDescriptor>().is_err());
        let d = BackendDescriptor::Store { path: "v.bin".into() };
        assert_eq!(d.to_string().parse::<BackendDescriptor>().unwrap(), d);
    }

    #[test]
    fn hashing_batch_is_aligned_and_deterministic() {
        let backend = HashingBackend::new(32).unwrap();
        let texts = vec!["catalyst".to_string(), "catalyst".to_string()];
        let out = embed_batch(&texts, &backend).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[0].dim(), 32);
        assert!((out[0].norm() - 1.0).abs() < 1e-9);
    }
}
