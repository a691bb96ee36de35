//! Ontology relevance classification.
//!
//! The pipeline extracts annotation texts from OWL ontologies as labeled
//! samples, embeds texts into fixed-dimension vectors, trains five classical
//! classifiers (random forest, SVM, Gaussian process, k-nearest neighbors and
//! a multilayer perceptron), compares them with rank-based significance tests
//! and aggregates per-ontology prediction statistics over unlabeled corpora.

pub mod artifact;
pub mod classifiers;
pub mod corpus;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod evaluation;
pub mod owl;
pub mod report;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod types;

mod par;

pub use error::{Error, Result};
pub use types::{content_id, EmbeddedSample, EmbeddingVector, OntologyId, SampleSource};
