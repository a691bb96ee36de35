//! Streaming extraction of annotation texts from OWL ontology files.
//!
//! Both RDF/XML (`<owl:Class rdf:about=".."><rdfs:label>..`) and OWL/XML
//! (`<AnnotationAssertion><IRI>..</IRI><Literal>..`) serializations are
//! handled. The document is read event by event; only the stack of open
//! elements and the texts currently being captured are kept in memory.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::name::{QName, ResolveResult};
use quick_xml::NsReader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{content_id, OntologyId};

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";

/// Class identifier assigned to annotations found outside any class.
pub const DOCUMENT_CLASS: &str = "(document)";

const WELL_KNOWN_PREFIXES: &[(&str, &str)] = &[
    ("rdf", RDF_NS),
    ("rdfs", "http://www.w3.org/2000/01/rdf-schema#"),
    ("owl", OWL_NS),
    ("xsd", "http://www.w3.org/2001/XMLSchema#"),
    ("obo", "http://purl.obolibrary.org/obo/"),
    ("skos", "http://www.w3.org/2004/02/skos/core#"),
    ("dc", "http://purl.org/dc/elements/1.1/"),
    ("dcterms", "http://purl.org/dc/terms/"),
    ("oboInOwl", "http://www.geneontology.org/formats/oboInOwl#"),
];

const DEFAULT_TAG_SETS: &str = include_str!("../config/tagsets.json");

/// The element names whose text content counts as an annotation for one
/// ontology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    pub ontology: OntologyId,
    pub tags: Vec<String>,
}

impl TagSet {
    pub fn new(ontology: OntologyId, tags: Vec<String>) -> Result<Self> {
        let tag_set = TagSet { ontology, tags };
        tag_set.validate()?;
        Ok(tag_set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tags.is_empty() {
            return Err(Error::InvalidInput(format!(
                "tag set for {} is empty",
                self.ontology
            )));
        }
        let mut seen = BTreeSet::new();
        for tag in &self.tags {
            if tag.trim().is_empty() {
                return Err(Error::InvalidInput("empty tag name".into()));
            }
            if !seen.insert(tag.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate tag {tag}")));
            }
        }
        Ok(())
    }
}

/// Per-ontology tag sets, as stored in a tag-set file:
/// `{"NCIT": ["rdfs:comment", "rdfs:label"], ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSetConfig(BTreeMap<OntologyId, Vec<String>>);

impl TagSetConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: TagSetConfig = serde_json::from_str(text)?;
        for tag_set in config.tag_sets() {
            tag_set.validate()?;
        }
        Ok(config)
    }

    /// The shipped defaults for Allotrope, NCIT, SBO, CHEBI and CHMO.
    pub fn builtin() -> Self {
        TagSetConfig::from_json(DEFAULT_TAG_SETS).expect("builtin tag sets are valid")
    }

    pub fn get(&self, ontology: &OntologyId) -> Option<TagSet> {
        self.0.get(ontology).map(|tags| TagSet {
            ontology: ontology.clone(),
            tags: tags.clone(),
        })
    }

    pub fn tag_sets(&self) -> impl Iterator<Item = TagSet> + '_ {
        self.0.iter().map(|(ontology, tags)| TagSet {
            ontology: ontology.clone(),
            tags: tags.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub record_id: String,
    pub ontology: OntologyId,
    pub class_iri: String,
    pub tag: String,
    pub text: String,
}

impl AnnotationRecord {
    pub fn new(ontology: OntologyId, class_iri: String, tag: String, text: String) -> Self {
        let record_id = content_id(&[ontology.as_str(), &class_iri, &tag, &text]);
        AnnotationRecord {
            record_id,
            ontology,
            class_iri,
            tag,
            text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Records whose normalized text has fewer characters are dropped.
    pub min_length: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { min_length: 3 }
    }
}

/// Collapses whitespace runs to single spaces and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug)]
struct TagMatcher {
    tag: String,
    prefix: Option<String>,
    namespace: Option<&'static str>,
    local: String,
}

impl TagMatcher {
    fn parse(tag: &str) -> Self {
        let (prefix, local) = match tag.split_once(':') {
            Some((p, l)) => (Some(p.to_string()), l.to_string()),
            None => (None, tag.to_string()),
        };
        let namespace = prefix.as_deref().and_then(|p| {
            WELL_KNOWN_PREFIXES
                .iter()
                .find(|(known, _)| *known == p)
                .map(|(_, ns)| *ns)
        });
        TagMatcher {
            tag: tag.to_string(),
            prefix,
            namespace,
            local,
        }
    }

    fn matches(&self, resolved: &ElementNs, raw: QName<'_>, local: &[u8]) -> bool {
        if local != self.local.as_bytes() {
            return false;
        }
        let Some(prefix) = &self.prefix else {
            return true;
        };
        match resolved {
            ElementNs::Bound(ns) => match self.namespace {
                Some(expected) => ns == expected.as_bytes(),
                None => raw.prefix().is_some_and(|p| p.as_ref() == prefix.as_bytes()),
            },
            // Prefix not declared in the document (or no prefix and no
            // default namespace): fall back to the local name.
            ElementNs::Unbound => true,
        }
    }
}

#[derive(Debug)]
enum FrameKind {
    Class(String),
    Assertion(Option<String>),
    Other,
}

#[derive(Debug)]
struct Capture {
    depth: usize,
    target: CaptureTarget,
    text: String,
}

#[derive(Debug)]
enum CaptureTarget {
    Annotation(usize),
    AssertionSubject,
}

/// Owned namespace resolution of one element name; the borrowed form from the
/// reader cannot outlive the next call into it.
#[derive(Debug)]
enum ElementNs {
    Bound(Vec<u8>),
    Unbound,
}

impl From<ResolveResult<'_>> for ElementNs {
    fn from(resolved: ResolveResult<'_>) -> Self {
        match resolved {
            ResolveResult::Bound(ns) => ElementNs::Bound(ns.as_ref().to_vec()),
            ResolveResult::Unbound | ResolveResult::Unknown(_) => ElementNs::Unbound,
        }
    }
}

impl ElementNs {
    fn is(&self, ns: &str) -> bool {
        matches!(self, ElementNs::Bound(n) if n == ns.as_bytes())
    }
}

fn xml_error<R>(reader: &NsReader<R>, message: impl ToString) -> Error {
    Error::Xml {
        offset: reader.error_position(),
        message: message.to_string(),
    }
}

fn class_identifier<R>(reader: &NsReader<R>, element: &BytesStart<'_>) -> Result<Option<String>> {
    for attr in element.attributes() {
        let attr = attr.map_err(|e| xml_error(reader, e))?;
        let (resolved, local) = reader.resolve_attribute(attr.key);
        let resolved = ElementNs::from(resolved);
        let rdf = resolved.is(RDF_NS)
            || matches!(resolved, ElementNs::Unbound)
                && attr.key.prefix().is_some_and(|p| p.as_ref() == b"rdf");
        if !rdf {
            continue;
        }
        let value = attr
            .unescape_value()
            .map_err(|e| xml_error(reader, e))?
            .into_owned();
        match local.as_ref() {
            b"about" => return Ok(Some(value)),
            b"ID" => return Ok(Some(format!("#{value}"))),
            _ => {}
        }
    }
    Ok(None)
}

/// Extracts one record per element whose name is in `tag_set`, in document
/// order. Each record is attached to the nearest enclosing class declaration
/// (`owl:Class` with `rdf:about`/`rdf:ID`, or the subject of an OWL/XML
/// `AnnotationAssertion`), or to [`DOCUMENT_CLASS`] when there is none.
///
/// Returns [`Error::EmptyExtraction`] when nothing matched, so an empty result
/// is never mistaken for success.
pub fn extract_annotations<R: BufRead>(
    input: R,
    tag_set: &TagSet,
    options: &ExtractOptions,
) -> Result<Vec<AnnotationRecord>> {
    tag_set.validate()?;
    let matchers: Vec<TagMatcher> = tag_set.tags.iter().map(|t| TagMatcher::parse(t)).collect();
    let mut reader = NsReader::from_reader(input);
    reader.config_mut().check_end_names = true;

    let mut frames: Vec<FrameKind> = Vec::new();
    let mut captures: Vec<Capture> = Vec::new();
    let mut records = Vec::new();
    let mut buf = Vec::new();

    loop {
        let (resolved, event) = match reader.read_resolved_event_into(&mut buf) {
            Ok((resolved, event)) => (ElementNs::from(resolved), event),
            Err(e) => return Err(xml_error(&reader, e)),
        };
        match event {
            Event::Start(element) => {
                let depth = frames.len();
                let local = element.local_name();
                let kind = if resolved.is(OWL_NS) && local.as_ref() == b"Class" {
                    match class_identifier(&reader, &element)? {
                        Some(iri) => FrameKind::Class(iri),
                        None => FrameKind::Other,
                    }
                } else if resolved.is(OWL_NS) && local.as_ref() == b"AnnotationAssertion" {
                    FrameKind::Assertion(None)
                } else {
                    FrameKind::Other
                };
                let under_open_assertion =
                    matches!(frames.last(), Some(FrameKind::Assertion(None)));
                if under_open_assertion
                    && resolved.is(OWL_NS)
                    && matches!(local.as_ref(), b"IRI" | b"AbbreviatedIRI")
                {
                    captures.push(Capture {
                        depth,
                        target: CaptureTarget::AssertionSubject,
                        text: String::new(),
                    });
                }
                if let Some(i) = matchers
                    .iter()
                    .position(|m| m.matches(&resolved, element.name(), local.as_ref()))
                {
                    captures.push(Capture {
                        depth,
                        target: CaptureTarget::Annotation(i),
                        text: String::new(),
                    });
                }
                frames.push(kind);
            }
            Event::End(_) => {
                frames.pop();
                let depth = frames.len();
                while captures.last().is_some_and(|c| c.depth == depth) {
                    let capture = captures.pop().expect("checked non-empty");
                    let text = normalize_whitespace(&capture.text);
                    match capture.target {
                        CaptureTarget::AssertionSubject => {
                            if let Some(FrameKind::Assertion(subject)) = frames.last_mut() {
                                *subject = Some(text);
                            }
                        }
                        CaptureTarget::Annotation(i) => {
                            if text.is_empty() || text.chars().count() < options.min_length {
                                continue;
                            }
                            let class_iri = frames
                                .iter()
                                .rev()
                                .find_map(|f| match f {
                                    FrameKind::Class(iri) => Some(iri.clone()),
                                    FrameKind::Assertion(Some(iri)) => Some(iri.clone()),
                                    _ => None,
                                })
                                .unwrap_or_else(|| DOCUMENT_CLASS.to_string());
                            records.push(AnnotationRecord::new(
                                tag_set.ontology.clone(),
                                class_iri,
                                matchers[i].tag.clone(),
                                text,
                            ));
                        }
                    }
                }
            }
            Event::Text(text) => {
                if !captures.is_empty() {
                    let text = text.xml10_content().map_err(|e| xml_error(&reader, e))?;
                    for capture in &mut captures {
                        capture.text.push_str(&text);
                    }
                }
            }
            Event::CData(data) => {
                if !captures.is_empty() {
                    let text = data.xml10_content().map_err(|e| xml_error(&reader, e))?;
                    for capture in &mut captures {
                        capture.text.push_str(&text);
                    }
                }
            }
            Event::GeneralRef(reference) => {
                if !captures.is_empty() {
                    let resolved_text = match reference
                        .resolve_char_ref()
                        .map_err(|e| xml_error(&reader, e))?
                    {
                        Some(ch) => ch.to_string(),
                        None => {
                            let name = reference.decode().map_err(|e| xml_error(&reader, e))?;
                            match quick_xml::escape::resolve_predefined_entity(&name) {
                                Some(value) => value.to_string(),
                                None => {
                                    return Err(xml_error(
                                        &reader,
                                        format!("undefined entity &{name};"),
                                    ))
                                }
                            }
                        }
                    };
                    for capture in &mut captures {
                        capture.text.push_str(&resolved_text);
                    }
                }
            }
            Event::Eof => {
                if !frames.is_empty() {
                    return Err(Error::Xml {
                        offset: reader.buffer_position(),
                        message: format!("unexpected end of document, {} element(s) unclosed", frames.len()),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }

    if records.is_empty() {
        return Err(Error::EmptyExtraction {
            ontology: tag_set.ontology.to_string(),
            tags: tag_set.tags.join(", "),
        });
    }
    Ok(records)
}

/// Number of distinct class identifiers per ontology.
pub fn count_classes(records: &[AnnotationRecord]) -> BTreeMap<OntologyId, usize> {
    let mut classes: BTreeMap<&OntologyId, BTreeSet<&str>> = BTreeMap::new();
    for record in records {
        classes
            .entry(&record.ontology)
            .or_default()
            .insert(record.class_iri.as_str());
    }
    classes
        .into_iter()
        .map(|(ontology, set)| (ontology.clone(), set.len()))
        .collect()
}
