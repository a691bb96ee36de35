//! Paragraph segmentation and relevance filtering of pre-extracted document
//! text.
//!
//! Input is plain text where paragraphs are separated by blank lines and
//! headings are either marked with a leading `# ` or recognized as a single
//! short line without terminal punctuation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::owl::normalize_whitespace;

/// Longest single line that may still be classified as an unmarked heading.
pub const MAX_HEADING_CHARS: usize = 120;

const TERMINAL_PUNCTUATION: &[char] = &['.', '!', '?', ';', ':'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParagraphKind {
    Body,
    Heading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    pub index: usize,
    pub kind: ParagraphKind,
    pub text: String,
    pub char_len: usize,
}

impl Paragraph {
    pub fn new(doc_id: &str, index: usize, kind: ParagraphKind, text: &str) -> Self {
        let text = normalize_whitespace(text);
        Paragraph {
            doc_id: doc_id.to_string(),
            index,
            kind,
            char_len: text.chars().count(),
            text,
        }
    }

    /// Stable id over document, position and text.
    pub fn sample_id(&self) -> String {
        crate::types::content_id(&[self.doc_id.as_bytes(), self.index.to_string().as_bytes(), self.text.as_bytes()])
    }

    /// Builds a paragraph from an externally produced record, recomputing
    /// `char_len` from the normalized text.
    pub fn from_record(doc_id: String, index: usize, kind: ParagraphKind, text: &str) -> Self {
        Paragraph::new(&doc_id, index, kind, text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_length: usize,
    pub banned_sections: BTreeSet<String>,
    pub drop_headings: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_length: 100,
            banned_sections: ["references", "bibliography", "acknowledgement", "acknowledgements"]
                .into_iter()
                .map(String::from)
                .collect(),
            drop_headings: true,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_length == 0 {
            return Err(Error::param("min_length", "must be at least 1"));
        }
        Ok(())
    }

    /// Whether a heading opens a section whose body is skipped. Leading
    /// section numbering ("7.", "A.1") and surrounding punctuation are
    /// ignored; comparison is case-insensitive.
    pub fn is_banned(&self, heading: &str) -> bool {
        let name = heading
            .trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c.is_whitespace())
            .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
            .to_lowercase();
        self.banned_sections.iter().any(|b| b.to_lowercase() == name)
    }
}

fn classify_block(lines: &[&str]) -> (ParagraphKind, String) {
    if let [line] = lines {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("# ") {
            return (ParagraphKind::Heading, rest.to_string());
        }
        let len = trimmed.chars().count();
        if len <= MAX_HEADING_CHARS && !trimmed.ends_with(TERMINAL_PUNCTUATION) {
            return (ParagraphKind::Heading, trimmed.to_string());
        }
        return (ParagraphKind::Body, trimmed.to_string());
    }
    let first = lines[0].trim_start();
    if let Some(rest) = first.strip_prefix("# ") {
        // Marked heading wrapped over several lines.
        let mut text = rest.to_string();
        for line in &lines[1..] {
            text.push(' ');
            text.push_str(line);
        }
        return (ParagraphKind::Heading, text);
    }
    (ParagraphKind::Body, lines.join(" "))
}

/// Splits text into maximal blocks separated by blank lines.
pub fn split_paragraphs(document_text: &str, doc_id: &str) -> Vec<Paragraph> {
    let mut paragraphs = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let flush = |block: &mut Vec<&str>, paragraphs: &mut Vec<Paragraph>| {
        if block.is_empty() {
            return;
        }
        let (kind, text) = classify_block(block);
        let paragraph = Paragraph::new(doc_id, paragraphs.len(), kind, &text);
        if !paragraph.text.is_empty() {
            paragraphs.push(paragraph);
        }
        block.clear();
    };
    for line in document_text.lines() {
        if line.trim().is_empty() {
            flush(&mut block, &mut paragraphs);
        } else {
            block.push(line);
        }
    }
    flush(&mut block, &mut paragraphs);
    paragraphs
}

/// Keeps body paragraphs of at least `min_length` characters that are not in
/// a banned section. A banned section runs from its heading to the next
/// heading or the end of the document.
pub fn filter_paragraphs(paragraphs: &[Paragraph], policy: &FilterPolicy) -> Vec<Paragraph> {
    let mut kept = Vec::new();
    let mut in_banned = false;
    let mut current_doc: Option<&str> = None;
    for paragraph in paragraphs {
        if current_doc != Some(paragraph.doc_id.as_str()) {
            current_doc = Some(paragraph.doc_id.as_str());
            in_banned = false;
        }
        match paragraph.kind {
            ParagraphKind::Heading => {
                in_banned = policy.is_banned(&paragraph.text);
                if !policy.drop_headings && !in_banned {
                    kept.push(paragraph.clone());
                }
            }
            ParagraphKind::Body => {
                if !in_banned && paragraph.char_len >= policy.min_length {
                    kept.push(paragraph.clone());
                }
            }
        }
    }
    kept
}
