//! Follow-up question generation from an extracted span.
//!
//! The shipped generator is a deterministic template engine keyed on the
//! first word of the span. Other generators plug in through [`Rephraser`]
//! and are looked up by name with [`by_name`].

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{RuleDocument, Span};

const DEFAULT_DATA: &str = include_str!("../../data/rephraser.toml");

#[derive(Debug, thiserror::Error)]
pub enum RephraseError {
    #[error("span is empty")]
    EmptySpan,
    #[error("span {span:?} does not occur in its rule sentence")]
    NotInSentence { span: String },
    #[error("unknown rephraser {0:?}")]
    UnknownGenerator(String),
    #[error("rephraser data: {0}")]
    Data(String),
}

/// Input to a generator: the span plus its context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RephraseRequest<'a> {
    pub span: &'a str,
    pub sentence: &'a str,
    pub rule: &'a str,
}

impl<'a> RephraseRequest<'a> {
    /// Checks the span is non-empty and occurs in the sentence (ASCII case
    /// is ignored, since spans may be rebuilt from lowercased tokens).
    pub fn new(span: &'a str, sentence: &'a str, rule: &'a str) -> Result<Self, RephraseError> {
        if span.trim().is_empty() {
            return Err(RephraseError::EmptySpan);
        }
        if !sentence.to_lowercase().contains(&span.to_lowercase()) {
            return Err(RephraseError::NotInSentence {
                span: span.to_string(),
            });
        }
        Ok(Self {
            span,
            sentence,
            rule,
        })
    }

    /// Request for a span of `doc`, using the surface text of the rule so
    /// casing survives into the question.
    pub fn from_span(doc: &'a RuleDocument, span: &Span) -> Result<Self, RephraseError> {
        let (s, e) = doc.span_byte_range(span);
        Self::new(&doc.raw[s..e], &doc.sentences[span.sentence].text, &doc.raw)
    }
}

pub trait Rephraser: Send + Sync {
    fn name(&self) -> &str;
    fn rephrase(&self, request: &RephraseRequest<'_>) -> Result<String, RephraseError>;
}

#[derive(Clone, Debug, Deserialize)]
struct TemplateData {
    verb_template: String,
    subject_template: String,
    be_template: String,
    fallback_template: String,
    verbs: Vec<String>,
    be_starters: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpanShape {
    Verb,
    Subject,
    Be,
    Other,
}

#[derive(Clone, Debug)]
pub struct TemplateRephraser {
    data: TemplateData,
    verbs: HashSet<String>,
    be_starters: HashSet<String>,
}

impl Default for TemplateRephraser {
    fn default() -> Self {
        Self::from_toml(DEFAULT_DATA).expect("bundled rephraser data parses")
    }
}

impl TemplateRephraser {
    pub fn from_toml(text: &str) -> Result<Self, RephraseError> {
        let data: TemplateData =
            toml::from_str(text).map_err(|e| RephraseError::Data(e.to_string()))?;
        for t in [
            &data.verb_template,
            &data.subject_template,
            &data.be_template,
            &data.fallback_template,
        ] {
            if !t.contains("{span}") || !t.ends_with('?') {
                return Err(RephraseError::Data(format!(
                    "template {t:?} needs {{span}} and a final '?'"
                )));
            }
        }
        let lower = |v: &[String]| v.iter().map(|w| w.to_lowercase()).collect();
        Ok(Self {
            verbs: lower(&data.verbs),
            be_starters: lower(&data.be_starters),
            data,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RephraseError> {
        let text = std::fs::read_to_string(path).map_err(|e| RephraseError::Data(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn shape(&self, span: &str) -> SpanShape {
        let mut words = span.split_whitespace().map(str::to_lowercase);
        let first = words.next().unwrap_or_default();
        if self.verbs.contains(&first) {
            SpanShape::Verb
        } else if first == "you" && words.next().map_or(false, |w| self.verbs.contains(&w)) {
            SpanShape::Subject
        } else if self.be_starters.contains(&first) {
            SpanShape::Be
        } else {
            SpanShape::Other
        }
    }
}

/// Trailing sentence punctuation is dropped so the question ends in exactly
/// one `?`.
fn clean(span: &str) -> &str {
    span.trim()
        .trim_end_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '?' | '!'))
        .trim_end()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl Rephraser for TemplateRephraser {
    fn name(&self) -> &str {
        "template"
    }

    fn rephrase(&self, request: &RephraseRequest<'_>) -> Result<String, RephraseError> {
        let span = clean(request.span);
        if span.is_empty() {
            return Err(RephraseError::EmptySpan);
        }
        let template = match self.shape(span) {
            SpanShape::Verb => &self.data.verb_template,
            SpanShape::Subject => &self.data.subject_template,
            SpanShape::Be => &self.data.be_template,
            SpanShape::Other => &self.data.fallback_template,
        };
        Ok(capitalize(&template.replace("{span}", span)))
    }
}

/// Returns the span itself as a question. Useful as an upper-bound probe
/// when references are spans already phrased as questions.
#[derive(Clone, Copy, Debug, Default)]
pub struct EchoRephraser;

impl Rephraser for EchoRephraser {
    fn name(&self) -> &str {
        "echo"
    }

    fn rephrase(&self, request: &RephraseRequest<'_>) -> Result<String, RephraseError> {
        let span = clean(request.span);
        if span.is_empty() {
            return Err(RephraseError::EmptySpan);
        }
        Ok(format!("{}?", capitalize(span)))
    }
}

pub const GENERATORS: &[&str] = &["template", "echo"];

pub fn by_name(name: &str) -> Result<Box<dyn Rephraser>, RephraseError> {
    match name {
        "template" => Ok(Box::new(TemplateRephraser::default())),
        "echo" => Ok(Box::new(EchoRephraser)),
        other => Err(RephraseError::UnknownGenerator(other.to_string())),
    }
}

#[cfg(test)]
mod tests;
