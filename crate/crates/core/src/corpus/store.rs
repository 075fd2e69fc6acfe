//! Normalized corpus files: examples together with their span and
//! entailment supervision, stored as versioned JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labeling::{label_entailment, label_span};
use super::types::{DialogExample, EntailmentLabel, Span};

pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub example: DialogExample,
    /// Underspecified span; present exactly for Inquire targets.
    pub span: Option<Span>,
    /// One label per rule sentence.
    pub entailment: Vec<EntailmentLabel>,
}

impl LabeledExample {
    /// Labels an example with the edit-distance span heuristic and
    /// history/evidence entailment labels.
    pub fn from_heuristics(example: DialogExample) -> Self {
        let span = example
            .follow_up
            .as_deref()
            .map(|q| label_span(&example.rule, q));
        let entailment = label_entailment(&example.rule, &example.history, &example.evidence);
        Self {
            example,
            span,
            entailment,
        }
    }
}

pub fn label_corpus(examples: Vec<DialogExample>) -> Vec<LabeledExample> {
    examples
        .into_iter()
        .map(LabeledExample::from_heuristics)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: u32,
    pub name: String,
    pub examples: Vec<LabeledExample>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusFileError {
    #[error("corpus file io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("corpus format version {found} is not supported (expected {CORPUS_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("example {id}: {reason}")]
    Invalid { id: String, reason: String },
}

impl CorpusFile {
    pub fn new(name: impl Into<String>, examples: Vec<LabeledExample>) -> Self {
        Self {
            version: CORPUS_FORMAT_VERSION,
            name: name.into(),
            examples,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusFileError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusFileError> {
        let text = std::fs::read_to_string(path)?;
        let corpus: CorpusFile = serde_json::from_str(&text)?;
        if corpus.version != CORPUS_FORMAT_VERSION {
            return Err(CorpusFileError::Version {
                found: corpus.version,
            });
        }
        for ex in &corpus.examples {
            let invalid = |reason: String| CorpusFileError::Invalid {
                id: ex.example.id.clone(),
                reason,
            };
            ex.example.validate().map_err(|e| invalid(e.to_string()))?;
            if ex.entailment.len() != ex.example.rule.len() {
                return Err(invalid(format!(
                    "{} entailment labels for {} rule sentences",
                    ex.entailment.len(),
                    ex.example.rule.len()
                )));
            }
            if ex.span.is_some() != ex.example.follow_up.is_some() {
                return Err(invalid(
                    "span present without a follow-up (or vice versa)".into(),
                ));
            }
        }
        Ok(corpus)
    }
}
