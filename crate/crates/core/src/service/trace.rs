//! Trace schema shared with the dialog console. Bump [`SCHEMA_VERSION`] on
//! any incompatible change.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "session_id": "s00000001",
//!   "rule_text": "...",
//!   "sentences": [{"index": 0, "text": "...", "byte_start": 0, "byte_end": 12, "char_start": 0, "char_end": 12}],
//!   "scenario": "...",
//!   "question": "...",
//!   "status": {"state": "active"},
//!   "turns": [{
//!     "turn": 1,
//!     "decision": "Inquire",
//!     "decision_probabilities": [0.1, 0.1, 0.1, 0.7],
//!     "entailment": [[0.2, 0.1, 0.7]],
//!     "gates": [[0.5]],
//!     "span": {"sentence": 0, "start_token": 1, "end_token": 3, "text": "...",
//!              "byte_start": 4, "byte_end": 20, "char_start": 4, "char_end": 20},
//!     "question": "Do you ...?",
//!     "answer": "yes"
//!   }]
//! }
//! ```
//!
//! `status.state` is `active`, `concluded` (with `decision`) or `aborted`
//! (with `reason`). Probability orders: decisions Yes/No/Irrelevant/Inquire,
//! entailment Entailment/Contradiction/Unknown. `gates` has one row per read
//! (question, scenario, then history) and one column per sentence. Offsets
//! index `rule_text`; `*_end` is exclusive.

use serde::{Deserialize, Serialize};

use crate::corpus::{Answer, Decision, RuleDocument, Span};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceTrace {
    pub index: usize,
    pub text: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

impl SentenceTrace {
    pub fn all(doc: &RuleDocument) -> Vec<Self> {
        let chars = |b: usize| doc.raw[..b].chars().count();
        doc.sentences
            .iter()
            .enumerate()
            .map(|(index, s)| Self {
                index,
                text: s.text.clone(),
                byte_start: s.start,
                byte_end: s.end,
                char_start: chars(s.start),
                char_end: chars(s.end),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanTrace {
    pub sentence: usize,
    pub start_token: usize,
    pub end_token: usize,
    /// Surface text, `rule_text[byte_start..byte_end]`.
    pub text: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

impl SpanTrace {
    pub fn new(doc: &RuleDocument, span: &Span) -> Self {
        let (byte_start, byte_end) = doc.span_byte_range(span);
        let (char_start, char_end) = doc.span_char_range(span);
        Self {
            sentence: span.sentence,
            start_token: span.start,
            end_token: span.end,
            text: doc.raw[byte_start..byte_end].to_string(),
            byte_start,
            byte_end,
            char_start,
            char_end,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub turn: usize,
    pub decision: Decision,
    pub decision_probabilities: [f64; 4],
    pub entailment: Vec<[f64; 3]>,
    pub gates: Vec<Vec<f64>>,
    pub span: Option<SpanTrace>,
    pub question: Option<String>,
    /// The user's reply to `question`, once given.
    pub answer: Option<Answer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum StatusTrace {
    Active,
    Concluded { decision: Decision },
    Aborted { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub schema_version: u32,
    pub session_id: String,
    pub rule_text: String,
    pub sentences: Vec<SentenceTrace>,
    pub scenario: String,
    pub question: String,
    pub status: StatusTrace,
    pub turns: Vec<TurnTrace>,
}
