use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::segment::RuleDocument;

/// Decision classes in logit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Yes,
    No,
    Irrelevant,
    Inquire,
}

impl Decision {
    pub const ALL: [Decision; 4] = [
        Decision::Yes,
        Decision::No,
        Decision::Irrelevant,
        Decision::Inquire,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_final(self) -> bool {
        self != Decision::Inquire
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Yes => "Yes",
            Decision::No => "No",
            Decision::Irrelevant => "Irrelevant",
            Decision::Inquire => "Inquire",
        };
        f.write_str(s)
    }
}

/// A user's answer to a follow-up question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "Yes",
            Answer::No => "No",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read {0:?} as a yes/no answer")]
pub struct UnparseableAnswer(pub String);

impl FromStr for Answer {
    type Err = UnparseableAnswer;

    /// Keyword match on free text: the first recognised keyword wins.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const YES: &[&str] = &["yes", "y", "yeah", "yep", "true", "correct", "i do", "i am"];
        const NO: &[&str] = &["no", "n", "nope", "not", "false", "never"];
        let lowered = s.trim().to_lowercase();
        let words: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        for w in &words {
            if NO.contains(w) {
                return Ok(Answer::No);
            }
            if YES.contains(w) {
                return Ok(Answer::Yes);
            }
        }
        let joined = words.join(" ");
        if YES.iter().any(|k| k.contains(' ') && joined.starts_with(k)) {
            return Ok(Answer::Yes);
        }
        Err(UnparseableAnswer(s.to_string()))
    }
}

/// Per-sentence entailment state; discriminants match logit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntailmentLabel {
    Entailment,
    Contradiction,
    Unknown,
}

impl EntailmentLabel {
    pub const ALL: [EntailmentLabel; 3] = [
        EntailmentLabel::Entailment,
        EntailmentLabel::Contradiction,
        EntailmentLabel::Unknown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn short(self) -> char {
        match self {
            EntailmentLabel::Entailment => 'E',
            EntailmentLabel::Contradiction => 'C',
            EntailmentLabel::Unknown => 'U',
        }
    }
}

impl fmt::Display for EntailmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntailmentLabel::Entailment => "Entailment",
            EntailmentLabel::Contradiction => "Contradiction",
            EntailmentLabel::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

impl From<Answer> for EntailmentLabel {
    fn from(a: Answer) -> Self {
        match a {
            Answer::Yes => EntailmentLabel::Entailment,
            Answer::No => EntailmentLabel::Contradiction,
        }
    }
}

/// One follow-up question with the user's answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaTurn {
    pub question: String,
    pub answer: Answer,
}

impl QaTurn {
    pub fn new(question: impl Into<String>, answer: Answer) -> Self {
        Self {
            question: question.into(),
            answer,
        }
    }
}

/// Token span inside one rule sentence; `end` is inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One flattened dialog state: what the system has seen so far and what it
/// should do next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogExample {
    pub id: String,
    pub rule: RuleDocument,
    pub question: String,
    pub scenario: String,
    pub history: Vec<QaTurn>,
    pub decision: Decision,
    /// Present exactly when `decision` is `Inquire`.
    pub follow_up: Option<String>,
    #[serde(default)]
    pub evidence: Vec<QaTurn>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExampleError {
    #[error("example {0}: Inquire target without a follow-up question")]
    MissingFollowUp(String),
    #[error("example {0}: follow-up question on a final decision")]
    UnexpectedFollowUp(String),
}

impl DialogExample {
    pub fn validate(&self) -> Result<(), ExampleError> {
        match (self.decision, &self.follow_up) {
            (Decision::Inquire, None) => Err(ExampleError::MissingFollowUp(self.id.clone())),
            (d, Some(_)) if d != Decision::Inquire => {
                Err(ExampleError::UnexpectedFollowUp(self.id.clone()))
            }
            _ => Ok(()),
        }
    }
}
