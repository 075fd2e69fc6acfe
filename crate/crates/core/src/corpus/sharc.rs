//! ShARC-format ingestion.
//!
//! The official files are JSON arrays of records:
//!
//! | field          | use                                            |
//! |----------------|------------------------------------------------|
//! | `utterance_id` | example id                                     |
//! | `snippet`      | rule text                                      |
//! | `question`     | initial question                               |
//! | `scenario`     | user scenario (may be empty)                   |
//! | `history`      | `[{follow_up_question, follow_up_answer}]`     |
//! | `evidence`     | same shape as `history`                        |
//! | `answer`       | `Yes` / `No` / `Irrelevant`, else the follow-up |
//!
//! Extra fields (`tree_id`, `source_url`, …) are ignored.

use std::path::Path;

use serde::Deserialize;

use super::segment::segment_rules;
use super::types::{Answer, Decision, DialogExample, QaTurn};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0} is not a JSON array of records: {1}")]
    NotAnArray(String, serde_json::Error),
    #[error("record {id}: {reason}")]
    Record { id: String, reason: String },
}

#[derive(Deserialize)]
struct RawTurn {
    follow_up_question: String,
    follow_up_answer: String,
}

#[derive(Deserialize)]
struct RawRecord {
    utterance_id: String,
    snippet: String,
    question: String,
    #[serde(default)]
    scenario: String,
    #[serde(default)]
    history: Vec<RawTurn>,
    #[serde(default)]
    evidence: Vec<RawTurn>,
    answer: String,
}

fn parse_answer(id: &str, raw: &str) -> Result<Answer, IngestError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "yes" => Ok(Answer::Yes),
        "no" => Ok(Answer::No),
        other => Err(IngestError::Record {
            id: id.to_string(),
            reason: format!("follow-up answer {other:?} is not yes/no"),
        }),
    }
}

fn convert_turns(id: &str, turns: Vec<RawTurn>) -> Result<Vec<QaTurn>, IngestError> {
    turns
        .into_iter()
        .map(|t| {
            Ok(QaTurn::new(
                t.follow_up_question,
                parse_answer(id, &t.follow_up_answer)?,
            ))
        })
        .collect()
}

fn convert(rec: RawRecord) -> Result<DialogExample, IngestError> {
    let id = rec.utterance_id;
    let rule = segment_rules(&rec.snippet).map_err(|e| IngestError::Record {
        id: id.clone(),
        reason: e.to_string(),
    })?;
    let (decision, follow_up) = match rec.answer.trim().to_ascii_lowercase().as_str() {
        "yes" => (Decision::Yes, None),
        "no" => (Decision::No, None),
        "irrelevant" => (Decision::Irrelevant, None),
        "" => {
            return Err(IngestError::Record {
                id,
                reason: "empty answer".into(),
            })
        }
        _ => (Decision::Inquire, Some(rec.answer)),
    };
    Ok(DialogExample {
        history: convert_turns(&id, rec.history)?,
        evidence: convert_turns(&id, rec.evidence)?,
        id,
        rule,
        question: rec.question,
        scenario: rec.scenario,
        decision,
        follow_up,
    })
}

/// Parses ShARC records from JSON text.
pub fn parse_sharc(json: &str, source: &str) -> Result<Vec<DialogExample>, IngestError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(json).map_err(|e| IngestError::NotAnArray(source.to_string(), e))?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let id = v
                .get("utterance_id")
                .and_then(|x| x.as_str())
                .map_or_else(|| format!("#{i}"), str::to_string);
            let rec: RawRecord = serde_json::from_value(v).map_err(|e| IngestError::Record {
                id,
                reason: e.to_string(),
            })?;
            convert(rec)
        })
        .collect()
}

pub fn load_sharc(path: impl AsRef<Path>) -> Result<Vec<DialogExample>, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_sharc(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"[
      {"utterance_id": "u1", "tree_id": "t", "source_url": "http://x",
       "snippet": "You can get it if:\n\n* you live in Wales\n* you are 18",
       "question": "Can I get it?", "scenario": "",
       "history": [{"follow_up_question": "Do you live in Wales?", "follow_up_answer": "Yes"}],
       "evidence": [], "answer": "Are you 18?"},
      {"utterance_id": "u2", "snippet": "Rule.", "question": "Q?", "scenario": "S",
       "history": [], "evidence": [{"follow_up_question": "A?", "follow_up_answer": "no"}],
       "answer": "Irrelevant"}
    ]"#;

    #[test]
    fn parses_records() {
        let exs = parse_sharc(SAMPLE, "sample").unwrap();
        assert_eq!(exs.len(), 2);
        assert_eq!(exs[0].decision, Decision::Inquire);
        assert_eq!(exs[0].follow_up.as_deref(), Some("Are you 18?"));
        assert_eq!(exs[0].rule.len(), 3);
        assert_eq!(exs[0].history[0].answer, Answer::Yes);
        assert_eq!(exs[1].decision, Decision::Irrelevant);
        assert_eq!(exs[1].evidence[0].answer, Answer::No);
        for e in &exs {
            e.validate().unwrap();
        }
    }

    #[test]
    fn malformed_record_names_its_id() {
        let bad = r#"[{"utterance_id": "broken-7", "snippet": "x", "question": "q"}]"#;
        let err = parse_sharc(bad, "bad").unwrap_err();
        assert!(err.to_string().contains("broken-7"), "{err}");
        let bad_answer = r#"[{"utterance_id": "b8", "snippet": "Rule.", "question": "q", "answer": "Yes",
            "history": [{"follow_up_question": "A?", "follow_up_answer": "perhaps"}]}]"#;
        assert!(parse_sharc(bad_answer, "bad")
            .unwrap_err()
            .to_string()
            .contains("b8"));
        let empty_rule =
            r#"[{"utterance_id": "b9", "snippet": " ", "question": "q", "answer": "Yes"}]"#;
        assert!(parse_sharc(empty_rule, "bad")
            .unwrap_err()
            .to_string()
            .contains("b9"));
    }
}
