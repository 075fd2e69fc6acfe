use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, LabeledExample};

pub const VOCAB_FORMAT_VERSION: u32 = 1;
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";

/// Token → id map. Ids 0 and 1 are the unknown and marker tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    tokens: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("vocabulary io: {0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("vocabulary format version {0} is not supported")]
    Version(u32),
    #[error("vocabulary must start with {UNK} and {CLS} and have no duplicates")]
    Malformed,
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;
    pub const CLS_ID: usize = 1;

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, VocabError> {
        if tokens.len() < 2 || tokens[0] != UNK || tokens[1] != CLS {
            return Err(VocabError::Malformed);
        }
        let ids: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if ids.len() != tokens.len() {
            return Err(VocabError::Malformed);
        }
        Ok(Self { tokens, ids })
    }

    /// Every token seen at least `min_count` times in the texts, sorted by
    /// descending count then alphabetically. "yes" and "no" are always
    /// present since history turns end with them.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for t in tokenize(text) {
                *counts.entry(t).or_default() += 1;
            }
        }
        for t in ["yes", "no"] {
            counts.entry(t.to_string()).or_insert(min_count.max(1));
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens = vec![UNK.to_string(), CLS.to_string()];
        tokens.extend(ranked.into_iter().map(|(t, _)| t));
        Self::from_tokens(tokens).expect("built vocabulary is well formed")
    }

    /// Vocabulary over every text field of a labeled corpus.
    pub fn from_corpus(examples: &[LabeledExample], min_count: usize) -> Self {
        let texts = examples.iter().flat_map(|l| {
            let e = &l.example;
            std::iter::once(e.rule.raw.as_str())
                .chain([e.question.as_str(), e.scenario.as_str()])
                .chain(e.history.iter().map(|t| t.question.as_str()))
                .chain(e.follow_up.as_deref())
        });
        Self::build(texts, min_count)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VocabError> {
        let file = VocabFile {
            version: VOCAB_FORMAT_VERSION,
            tokens: self.tokens.clone(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        let file: VocabFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.version != VOCAB_FORMAT_VERSION {
            return Err(VocabError::Version(file.version));
        }
        Self::from_tokens(file.tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_lookup() {
        let v = Vocabulary::build(["a b b", "c b a"], 1);
        assert_eq!(v.token(0), Some(UNK));
        assert_eq!(v.token(1), Some(CLS));
        assert_eq!(v.token(2), Some("b"));
        assert_eq!(v.id("zzz"), Vocabulary::UNK_ID);
        assert_ne!(v.id("yes"), Vocabulary::UNK_ID);
        let pruned = Vocabulary::build(["a b b", "c b a"], 2);
        assert_eq!(pruned.id("c"), Vocabulary::UNK_ID);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        let v = Vocabulary::build(["do you live in wales ?"], 1);
        v.save(&path).unwrap();
        assert_eq!(Vocabulary::load(&path).unwrap(), v);
        std::fs::write(&path, r#"{"version": 2, "tokens": ["[UNK]", "[CLS]"]}"#).unwrap();
        assert!(matches!(
            Vocabulary::load(&path),
            Err(VocabError::Version(2))
        ));
        assert!(Vocabulary::from_tokens(vec!["x".into()]).is_err());
    }
}
