use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, CLS};
use crate::corpus::{tokenize, QaTurn, RuleDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    Rule,
    Question,
    Scenario,
    History,
}

impl SegmentKind {
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Position of the segment's marker.
    pub marker: usize,
    /// Positions of the segment's own tokens (after the marker).
    pub tokens: Range<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub max_len: usize,
    /// Emit the scenario segment even when the scenario is empty.
    pub emit_empty_scenario: bool,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            max_len: 384,
            emit_empty_scenario: true,
        }
    }
}

/// The marker sequence
/// `[CLS] r_1 … [CLS] r_M [CLS] q [CLS] s [CLS] h_1 … [CLS] h_P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedInput {
    pub tokens: Vec<String>,
    pub token_ids: Vec<usize>,
    /// Segment index of every position (markers included).
    pub segment_of: Vec<usize>,
    pub segments: Vec<Segment>,
    pub num_rule_sentences: usize,
    /// Rule-token positions in document order, with their sentence index.
    pub rule_tokens: Vec<(usize, usize)>,
    /// History turns dropped (oldest first) to respect the length limit.
    pub history_dropped: usize,
    /// Per position: a rule token whose word occurs in the user's text, or a
    /// user token whose word occurs in the rule. Markers never match.
    pub exact_match: Vec<bool>,
}

impl EncodedInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn markers(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.marker).collect()
    }

    pub fn rule_markers(&self) -> Vec<usize> {
        self.segments[..self.num_rule_sentences]
            .iter()
            .map(|s| s.marker)
            .collect()
    }

    /// Markers of the segments the tracker reads, in reading order:
    /// question, scenario, then history oldest first.
    pub fn read_markers(&self) -> Vec<usize> {
        self.segments[self.num_rule_sentences..]
            .iter()
            .map(|s| s.marker)
            .collect()
    }

    pub fn segment_text(&self, segment: usize) -> String {
        self.tokens[self.segments[segment].tokens.clone()].join(" ")
    }

    pub fn kinds(&self) -> Vec<usize> {
        self.segment_of
            .iter()
            .map(|&s| self.segments[s].kind.index())
            .collect()
    }
}

/// Lays out one dialog state. History is rendered as its question tokens
/// followed by the answer token. When the result is longer than
/// `config.max_len`, history turns are dropped oldest first, then the
/// scenario and the question are cut from the end; rule text is never cut.
pub fn build_sequence(
    rule: &RuleDocument,
    question: &str,
    scenario: &str,
    history: &[QaTurn],
    vocab: &Vocabulary,
    config: &SequenceConfig,
) -> EncodedInput {
    let rule_parts: Vec<Vec<String>> = rule.sentences.iter().map(|s| s.tokens.clone()).collect();
    let mut question = tokenize(question);
    let mut scenario = tokenize(scenario);
    let mut turns: Vec<Vec<String>> = history
        .iter()
        .map(|t| {
            let mut toks = tokenize(&t.question);
            toks.push(t.answer.as_str().to_string());
            toks
        })
        .collect();
    let with_scenario = config.emit_empty_scenario || !scenario.is_empty();

    let seg_len = |parts: &[Vec<String>]| parts.iter().map(|p| p.len() + 1).sum::<usize>();
    let fixed = seg_len(&rule_parts);
    let total = |q: &[String], s: &[String], h: &[Vec<String>]| {
        fixed + q.len() + 1 + if with_scenario { s.len() + 1 } else { 0 } + seg_len(h)
    };
    let mut history_dropped = 0;
    while total(&question, &scenario, &turns) > config.max_len && !turns.is_empty() {
        turns.remove(0);
        history_dropped += 1;
    }
    let over = total(&question, &scenario, &turns).saturating_sub(config.max_len);
    if over > 0 {
        let cut = over.min(scenario.len());
        scenario.truncate(scenario.len() - cut);
        let cut = (over - cut).min(question.len());
        question.truncate(question.len() - cut);
    }
    if history_dropped > 0 || over > 0 {
        log::warn!(
            "sequence over {} tokens: dropped {history_dropped} history turns, cut {over} tokens",
            config.max_len
        );
    }

    let mut out = EncodedInput {
        tokens: Vec::new(),
        token_ids: Vec::new(),
        segment_of: Vec::new(),
        segments: Vec::new(),
        num_rule_sentences: rule_parts.len(),
        rule_tokens: Vec::new(),
        history_dropped,
        exact_match: Vec::new(),
    };
    let push = |out: &mut EncodedInput, kind: SegmentKind, toks: &[String]| {
        let seg = out.segments.len();
        let marker = out.tokens.len();
        out.tokens.push(CLS.to_string());
        out.token_ids.push(Vocabulary::CLS_ID);
        out.segment_of.push(seg);
        for t in toks {
            out.token_ids.push(vocab.id(t));
            out.tokens.push(t.clone());
            out.segment_of.push(seg);
        }
        out.segments.push(Segment {
            kind,
            marker,
            tokens: marker + 1..out.tokens.len(),
        });
    };
    for (i, part) in rule_parts.iter().enumerate() {
        push(&mut out, SegmentKind::Rule, part);
        let seg = &out.segments[i];
        let positions: Vec<(usize, usize)> = seg.tokens.clone().map(|p| (p, i)).collect();
        out.rule_tokens.extend(positions);
    }
    push(&mut out, SegmentKind::Question, &question);
    if with_scenario {
        push(&mut out, SegmentKind::Scenario, &scenario);
    }
    for turn in &turns {
        push(&mut out, SegmentKind::History, turn);
    }
    out.exact_match = exact_match(&out);
    out
}

fn exact_match(input: &EncodedInput) -> Vec<bool> {
    use std::collections::HashSet;
    let is_rule = |p: usize| input.segment_of[p] < input.num_rule_sentences;
    let words = |rule: bool| -> HashSet<&str> {
        (0..input.len())
            .filter(|&p| is_rule(p) == rule && input.tokens[p] != CLS)
            .map(|p| input.tokens[p].as_str())
            .collect()
    };
    let (rule_words, user_words) = (words(true), words(false));
    (0..input.len())
        .map(|p| {
            let other = if is_rule(p) { &user_words } else { &rule_words };
            input.tokens[p] != CLS && other.contains(input.tokens[p].as_str())
        })
        .collect()
}
