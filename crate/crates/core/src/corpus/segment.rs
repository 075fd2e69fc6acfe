use serde::{Deserialize, Serialize};

use super::tokenize::{detokenize, tokenize_with_offsets};
use super::types::Span;

/// One condition-bearing unit of a rule text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSentence {
    pub text: String,
    pub tokens: Vec<String>,
    /// Byte range of each token in the raw document.
    pub token_offsets: Vec<(usize, usize)>,
    /// Byte range of the sentence in the raw document.
    pub start: usize,
    pub end: usize,
    pub bullet: bool,
}

impl RuleSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Rule text split into sentences at sentence boundaries and bullet points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDocument {
    pub raw: String,
    pub sentences: Vec<RuleSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule text contains no sentences")]
pub struct EmptyDocument;

impl RuleDocument {
    pub fn parse(text: &str) -> Result<Self, EmptyDocument> {
        segment_rules(text)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(RuleSentence::len).sum()
    }

    /// Builds the span for an inclusive token range of one sentence.
    pub fn span(&self, sentence: usize, start: usize, end: usize) -> Span {
        let toks = &self.sentences[sentence].tokens[start..=end];
        Span {
            sentence,
            start,
            end,
            text: detokenize(toks),
        }
    }

    /// Byte range in [`RuleDocument::raw`] covered by the span's tokens.
    pub fn span_byte_range(&self, span: &Span) -> (usize, usize) {
        let offs = &self.sentences[span.sentence].token_offsets;
        (offs[span.start].0, offs[span.end].1)
    }

    /// Same range measured in Unicode scalar values.
    pub fn span_char_range(&self, span: &Span) -> (usize, usize) {
        let (s, e) = self.span_byte_range(span);
        (self.raw[..s].chars().count(), self.raw[..e].chars().count())
    }
}

fn bullet_marker_len(line: &str) -> Option<usize> {
    let mut chars = line.char_indices();
    let (_, first) = chars.next()?;
    let after = |idx: usize| {
        line[idx..]
            .chars()
            .next()
            .map_or(false, char::is_whitespace)
            .then_some(idx)
    };
    match first {
        '*' | '-' | '•' | '+' | '·' => after(first.len_utf8()),
        c if c.is_ascii_digit() => {
            let digits = line.chars().take_while(char::is_ascii_digit).count();
            match line[digits..].chars().next() {
                Some('.') | Some(')') => after(digits + 1),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Splits rule text into sentences. Bullet lines (`*`, `-`, `•`, `+` or a
/// numbered marker such as `1.`) become one sentence each; other lines are
/// split after `.`, `!` or `?` when followed by whitespace or the line end.
pub fn segment_rules(text: &str) -> Result<RuleDocument, EmptyDocument> {
    let mut sentences = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let content = line.trim_end_matches(['\n', '\r']);
        let indent = content.len() - content.trim_start().len();
        let body = &content[indent..];
        let base = line_start + indent;
        if let Some(marker) = bullet_marker_len(body) {
            let rest = &body[marker..];
            let lead = rest.len() - rest.trim_start().len();
            push_sentence(
                text,
                base + marker + lead,
                base + body.trim_end().len(),
                true,
                &mut sentences,
            );
        } else {
            let mut s = 0;
            let bytes = body.as_bytes();
            for (i, c) in body.char_indices() {
                if matches!(c, '.' | '!' | '?') {
                    let next = bytes.get(i + 1).copied();
                    if next.map_or(true, |b| b.is_ascii_whitespace()) {
                        push_sentence(text, base + s, base + i + 1, false, &mut sentences);
                        s = i + 1;
                    }
                }
            }
            push_sentence(text, base + s, base + body.len(), false, &mut sentences);
        }
        line_start += line.len();
    }
    if sentences.is_empty() {
        return Err(EmptyDocument);
    }
    Ok(RuleDocument {
        raw: text.to_string(),
        sentences,
    })
}

fn push_sentence(raw: &str, start: usize, end: usize, bullet: bool, out: &mut Vec<RuleSentence>) {
    if start >= end {
        return;
    }
    let slice = &raw[start..end];
    let trimmed_start = start + (slice.len() - slice.trim_start().len());
    let trimmed_end = start + slice.trim_end().len();
    if trimmed_start >= trimmed_end {
        return;
    }
    let piece = &raw[trimmed_start..trimmed_end];
    let toks = tokenize_with_offsets(piece);
    if !toks
        .iter()
        .any(|t| t.text.chars().any(char::is_alphanumeric))
    {
        return;
    }
    out.push(RuleSentence {
        text: piece.to_string(),
        token_offsets: toks
            .iter()
            .map(|t| (t.start + trimmed_start, t.end + trimmed_start))
            .collect(),
        tokens: toks.into_iter().map(|t| t.text).collect(),
        start: trimmed_start,
        end: trimmed_end,
        bullet,
    });
}
