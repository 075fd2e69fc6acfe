//! Heuristic supervision: underspecified spans by minimum edit distance and
//! per-sentence entailment labels from answered questions.

use super::segment::RuleDocument;
use super::tokenize::trim_question;
use super::types::{EntailmentLabel, QaTurn, Span};

/// Token-level Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The span of `doc` closest (by token edit distance) to the trimmed form of
/// `question`. Ties go to the shorter span, then the earlier start in
/// document order.
pub fn label_span(doc: &RuleDocument, question: &str) -> Span {
    let target = trim_question(question);
    let (sentence, start, end, _) = best_span(doc, &target);
    doc.span(sentence, start, end)
}

/// Returns `(sentence, start, end, distance)`.
///
/// For each start position one DP row is extended token by token, so every
/// span ending at `e` is scored from the row for `e − 1`.
pub(crate) fn best_span(doc: &RuleDocument, target: &[String]) -> (usize, usize, usize, usize) {
    let q = target.len();
    let mut best: Option<(usize, usize, usize, usize, usize)> = None; // dist, len, sent, start, end
    let mut prev = vec![0usize; q + 1];
    let mut cur = vec![0usize; q + 1];
    for (si, sentence) in doc.sentences.iter().enumerate() {
        let toks = &sentence.tokens;
        for s in 0..toks.len() {
            prev.iter_mut().enumerate().for_each(|(j, v)| *v = j);
            for e in s..toks.len() {
                cur[0] = e - s + 1;
                for j in 1..=q {
                    let sub = prev[j - 1] + usize::from(toks[e] != target[j - 1]);
                    cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
                }
                std::mem::swap(&mut prev, &mut cur);
                let cand = (prev[q], e - s + 1, si, s, e);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
    }
    let (dist, _, sent, start, end) = best.expect("document has at least one token");
    (sent, start, end, dist)
}

/// Labels each rule sentence from answered questions: a sentence holding the
/// span of a question answered Yes is entailed, No is contradicted, and
/// untouched sentences stay unknown. Evidence is applied before history, and
/// within each list later turns overwrite earlier ones.
pub fn label_entailment(
    doc: &RuleDocument,
    history: &[QaTurn],
    evidence: &[QaTurn],
) -> Vec<EntailmentLabel> {
    let mut labels = vec![EntailmentLabel::Unknown; doc.len()];
    for turn in evidence.iter().chain(history) {
        let span = label_span(doc, &turn.question);
        labels[span.sentence] = turn.answer.into();
    }
    labels
}
