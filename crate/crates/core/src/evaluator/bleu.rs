use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuScores {
    pub bleu1: f64,
    pub bleu4: f64,
}

impl BleuScores {
    pub fn compute(
        candidates: &[Vec<String>],
        references: &[Vec<String>],
    ) -> Result<Self, EvalError> {
        Ok(Self {
            bleu1: bleu(candidates, references, 1, false)?,
            bleu4: bleu(candidates, references, 4, false)?,
        })
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU with one reference per candidate: clipped n-gram
/// counts are pooled over the corpus before taking precisions, uniform
/// weights over orders 1..=max_n, brevity penalty on pooled lengths.
///
/// Orders for which no candidate has any n-gram (every candidate shorter
/// than n) are left out of the mean, so a corpus of short exact matches
/// still scores 1.
///
/// With `smoothing`, orders ≥ 2 use add-one precisions; meant for
/// sentence-level diagnostics only.
pub fn bleu(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    max_n: usize,
    smoothing: bool,
) -> Result<f64, EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            preds: candidates.len(),
            golds: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(EvalError::Empty);
    }
    if max_n == 0 {
        return Err(EvalError::ZeroOrder);
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    if c == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=max_n {
        let (mut matched, mut total) = (0usize, 0usize);
        for (cand, reference) in candidates.iter().zip(references) {
            let ref_counts = ngrams(reference, n);
            for (gram, count) in ngrams(cand, n) {
                matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
            total += cand.len().saturating_sub(n - 1);
        }
        if total == 0 {
            continue;
        }
        orders += 1;
        let p = if smoothing && n > 1 {
            (matched + 1) as f64 / (total + 1) as f64
        } else if matched == 0 {
            return Ok(0.0);
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    Ok(bp * (log_sum / orders as f64).exp())
}

/// [`bleu`] over raw strings, tokenized with the corpus tokenizer.
pub fn bleu_text<S: AsRef<str>>(
    candidates: &[S],
    references: &[S],
    max_n: usize,
) -> Result<f64, EvalError> {
    let tok = |xs: &[S]| xs.iter().map(|s| tokenize(s.as_ref())).collect::<Vec<_>>();
    bleu(&tok(candidates), &tok(references), max_n, false)
}
