//! Coarse-to-fine underspecified span extraction.
//!
//! Sentence scores ζ come from the "unknown" entailment logits (or from a
//! dedicated sentence head in the separate sentence-identification mode).
//! Token start/end scores are `γ_ij = (w_s·u_ij)·ζ_i` and
//! `δ_ij = (w_e·u_ij)·ζ_i`; the extracted span maximizes `γ_start·δ_end`
//! over start ≤ end inside one sentence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EntailmentLabel, RuleDocument, Span};
use crate::numeric::{NumericError, ParamId, ParamStore, Result, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpanConfig {
    /// Modulate token scores by sentence scores. Off reproduces "w/o c2f".
    pub coarse_to_fine: bool,
    /// Predict the span's sentence with a separate head and loss instead of
    /// the unknown-state scores.
    pub sentence_head: bool,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self {
            coarse_to_fine: true,
            sentence_head: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpanError {
    #[error("the sentence-identification head is disabled in this configuration")]
    SentenceHeadDisabled,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Debug)]
pub struct SpanHead {
    config: SpanConfig,
    w_start: ParamId,
    w_end: ParamId,
    /// `w_ζ`. No bias: a shared offset cancels in the softmax over sentences.
    sentence: Option<ParamId>,
}

/// A chosen span as flat token indices plus its sentence-local form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpanChoice {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl SpanChoice {
    pub fn to_span(self, doc: &RuleDocument) -> Span {
        doc.span(self.sentence, self.start, self.end)
    }
}

impl SpanHead {
    pub fn new(
        store: &mut ParamStore,
        dim: usize,
        config: SpanConfig,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let sentence = if config.sentence_head {
            Some(store.add_glorot("span.w_zeta", &[2 * dim], rng)?)
        } else {
            None
        };
        Ok(Self {
            w_start: store.add_glorot("span.w_start", &[dim], rng)?,
            w_end: store.add_glorot("span.w_end", &[dim], rng)?,
            sentence,
            config,
        })
    }

    pub fn bind(store: &ParamStore, config: SpanConfig) -> Option<Self> {
        let sentence = if config.sentence_head {
            Some(store.id("span.w_zeta")?)
        } else {
            None
        };
        Some(Self {
            w_start: store.id("span.w_start")?,
            w_end: store.id("span.w_end")?,
            sentence,
            config,
        })
    }

    pub fn config(&self) -> &SpanConfig {
        &self.config
    }

    /// Sentence-head logits `w_ζ·[k_i;v_i]`.
    pub fn sentence_logits(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        kv: Var,
    ) -> std::result::Result<Var, SpanError> {
        let w = self.sentence.ok_or(SpanError::SentenceHeadDisabled)?;
        let w = tape.param(store, w);
        Ok(tape.matvec(kv, w)?)
    }

    /// `(γ, δ)` over all rule tokens. `zeta` of `None` means no modulation.
    pub fn span_scores(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        tokens: Var,
        zeta: Option<Var>,
        token_sentence: &[usize],
    ) -> Result<(Var, Var)> {
        let ws = tape.param(store, self.w_start);
        let we = tape.param(store, self.w_end);
        let mut gamma = tape.matvec(tokens, ws)?;
        let mut delta = tape.matvec(tokens, we)?;
        if let Some(z) = zeta {
            let per_token = tape.gather(z, token_sentence)?;
            gamma = tape.mul(gamma, per_token)?;
            delta = tape.mul(delta, per_token)?;
        }
        Ok((gamma, delta))
    }
}

/// `ζ = softmax(β_unknown)` from an `[M × 3]` entailment logit matrix.
pub fn sentence_scores(tape: &mut Tape, entail_logits: Var) -> Result<Var> {
    let unknown = tape.column(entail_logits, EntailmentLabel::Unknown.index())?;
    Ok(tape.softmax(unknown))
}

/// Best within-sentence pair under `γ_s · δ_e`; ties go to the shorter span,
/// then the earlier start. `lengths` gives the token count of each sentence
/// in document order; `gamma`/`delta` are flat over all tokens.
pub fn extract(gamma: &[f64], delta: &[f64], lengths: &[usize]) -> SpanChoice {
    let mut best: Option<SpanChoice> = None;
    let mut offset = 0;
    for (sentence, &n) in lengths.iter().enumerate() {
        for s in 0..n {
            for e in s..n {
                let score = gamma[offset + s] * delta[offset + e];
                let better = match best {
                    None => true,
                    Some(b) => score > b.score || (score == b.score && e - s < b.end - b.start),
                };
                if better {
                    best = Some(SpanChoice {
                        sentence,
                        start: s,
                        end: e,
                        score,
                    });
                }
            }
        }
        offset += n;
    }
    best.expect("at least one token")
}

/// Pointer loss `−log softmax(γ)_s − log softmax(δ)_e` over all rule tokens;
/// exactly zero when there is no gold span (non-Inquire targets).
pub fn span_loss(
    tape: &mut Tape,
    gamma: Var,
    delta: Var,
    gold: Option<(usize, usize)>,
) -> Result<Var> {
    match gold {
        None => Ok(tape.constant(Tensor::scalar(0.0))),
        Some((s, e)) => {
            let a = tape.cross_entropy(gamma, s)?;
            let b = tape.cross_entropy(delta, e)?;
            tape.add(a, b)
        }
    }
}

/// `L_dec + λ1·L_entail + λ2·L_span`.
pub fn total_loss(
    tape: &mut Tape,
    l_dec: Var,
    l_entail: Var,
    l_span: Var,
    lambda1: f64,
    lambda2: f64,
) -> Result<Var> {
    let e = tape.scale(l_entail, lambda1);
    let s = tape.scale(l_span, lambda2);
    let t = tape.add(l_dec, e)?;
    tape.add(t, s)
}

/// Flat index of a sentence-local token position.
pub fn flat_index(lengths: &[usize], sentence: usize, token: usize) -> usize {
    lengths[..sentence].iter().sum::<usize>() + token
}
