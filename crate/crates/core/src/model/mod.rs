//! The full network: encoder → memory tracker → decision / entailment
//! heads → span scoring, with plain-value prediction and save/load.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Decision, DialogExample, LabeledExample, QaTurn, RuleDocument, Span};
use crate::encoder::{
    build_sequence, EncodedInput, Encoder, EncoderConfig, SequenceConfig, VocabError, Vocabulary,
};
use crate::heads::{
    argmax_first, decision_loss, entail_loss, entailment_output, DecisionHeads, EntailmentOutput,
};
use crate::numeric::{
    read_checkpoint, restore_into, write_checkpoint, NumericError, ParamStore, Tape, Tensor, Var,
};
use crate::span::{
    extract, flat_index, sentence_scores, span_loss, SpanChoice, SpanConfig, SpanError, SpanHead,
};
use crate::tracker::{Tracker, TrackerConfig, TrackerError};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model metadata: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model format version {0} is not supported")]
    Version(u32),
    #[error("example {id}: {reason}")]
    Example { id: String, reason: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub sequence: SequenceConfig,
    pub tracker: TrackerConfig,
    pub span: SpanConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    version: u32,
    config: ModelConfig,
}

/// Tape handles for one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub decision_logits: Var,
    pub attention: Var,
    pub entail_logits: Var,
    /// Sentence scores used to modulate token scores, if any.
    pub zeta: Option<Var>,
    /// Raw sentence-head logits in sentence-head mode.
    pub sentence_logits: Option<Var>,
    pub gamma: Var,
    pub delta: Var,
    pub gates: Vec<Var>,
    /// Token count of each rule sentence.
    pub lengths: Vec<usize>,
}

/// Unweighted loss terms of one example.
#[derive(Clone, Copy, Debug)]
pub struct LossParts {
    pub decision: Var,
    pub entail: Var,
    pub span: Var,
    /// Sentence-head cross-entropy; zero outside sentence-head mode.
    pub sentence: Var,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub decision: Decision,
    /// Softmax over Yes/No/Irrelevant/Inquire.
    pub decision_probabilities: [f64; 4],
    pub attention: Vec<f64>,
    pub entailment: EntailmentOutput,
    /// One gate vector (one value per rule sentence) per read.
    pub gates: Vec<Vec<f64>>,
    pub zeta: Option<Vec<f64>>,
    /// Highest-scoring span regardless of the decision.
    pub best_span: Span,
    pub span_score: f64,
    /// History turns dropped to fit the sequence length.
    pub history_dropped: usize,
}

impl Prediction {
    /// The span to ask about, present only for Inquire decisions.
    pub fn inquiry(&self) -> Option<&Span> {
        (self.decision == Decision::Inquire).then_some(&self.best_span)
    }
}

#[derive(Clone, Debug)]
pub struct EmtModel {
    config: ModelConfig,
    vocab: Vocabulary,
    store: ParamStore,
    encoder: Encoder,
    tracker: Tracker,
    heads: DecisionHeads,
    span: SpanHead,
}

impl EmtModel {
    pub fn new(config: ModelConfig, vocab: Vocabulary, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.encoder.dim;
        let encoder = Encoder::new(&mut store, vocab.len(), config.encoder.clone(), &mut rng)?;
        let tracker = Tracker::new(&mut store, d, config.tracker.clone(), &mut rng)?;
        let heads = DecisionHeads::new(&mut store, d, &mut rng)?;
        let span = SpanHead::new(&mut store, d, config.span.clone(), &mut rng)?;
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            tracker,
            heads,
            span,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn encode_input(
        &self,
        rule: &RuleDocument,
        question: &str,
        scenario: &str,
        history: &[QaTurn],
    ) -> EncodedInput {
        build_sequence(
            rule,
            question,
            scenario,
            history,
            &self.vocab,
            &self.config.sequence,
        )
    }

    pub fn encode_example(&self, ex: &DialogExample) -> EncodedInput {
        self.encode_input(&ex.rule, &ex.question, &ex.scenario, &ex.history)
    }

    /// Runs the network on `tape`. Dropout is active only with `dropout_rng`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        input: &EncodedInput,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Forward> {
        self.forward_with(&self.store, tape, input, dropout_rng)
    }

    /// Same as [`EmtModel::forward`] with parameter values taken from `store`,
    /// which must have this model's layout.
    pub fn forward_with(
        &self,
        store: &ParamStore,
        tape: &mut Tape,
        input: &EncodedInput,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Forward> {
        let enc = self.encoder.encode(tape, store, input, dropout_rng)?;
        let reads = (enc.num_reads > 0).then_some(enc.reads);
        let tracked = self.tracker.track(tape, store, enc.sentences, reads)?;
        let kv = tape.concat(tracked.keys, tracked.values)?;
        let (c, attention) = self.heads.summarize(tape, store, kv)?;
        let decision_logits = self.heads.decide(tape, store, c)?;
        let entail_logits = self.heads.entail(tape, store, kv)?;

        let (zeta, sentence_logits) = if self.config.span.sentence_head {
            let logits = self.span.sentence_logits(tape, store, kv)?;
            let z = tape.softmax(logits);
            (self.config.span.coarse_to_fine.then_some(z), Some(logits))
        } else if self.config.span.coarse_to_fine {
            (Some(sentence_scores(tape, entail_logits)?), None)
        } else {
            (None, None)
        };
        let token_sentence: Vec<usize> = input.rule_tokens.iter().map(|&(_, s)| s).collect();
        let (gamma, delta) =
            self.span
                .span_scores(tape, store, enc.tokens, zeta, &token_sentence)?;
        let mut lengths = vec![0; input.num_rule_sentences];
        for &s in &token_sentence {
            lengths[s] += 1;
        }
        Ok(Forward {
            decision_logits,
            attention,
            entail_logits,
            zeta,
            sentence_logits,
            gamma,
            delta,
            gates: tracked.gates,
            lengths,
        })
    }

    /// Loss terms against the supervision of `ex`. The span term is
    /// present only for Inquire targets.
    pub fn losses(&self, tape: &mut Tape, fwd: &Forward, ex: &LabeledExample) -> Result<LossParts> {
        let invalid = |reason: String| ModelError::Example {
            id: ex.example.id.clone(),
            reason,
        };
        if ex.entailment.len() != fwd.lengths.len() {
            return Err(invalid(format!(
                "{} entailment labels for {} rule sentences",
                ex.entailment.len(),
                fwd.lengths.len()
            )));
        }
        let decision = decision_loss(tape, fwd.decision_logits, ex.example.decision)?;
        let entail = entail_loss(tape, fwd.entail_logits, &ex.entailment)?;
        let gold = match (&ex.span, ex.example.decision) {
            (Some(span), Decision::Inquire) => {
                let fits = span.sentence < fwd.lengths.len()
                    && span.start <= span.end
                    && span.end < fwd.lengths[span.sentence];
                if !fits {
                    return Err(invalid(format!(
                        "span {}:{}..={} outside the rule",
                        span.sentence, span.start, span.end
                    )));
                }
                let s = flat_index(&fwd.lengths, span.sentence, span.start);
                let e = flat_index(&fwd.lengths, span.sentence, span.end);
                Some((s, e, span.sentence))
            }
            _ => None,
        };
        let span = span_loss(tape, fwd.gamma, fwd.delta, gold.map(|(s, e, _)| (s, e)))?;
        let sentence = match (fwd.sentence_logits, gold) {
            (Some(logits), Some((_, _, i))) => tape.cross_entropy(logits, i)?,
            _ => tape.constant(Tensor::scalar(0.0)),
        };
        Ok(LossParts {
            decision,
            entail,
            span,
            sentence,
        })
    }

    pub fn predict_input(&self, rule: &RuleDocument, input: &EncodedInput) -> Result<Prediction> {
        let mut tape = Tape::new();
        let fwd = self.forward(&mut tape, input, None)?;
        let logits = tape.value(fwd.decision_logits).data().to_vec();
        let mut probs = [0.0; 4];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        for (p, z) in probs.iter_mut().zip(&logits) {
            *p = (z - max).exp() / total;
        }
        let decision = Decision::from_index(argmax_first(&logits)).expect("four decision logits");
        let zeta = fwd.zeta.map(|z| tape.value(z).data().to_vec());
        let choice: SpanChoice = extract(
            tape.value(fwd.gamma).data(),
            tape.value(fwd.delta).data(),
            &fwd.lengths,
        );
        Ok(Prediction {
            decision,
            decision_probabilities: probs,
            attention: tape.value(fwd.attention).data().to_vec(),
            entailment: entailment_output(tape.value(fwd.entail_logits)),
            gates: fwd
                .gates
                .iter()
                .map(|&g| tape.value(g).data().to_vec())
                .collect(),
            zeta,
            best_span: choice.to_span(rule),
            span_score: choice.score,
            history_dropped: input.history_dropped,
        })
    }

    pub fn predict(
        &self,
        rule: &RuleDocument,
        question: &str,
        scenario: &str,
        history: &[QaTurn],
    ) -> Result<Prediction> {
        let input = self.encode_input(rule, question, scenario, history);
        self.predict_input(rule, &input)
    }

    pub fn predict_example(&self, ex: &DialogExample) -> Result<Prediction> {
        self.predict(&ex.rule, &ex.question, &ex.scenario, &ex.history)
    }

    /// Writes `model.json`, `vocab.json` and `model.ckpt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let meta = ModelMeta {
            version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
        };
        std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&meta)?)?;
        self.vocab.save(dir.join("vocab.json"))?;
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join("model.ckpt"))?);
        write_checkpoint(&self.store, file)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: ModelMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.join("model.json"))?)?;
        if meta.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version(meta.version));
        }
        let vocab = Vocabulary::load(dir.join("vocab.json"))?;
        let mut model = Self::new(meta.config, vocab, 0)?;
        let file = std::io::BufReader::new(std::fs::File::open(dir.join("model.ckpt"))?);
        let loaded = read_checkpoint(file)?;
        restore_into(&mut model.store, &loaded)?;
        Ok(model)
    }
}
