//! Training loop for the full loss, multi-seed aggregation and the
//! ablation study.

mod ablation;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{augment, Decision, LabeledExample};
use crate::encoder::Vocabulary;
use crate::evaluator::{evaluate, EvalError, Evaluation};
use crate::model::{EmtModel, ModelConfig, ModelError};
use crate::numeric::{Adam, AdamConfig, NumericError, ParamGrads, Tape};
use crate::rephrase::TemplateRephraser;
use crate::span::total_loss;

pub use ablation::{run_ablation, AblationRow, AblationTable, ABLATION_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("span loss is weighted but the corpus has no Inquire example with a span")]
    NoInquire,
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metrics log: {0}")]
    Log(#[from] std::io::Error),
}

/// Switches for the ablation variants. All on is the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    /// Add evidence-as-scenario copies of training examples.
    pub data_aug: bool,
    /// Weight token scores by sentence "unknown" scores.
    pub c2f: bool,
    /// Train the entailment head. Off also drops the modulation, since its
    /// scores would be untrained.
    pub entail_loss: bool,
    /// Update values from reads. Off leaves values equal to keys.
    pub tracker: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self::FULL
    }
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        data_aug: true,
        c2f: true,
        entail_loss: true,
        tracker: true,
    };

    /// The five compared variants, full model first.
    pub fn variants() -> [(&'static str, Ablation); 5] {
        let full = Self::FULL;
        [
            ("EMT", full),
            (
                "w/o data aug.",
                Ablation {
                    data_aug: false,
                    ..full
                },
            ),
            ("w/o c2f", Ablation { c2f: false, ..full }),
            (
                "w/o L_entail",
                Ablation {
                    entail_loss: false,
                    ..full
                },
            ),
            (
                "w/o tracker",
                Ablation {
                    tracker: false,
                    ..full
                },
            ),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    /// Overrides the encoder's dropout rate.
    pub dropout: f64,
    pub lambda_entail: f64,
    pub lambda_span: f64,
    /// Weight of the sentence-head loss in sentence-head mode.
    pub lambda_sent: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub ablation: Ablation,
    /// Identify the span's sentence with a dedicated head and loss.
    pub sentence_head: bool,
    pub vocab_min_count: usize,
    /// Evaluate on dev after every epoch rather than only at the end.
    pub eval_every_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// Small-model defaults that train on one CPU core.
    pub fn desk() -> Self {
        Self {
            model: ModelConfig::default(),
            learning_rate: 2e-3,
            warmup_fraction: 0.1,
            dropout: 0.0,
            lambda_entail: 10.0,
            lambda_span: 0.6,
            lambda_sent: 1.0,
            batch_size: 16,
            epochs: 10,
            seeds: vec![1],
            grad_clip: Some(5.0),
            ablation: Ablation::FULL,
            sentence_head: false,
            vocab_min_count: 1,
            eval_every_epoch: true,
        }
    }

    /// Optimizer values published for a large pretrained encoder; kept for
    /// reference, they are far too small a learning rate for this model.
    pub fn paper() -> Self {
        Self {
            learning_rate: 5e-5,
            dropout: 0.35,
            seeds: vec![1, 2, 3, 4, 5],
            ..Self::desk()
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper" => Some(Self::paper()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.lambda_entail < 0.0 || self.lambda_span < 0.0 || self.lambda_sent < 0.0 {
            return fail("loss weights must be non-negative");
        }
        if self.seeds.is_empty() {
            return fail("seed list is empty");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return fail("batch size and epochs must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return fail("warm-up fraction must be in [0, 1]");
        }
        Ok(())
    }

    /// Model configuration with dropout and ablation switches applied.
    pub fn effective_model(&self) -> ModelConfig {
        let mut m = self.model.clone();
        m.encoder.dropout = self.dropout;
        m.tracker.enabled = self.ablation.tracker;
        m.span.coarse_to_fine = self.ablation.c2f && self.ablation.entail_loss;
        m.span.sentence_head = self.sentence_head;
        m
    }

    pub fn effective_lambda_entail(&self) -> f64 {
        if self.ablation.entail_loss {
            self.lambda_entail
        } else {
            0.0
        }
    }
}

/// Loss values of one optimizer step, averaged over the batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub learning_rate: f64,
    pub loss: f64,
    pub decision: f64,
    pub entail: f64,
    pub span: f64,
    pub sentence: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevMetrics {
    pub micro: f64,
    pub macro_: f64,
    pub bleu1: Option<f64>,
    pub bleu4: Option<f64>,
    pub entailment_macro: f64,
    pub sentence_identification: Option<f64>,
}

impl From<&Evaluation> for DevMetrics {
    fn from(e: &Evaluation) -> Self {
        Self {
            micro: e.end_to_end.micro_accuracy,
            macro_: e.end_to_end.macro_accuracy,
            bleu1: e.end_to_end.bleu.map(|b| b.bleu1),
            bleu4: e.end_to_end.bleu.map(|b| b.bleu4),
            entailment_macro: e.entailment_macro,
            sentence_identification: e.sentence_identification,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub seconds: f64,
    pub dev: Option<DevMetrics>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LogLine<'a> {
    Step {
        seed: u64,
        #[serde(flatten)]
        record: &'a StepRecord,
    },
    Epoch {
        seed: u64,
        #[serde(flatten)]
        record: &'a EpochRecord,
    },
}

#[derive(Debug)]
pub struct TrainRun {
    pub seed: u64,
    pub model: EmtModel,
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    /// Final dev evaluation, when a dev set was given.
    pub dev: Option<Evaluation>,
}

/// Training examples plus, with data augmentation on, one copy per example
/// with evidence whose scenario is the rendered evidence.
pub fn training_set(train: &[LabeledExample], data_aug: bool) -> Vec<LabeledExample> {
    let mut out = train.to_vec();
    if data_aug {
        for ex in train {
            out.extend(
                augment(&ex.example)
                    .into_iter()
                    .map(|example| LabeledExample {
                        example,
                        ..ex.clone()
                    }),
            );
        }
    }
    out
}

/// Trains one model with `seed`. Step and epoch records are also written
/// as JSON lines to `log` when given.
pub fn train_seed(
    train: &[LabeledExample],
    dev: Option<&[LabeledExample]>,
    config: &TrainConfig,
    seed: u64,
    mut log: Option<&mut dyn Write>,
) -> Result<TrainRun, TrainError> {
    config.validate()?;
    let data = training_set(train, config.ablation.data_aug);
    if data.is_empty() {
        return Err(TrainError::Config("training corpus is empty".into()));
    }
    let has_span = data
        .iter()
        .any(|e| e.example.decision == Decision::Inquire && e.span.is_some());
    if config.lambda_span > 0.0 && !has_span {
        return Err(TrainError::NoInquire);
    }
    let vocab = Vocabulary::from_corpus(&data, config.vocab_min_count);
    let mut model = EmtModel::new(config.effective_model(), vocab, seed)?;
    let steps_per_epoch = data.len().div_ceil(config.batch_size);
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            warmup_fraction: config.warmup_fraction,
            total_steps: (steps_per_epoch * config.epochs) as u64,
            ..AdamConfig::default()
        },
        model.store(),
    );
    let inputs: Vec<_> = data
        .iter()
        .map(|ex| model.encode_example(&ex.example))
        .collect();
    let lambda_entail = config.effective_lambda_entail();
    let rephraser = TemplateRephraser::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_696e);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut steps = Vec::new();
    let mut epochs = Vec::new();
    let mut last_dev = None;

    for epoch in 1..=config.epochs {
        let started = std::time::Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = ParamGrads::zeros(model.store());
            let mut sums = [0.0; 5];
            for &i in batch {
                let mut tape = Tape::new();
                let fwd = model.forward(&mut tape, &inputs[i], Some(&mut rng))?;
                let parts = model.losses(&mut tape, &fwd, &data[i])?;
                let mut loss = total_loss(
                    &mut tape,
                    parts.decision,
                    parts.entail,
                    parts.span,
                    lambda_entail,
                    config.lambda_span,
                )?;
                if fwd.sentence_logits.is_some() {
                    let s = tape.scale(parts.sentence, config.lambda_sent);
                    loss = tape.add(loss, s)?;
                }
                let g = tape.backward(loss)?;
                grads.accumulate(&tape, &g);
                for (acc, v) in sums.iter_mut().zip([
                    loss,
                    parts.decision,
                    parts.entail,
                    parts.span,
                    parts.sentence,
                ]) {
                    *acc += tape.value(v).item();
                }
            }
            let n = batch.len() as f64;
            grads.scale(1.0 / n);
            let step = steps.len() + 1;
            if !sums[0].is_finite() || !grads.is_finite() {
                return Err(TrainError::Diverged {
                    step,
                    detail: format!(
                        "batch loss {} with finite gradients: {}",
                        sums[0] / n,
                        grads.is_finite()
                    ),
                });
            }
            let grad_norm = grads.global_norm();
            if let Some(c) = config.grad_clip {
                grads.clip_norm(c);
            }
            let learning_rate = adam.learning_rate_at(adam.steps_taken() + 1);
            adam.step(model.store_mut(), &grads);
            let record = StepRecord {
                step,
                epoch,
                learning_rate,
                loss: sums[0] / n,
                decision: sums[1] / n,
                entail: sums[2] / n,
                span: sums[3] / n,
                sentence: sums[4] / n,
                grad_norm,
            };
            epoch_loss += sums[0];
            if let Some(w) = log.as_mut() {
                serde_json::to_writer(
                    &mut **w,
                    &LogLine::Step {
                        seed,
                        record: &record,
                    },
                )
                .map_err(std::io::Error::from)?;
                writeln!(w)?;
            }
            steps.push(record);
        }
        let dev_eval = match dev {
            Some(d) if config.eval_every_epoch || epoch == config.epochs => {
                Some(evaluate(&model, d, &rephraser)?)
            }
            _ => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss / data.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
            dev: dev_eval.as_ref().map(DevMetrics::from),
        };
        log::info!(
            "seed {seed} epoch {epoch}: loss {:.4}{}",
            record.train_loss,
            record
                .dev
                .as_ref()
                .map(|d| format!(
                    ", dev micro {:.4} entail {:.4}",
                    d.micro, d.entailment_macro
                ))
                .unwrap_or_default()
        );
        if let Some(w) = log.as_mut() {
            serde_json::to_writer(
                &mut **w,
                &LogLine::Epoch {
                    seed,
                    record: &record,
                },
            )
            .map_err(std::io::Error::from)?;
            writeln!(w)?;
        }
        epochs.push(record);
        if dev_eval.is_some() {
            last_dev = dev_eval;
        }
    }
    Ok(TrainRun {
        seed,
        model,
        steps,
        epochs,
        dev: last_dev,
    })
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            n,
        })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}±{:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Debug)]
pub struct MultiSeedResult {
    pub runs: Vec<TrainRun>,
    /// Per dev metric, over seeds that produced it.
    pub summary: Vec<(String, MeanStd)>,
}

impl MultiSeedResult {
    pub fn metric(&self, name: &str) -> Option<MeanStd> {
        self.summary
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| *m)
    }
}

/// Named dev metrics of one run, in ablation-table column order.
pub fn dev_columns(dev: &DevMetrics) -> [(&'static str, Option<f64>); 6] {
    [
        ("micro", Some(dev.micro)),
        ("macro", Some(dev.macro_)),
        ("bleu1", dev.bleu1),
        ("bleu4", dev.bleu4),
        ("sentence_id", dev.sentence_identification),
        ("entail_macro", Some(dev.entailment_macro)),
    ]
}

/// Trains once per configured seed and aggregates final dev metrics.
pub fn train(
    train: &[LabeledExample],
    dev: Option<&[LabeledExample]>,
    config: &TrainConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<MultiSeedResult, TrainError> {
    config.validate()?;
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        runs.push(train_seed(
            train,
            dev,
            config,
            seed,
            log.as_mut().map(|w| &mut **w as &mut dyn Write),
        )?);
    }
    let mut summary = Vec::new();
    for (k, name) in ABLATION_COLUMNS.iter().enumerate() {
        let xs: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.dev.as_ref())
            .filter_map(|e| dev_columns(&DevMetrics::from(e))[k].1)
            .collect();
        if let Some(m) = MeanStd::of(&xs) {
            summary.push((name.to_string(), m));
        }
    }
    Ok(MultiSeedResult { runs, summary })
}

/// Fraction of consecutive non-overlapping `window`-step blocks whose mean
/// loss is not above the previous block's mean.
pub fn nonincreasing_window_fraction(losses: &[f64], window: usize) -> Option<f64> {
    let means: Vec<f64> = losses
        .chunks_exact(window)
        .map(|c| c.iter().sum::<f64>() / window as f64)
        .collect();
    if means.len() < 2 {
        return None;
    }
    let ok = means.windows(2).filter(|w| w[1] <= w[0]).count();
    Some(ok as f64 / (means.len() - 1) as f64)
}

#[cfg(test)]
mod tests;
