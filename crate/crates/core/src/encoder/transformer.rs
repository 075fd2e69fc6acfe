use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sequence::{EncodedInput, SegmentKind};
use crate::numeric::{NumericError, ParamId, ParamStore, Result, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub dim: usize,
    pub ffn_dim: usize,
    pub layers: usize,
    /// Attention heads per layer; must divide `dim`.
    pub heads: usize,
    /// Inverted dropout on the encoder outputs during training.
    pub dropout: f64,
    /// Add sinusoidal position encodings. Off only for diagnostics.
    pub positional: bool,
    /// Add a learned vector to tokens whose word also occurs on the other
    /// side of the rule/user divide.
    pub exact_match: bool,
    /// Learned scalar per head added to attention scores between positions
    /// of the same segment.
    pub segment_bias: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            ffn_dim: 128,
            layers: 1,
            heads: 4,
            dropout: 0.1,
            positional: true,
            exact_match: true,
            segment_bias: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Head {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    /// `[d × d/h]` slice of the output projection.
    wo: ParamId,
    bias: Option<ParamId>,
}

#[derive(Clone, Debug)]
struct Layer {
    heads: Vec<Head>,
    ff1: ParamId,
    b1: ParamId,
    ff2: ParamId,
    b2: ParamId,
}

/// Token + segment embeddings with position encodings, followed by
/// multi-head self-attention blocks over the whole sequence.
#[derive(Clone, Debug)]
pub struct Encoder {
    config: EncoderConfig,
    embed: ParamId,
    segment: ParamId,
    matched: Option<ParamId>,
    layers: Vec<Layer>,
}

/// Readouts of one encoded sequence on a tape.
#[derive(Clone, Copy, Debug)]
pub struct EncoderOutput {
    /// Rule-sentence marker rows `[M × d]`.
    pub sentences: Var,
    /// Question, scenario and history marker rows in reading order.
    pub reads: Var,
    /// Rule-token rows `[N × d]` in document order.
    pub tokens: Var,
    pub num_reads: usize,
}

pub fn sinusoidal(len: usize, dim: usize) -> Tensor {
    let mut data = vec![0.0; len * dim];
    for pos in 0..len {
        for i in 0..dim {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / dim as f64);
            let angle = pos as f64 * rate;
            data[pos * dim + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::matrix(len, dim, data).expect("sized")
}

impl Encoder {
    pub fn new(
        store: &mut ParamStore,
        vocab_size: usize,
        config: EncoderConfig,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let d = config.dim;
        if config.heads == 0 || d % config.heads != 0 {
            return Err(NumericError::InvalidConfig(format!(
                "{} heads do not divide dim {d}",
                config.heads
            )));
        }
        let dh = d / config.heads;
        let embed = store.add_uniform("encoder.embed", &[vocab_size, d], 0.5, rng)?;
        let segment = store.add_uniform("encoder.segment", &[SegmentKind::COUNT, d], 0.5, rng)?;
        let matched = if config.exact_match {
            Some(store.add_uniform("encoder.exact_match", &[2, d], 0.5, rng)?)
        } else {
            None
        };
        let mut layers = Vec::new();
        for l in 0..config.layers {
            let name = |p: &str| format!("encoder.layer{l}.{p}");
            let mut heads = Vec::new();
            for h in 0..config.heads {
                let name = |p: &str| format!("encoder.layer{l}.h{h}.{p}");
                heads.push(Head {
                    wq: store.add_glorot(&name("wq"), &[dh, d], rng)?,
                    wk: store.add_glorot(&name("wk"), &[dh, d], rng)?,
                    wv: store.add_glorot(&name("wv"), &[dh, d], rng)?,
                    wo: store.add_glorot(&name("wo"), &[d, dh], rng)?,
                    bias: if config.segment_bias {
                        Some(store.add_zeros(&name("segment_bias"), &[1])?)
                    } else {
                        None
                    },
                });
            }
            layers.push(Layer {
                heads,
                ff1: store.add_glorot(&name("ff1"), &[config.ffn_dim, d], rng)?,
                b1: store.add_zeros(&name("ff1_bias"), &[config.ffn_dim])?,
                ff2: store.add_glorot(&name("ff2"), &[d, config.ffn_dim], rng)?,
                b2: store.add_zeros(&name("ff2_bias"), &[d])?,
            });
        }
        Ok(Self {
            config,
            embed,
            segment,
            matched,
            layers,
        })
    }

    /// Rebinds to parameters already present in `store` (after loading).
    pub fn bind(store: &ParamStore, config: EncoderConfig) -> Option<Self> {
        let id = |n: String| store.id(&n);
        let mut layers = Vec::new();
        for l in 0..config.layers {
            let name = |p: &str| format!("encoder.layer{l}.{p}");
            let mut heads = Vec::new();
            for h in 0..config.heads {
                let name = |p: &str| format!("encoder.layer{l}.h{h}.{p}");
                heads.push(Head {
                    wq: id(name("wq"))?,
                    wk: id(name("wk"))?,
                    wv: id(name("wv"))?,
                    wo: id(name("wo"))?,
                    bias: if config.segment_bias {
                        Some(id(name("segment_bias"))?)
                    } else {
                        None
                    },
                });
            }
            layers.push(Layer {
                heads,
                ff1: id(name("ff1"))?,
                b1: id(name("ff1_bias"))?,
                ff2: id(name("ff2"))?,
                b2: id(name("ff2_bias"))?,
            });
        }
        Some(Self {
            embed: id("encoder.embed".into())?,
            segment: id("encoder.segment".into())?,
            matched: if config.exact_match {
                Some(id("encoder.exact_match".into())?)
            } else {
                None
            },
            layers,
            config,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// Rows scaled to norm √d.
    fn norm(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let x = tape.l2_normalize(x)?;
        Ok(tape.scale(x, (self.config.dim as f64).sqrt()))
    }

    /// Encodes on `tape`. Dropout is applied only when `dropout_rng` is given.
    pub fn encode(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        input: &EncodedInput,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<EncoderOutput> {
        let n = input.len();
        let d = self.config.dim;
        let embed = tape.param(store, self.embed);
        let mut x = tape.gather(embed, &input.token_ids)?;
        let seg_table = tape.param(store, self.segment);
        let seg = tape.gather(seg_table, &input.kinds())?;
        x = tape.add(x, seg)?;
        if let Some(m) = self.matched {
            let table = tape.param(store, m);
            let flags: Vec<usize> = input.exact_match.iter().map(|&b| usize::from(b)).collect();
            let rows = tape.gather(table, &flags)?;
            x = tape.add(x, rows)?;
        }
        if self.config.positional {
            let pe = tape.constant(sinusoidal(n, d));
            x = tape.add(x, pe)?;
        }
        x = self.norm(tape, x)?;

        let same_segment = {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if input.segment_of[i] == input.segment_of[j] {
                        m[i * n + j] = 1.0;
                    }
                }
            }
            Tensor::matrix(n, n, m)?
        };
        let mask = tape.constant(same_segment);
        for layer in &self.layers {
            let p = |tape: &mut Tape, id| tape.param(store, id);
            let scale = 1.0 / ((d / self.config.heads) as f64).sqrt();
            let mut out: Option<Var> = None;
            for head in &layer.heads {
                let (wq, wk, wv, wo) = (
                    p(tape, head.wq),
                    p(tape, head.wk),
                    p(tape, head.wv),
                    p(tape, head.wo),
                );
                let q = tape.matmul(x, wq, true)?;
                let k = tape.matmul(x, wk, true)?;
                let v = tape.matmul(x, wv, true)?;
                let scores = tape.matmul(q, k, true)?;
                let mut scores = tape.scale(scores, scale);
                if let Some(b) = head.bias {
                    let b = tape.param(store, b);
                    let bias = tape.scale_by(mask, b)?;
                    scores = tape.add(scores, bias)?;
                }
                let attn = tape.softmax(scores);
                let mixed = tape.matmul(attn, v, false)?;
                let projected = tape.matmul(mixed, wo, true)?;
                out = Some(match out {
                    Some(acc) => tape.add(acc, projected)?,
                    None => projected,
                });
            }
            let out = out.expect("at least one head");
            let h = tape.add(x, out)?;
            x = self.norm(tape, h)?;

            let (ff1, b1, ff2, b2) = (
                p(tape, layer.ff1),
                p(tape, layer.b1),
                p(tape, layer.ff2),
                p(tape, layer.b2),
            );
            let f = tape.matmul(x, ff1, true)?;
            let f = tape.add_row(f, b1)?;
            let f = tape.relu(f);
            let f = tape.matmul(f, ff2, true)?;
            let f = tape.add_row(f, b2)?;
            let h = tape.add(x, f)?;
            x = self.norm(tape, h)?;
        }
        if let Some(rng) = dropout_rng {
            x = tape.dropout(x, self.config.dropout, rng)?;
        }
        let rule_pos: Vec<usize> = input.rule_tokens.iter().map(|&(p, _)| p).collect();
        let reads = input.read_markers();
        Ok(EncoderOutput {
            sentences: tape.gather(x, &input.rule_markers())?,
            reads: tape.gather(x, &reads)?,
            tokens: tape.gather(x, &rule_pos)?,
            num_reads: reads.len(),
        })
    }
}
