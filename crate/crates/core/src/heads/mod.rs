//! Self-attentive summary over `[k_i; v_i]`, the four-way decision and the
//! per-sentence three-way entailment scores.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Decision, EntailmentLabel};
use crate::numeric::{ParamId, ParamStore, Result, Tape, Tensor, Var};

#[derive(Clone, Debug)]
pub struct DecisionHeads {
    w_alpha: ParamId,
    b_alpha: ParamId,
    w_z: ParamId,
    b_z: ParamId,
    w_e: ParamId,
    b_e: ParamId,
}

/// Index of the largest value; ties go to the earliest index.
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl DecisionHeads {
    /// `dim` is the width of one key (the summary is `2 · dim` wide).
    pub fn new(store: &mut ParamStore, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let w = 2 * dim;
        Ok(Self {
            w_alpha: store.add_glorot("decision.w_alpha", &[w], rng)?,
            b_alpha: store.add_zeros("decision.b_alpha", &[1])?,
            w_z: store.add_glorot("decision.w_z", &[Decision::ALL.len(), w], rng)?,
            b_z: store.add_zeros("decision.b_z", &[Decision::ALL.len()])?,
            w_e: store.add_glorot("entail.w_e", &[EntailmentLabel::ALL.len(), w], rng)?,
            b_e: store.add_zeros("entail.b_e", &[EntailmentLabel::ALL.len()])?,
        })
    }

    pub fn bind(store: &ParamStore) -> Option<Self> {
        Some(Self {
            w_alpha: store.id("decision.w_alpha")?,
            b_alpha: store.id("decision.b_alpha")?,
            w_z: store.id("decision.w_z")?,
            b_z: store.id("decision.b_z")?,
            w_e: store.id("entail.w_e")?,
            b_e: store.id("entail.b_e")?,
        })
    }

    /// Returns `(c, α̃)` for `kv = [K, V]` of shape `[M × 2d]`.
    pub fn summarize(&self, tape: &mut Tape, store: &ParamStore, kv: Var) -> Result<(Var, Var)> {
        let w = tape.param(store, self.w_alpha);
        let b = tape.param(store, self.b_alpha);
        let alpha = tape.matvec(kv, w)?;
        let alpha = tape.add_scalar(alpha, b)?;
        let weights = tape.softmax(alpha);
        Ok((tape.weighted_row_sum(weights, kv)?, weights))
    }

    /// Logits `z = W_z c + b_z` in class order Yes, No, Irrelevant, Inquire.
    pub fn decide(&self, tape: &mut Tape, store: &ParamStore, c: Var) -> Result<Var> {
        let w = tape.param(store, self.w_z);
        let b = tape.param(store, self.b_z);
        let z = tape.matvec(w, c)?;
        tape.add(z, b)
    }

    /// `[M × 3]` entailment logits.
    pub fn entail(&self, tape: &mut Tape, store: &ParamStore, kv: Var) -> Result<Var> {
        let w = tape.param(store, self.w_e);
        let b = tape.param(store, self.b_e);
        let e = tape.matmul(kv, w, true)?;
        tape.add_row(e, b)
    }
}

pub fn decision_loss(tape: &mut Tape, z: Var, gold: Decision) -> Result<Var> {
    tape.cross_entropy(z, gold.index())
}

/// Mean cross entropy over rule sentences.
pub fn entail_loss(tape: &mut Tape, e: Var, gold: &[EntailmentLabel]) -> Result<Var> {
    let targets: Vec<usize> = gold.iter().map(|l| l.index()).collect();
    tape.cross_entropy_rows(e, &targets)
}

/// The head weights as plain tensors, for evaluation outside a model.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadWeights {
    pub w_alpha: Tensor,
    pub b_alpha: f64,
    pub w_z: Tensor,
    pub b_z: Tensor,
    pub w_e: Tensor,
    pub b_e: Tensor,
}

impl HeadWeights {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w_alpha: Tensor::zeros(&[2 * dim]),
            b_alpha: 0.0,
            w_z: Tensor::zeros(&[4, 2 * dim]),
            b_z: Tensor::zeros(&[4]),
            w_e: Tensor::zeros(&[3, 2 * dim]),
            b_e: Tensor::zeros(&[3]),
        }
    }

    fn install(&self) -> Result<(ParamStore, DecisionHeads)> {
        let mut store = ParamStore::new();
        let heads = DecisionHeads {
            w_alpha: store.add("decision.w_alpha", self.w_alpha.clone())?,
            b_alpha: store.add("decision.b_alpha", Tensor::vector(vec![self.b_alpha]))?,
            w_z: store.add("decision.w_z", self.w_z.clone())?,
            b_z: store.add("decision.b_z", self.b_z.clone())?,
            w_e: store.add("entail.w_e", self.w_e.clone())?,
            b_e: store.add("entail.b_e", self.b_e.clone())?,
        };
        Ok((store, heads))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutput {
    pub summary: Vec<f64>,
    pub attention: Vec<f64>,
    pub logits: [f64; 4],
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntailmentOutput {
    pub logits: Vec<[f64; 3]>,
    pub probabilities: Vec<[f64; 3]>,
    pub labels: Vec<EntailmentLabel>,
}

fn kv_matrix(keys: &[Vec<f64>], values: &[Vec<f64>]) -> Result<Tensor> {
    let rows: Vec<Vec<f64>> = keys
        .iter()
        .zip(values)
        .map(|(k, v)| [k.as_slice(), v.as_slice()].concat())
        .collect();
    Tensor::from_rows(&rows)
}

/// Summary and decision for plain key/value rows.
pub fn summarize_and_decide(
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    w: &HeadWeights,
) -> Result<DecisionOutput> {
    let (store, heads) = w.install()?;
    let mut tape = Tape::new();
    let kv = tape.constant(kv_matrix(keys, values)?);
    let (c, a) = heads.summarize(&mut tape, &store, kv)?;
    let z = heads.decide(&mut tape, &store, c)?;
    let logits: [f64; 4] = tape.value(z).data().try_into().expect("four classes");
    Ok(DecisionOutput {
        summary: tape.value(c).data().to_vec(),
        attention: tape.value(a).data().to_vec(),
        decision: Decision::from_index(argmax_first(&logits)).expect("class index"),
        logits,
    })
}

pub fn entail_scores(
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    w: &HeadWeights,
) -> Result<EntailmentOutput> {
    let (store, heads) = w.install()?;
    let mut tape = Tape::new();
    let kv = tape.constant(kv_matrix(keys, values)?);
    let e = heads.entail(&mut tape, &store, kv)?;
    Ok(entailment_output(tape.value(e)))
}

/// Probabilities and argmax labels from an `[M × 3]` logit matrix.
pub fn entailment_output(e: &Tensor) -> EntailmentOutput {
    let mut out = EntailmentOutput {
        logits: Vec::new(),
        probabilities: Vec::new(),
        labels: Vec::new(),
    };
    for r in 0..e.rows() {
        let logits: [f64; 3] = e.row(r).try_into().expect("three states");
        let mut p = logits;
        crate::numeric::softmax_in_place(&mut p);
        out.labels
            .push(EntailmentLabel::from_index(argmax_first(&p)).expect("state index"));
        out.logits.push(logits);
        out.probabilities.push(p);
    }
    out
}

#[cfg(test)]
mod tests;
