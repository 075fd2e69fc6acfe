//! Explicit memory tracking: one key per rule sentence, a value initialized
//! to the key and updated by gated, normalized reads of each piece of user
//! information (question, scenario, history turns oldest first).
//!
//! Per read with sentence vector `s`:
//!
//! ```text
//! ṽ_i = relu(W_k k_i + W_v v_i + W_s s)
//! g_i = σ(sᵀk_i + sᵀv_i)
//! v_i ← (v_i + g_i ṽ_i) / ‖v_i + g_i ṽ_i‖
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::{NumericError, ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Normalize keys before use so the initial values are unit vectors.
    pub normalize_keys: bool,
    /// When false, no reads happen and every value equals its key.
    pub enabled: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            normalize_keys: true,
            enabled: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrackerError {
    #[error("key {0} has (near) zero norm")]
    DegenerateKey(usize),
    #[error("memory needs at least one key")]
    NoKeys,
    #[error("expected {expected}-dimensional vectors, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Debug)]
pub struct Tracker {
    config: TrackerConfig,
    wk: ParamId,
    wv: ParamId,
    ws: ParamId,
}

/// Result of tracking on a tape.
#[derive(Clone, Debug)]
pub struct TrackOutput {
    /// `[M × d]`, normalized when configured.
    pub keys: Var,
    /// `[M × d]`.
    pub values: Var,
    /// One `[M]` gate vector per read.
    pub gates: Vec<Var>,
}

fn check_keys(tape: &Tape, keys: Var) -> Result<(), TrackerError> {
    let k = tape.value(keys);
    if k.rows() == 0 {
        return Err(TrackerError::NoKeys);
    }
    for i in 0..k.rows() {
        let norm = k.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= crate::numeric::NORM_EPSILON {
            return Err(TrackerError::DegenerateKey(i));
        }
    }
    Ok(())
}

impl Tracker {
    pub fn new(
        store: &mut ParamStore,
        dim: usize,
        config: TrackerConfig,
        rng: &mut impl Rng,
    ) -> Result<Self, TrackerError> {
        Ok(Self {
            wk: store.add_glorot("tracker.w_k", &[dim, dim], rng)?,
            wv: store.add_glorot("tracker.w_v", &[dim, dim], rng)?,
            ws: store.add_glorot("tracker.w_s", &[dim, dim], rng)?,
            config,
        })
    }

    pub fn bind(store: &ParamStore, config: TrackerConfig) -> Option<Self> {
        Some(Self {
            wk: store.id("tracker.w_k")?,
            wv: store.id("tracker.w_v")?,
            ws: store.id("tracker.w_s")?,
            config,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Initial memory on a tape: (keys, values) with values equal to keys.
    pub fn init(&self, tape: &mut Tape, keys: Var) -> Result<(Var, Var), TrackerError> {
        check_keys(tape, keys)?;
        let keys = if self.config.normalize_keys {
            tape.l2_normalize(keys)?
        } else {
            keys
        };
        Ok((keys, keys))
    }

    /// One read of `s` (`[d]`) into every slot.
    pub fn read(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        keys: Var,
        values: Var,
        s: Var,
    ) -> Result<(Var, Var), TrackerError> {
        let d = tape.value(keys).cols();
        if tape.value(s).len() != d || tape.value(s).is_matrix() {
            return Err(TrackerError::Dimension {
                expected: d,
                found: tape.value(s).len(),
            });
        }
        let wk = tape.param(store, self.wk);
        let wv = tape.param(store, self.wv);
        let ws = tape.param(store, self.ws);
        let kw = tape.matmul(keys, wk, true)?;
        let vw = tape.matmul(values, wv, true)?;
        let sw = tape.matvec(ws, s)?;
        let pre = tape.add(kw, vw)?;
        let pre = tape.add_row(pre, sw)?;
        let candidate = tape.relu(pre);
        let sk = tape.matvec(keys, s)?;
        let sv = tape.matvec(values, s)?;
        let logits = tape.add(sk, sv)?;
        let gates = tape.sigmoid(logits);
        let update = tape.scale_rows(candidate, gates)?;
        let sum = tape.add(values, update)?;
        Ok((tape.l2_normalize(sum)?, gates))
    }

    /// Folds `read` over the rows of `reads` in order.
    pub fn track(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        keys: Var,
        reads: Option<Var>,
    ) -> Result<TrackOutput, TrackerError> {
        let (keys, mut values) = self.init(tape, keys)?;
        let mut gates = Vec::new();
        if let (true, Some(reads)) = (self.config.enabled, reads) {
            for t in 0..tape.value(reads).rows() {
                let s = tape.row(reads, t)?;
                let (v, g) = self.read(tape, store, keys, values, s)?;
                values = v;
                gates.push(g);
            }
        }
        Ok(TrackOutput {
            keys,
            values,
            gates,
        })
    }
}

/// Plain-value memory for inspection and serving: keys, values and the
/// gates logged by every read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryState {
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub gate_log: Vec<Vec<f64>>,
}

/// The three tracker matrices as plain tensors.
#[derive(Clone, Debug)]
pub struct TrackerWeights {
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_s: Tensor,
}

impl TrackerWeights {
    pub fn from_store(store: &ParamStore, tracker: &Tracker) -> Self {
        Self {
            w_k: store.get(tracker.wk).value.clone(),
            w_v: store.get(tracker.wv).value.clone(),
            w_s: store.get(tracker.ws).value.clone(),
        }
    }

    fn dim(&self) -> usize {
        self.w_k.rows()
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<Tensor, TrackerError> {
    if rows.is_empty() {
        return Err(TrackerError::NoKeys);
    }
    Ok(Tensor::from_rows(rows)?)
}

fn rows_of(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// Memory with `v_i = k_i`; keys are normalized first when `normalize`.
pub fn init_memory(keys: &[Vec<f64>], normalize: bool) -> Result<MemoryState, TrackerError> {
    let mut tape = Tape::new();
    let k = tape.constant(to_matrix(keys)?);
    check_keys(&tape, k)?;
    let k = if normalize { tape.l2_normalize(k)? } else { k };
    let rows = rows_of(tape.value(k));
    Ok(MemoryState {
        keys: rows.clone(),
        values: rows,
        gate_log: Vec::new(),
    })
}

impl MemoryState {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// One read; keys are untouched.
    pub fn read(&self, s: &[f64], weights: &TrackerWeights) -> Result<MemoryState, TrackerError> {
        let d = weights.dim();
        if s.len() != d || self.keys.first().map_or(true, |k| k.len() != d) {
            return Err(TrackerError::Dimension {
                expected: d,
                found: s.len(),
            });
        }
        let mut store = ParamStore::new();
        let tracker = Tracker {
            wk: store.add("w_k", weights.w_k.clone())?,
            wv: store.add("w_v", weights.w_v.clone())?,
            ws: store.add("w_s", weights.w_s.clone())?,
            config: TrackerConfig::default(),
        };
        let mut tape = Tape::new();
        let k = tape.constant(to_matrix(&self.keys)?);
        let v = tape.constant(to_matrix(&self.values)?);
        let s = tape.constant(Tensor::vector(s.to_vec()));
        let (v, g) = tracker.read(&mut tape, &store, k, v, s)?;
        let mut gate_log = self.gate_log.clone();
        gate_log.push(tape.value(g).data().to_vec());
        Ok(MemoryState {
            keys: self.keys.clone(),
            values: rows_of(tape.value(v)),
            gate_log,
        })
    }

    /// Reads every vector in order.
    pub fn track(
        &self,
        reads: &[Vec<f64>],
        weights: &TrackerWeights,
    ) -> Result<MemoryState, TrackerError> {
        reads
            .iter()
            .try_fold(self.clone(), |m, s| m.read(s, weights))
    }
}
