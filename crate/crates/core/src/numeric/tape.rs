//! Reverse-mode differentiation over a linear tape of tensor operations.
//!
//! Every op appends a node holding its forward value. [`Tape::backward`]
//! walks the nodes in reverse and accumulates vector-Jacobian products.
//! Only the handful of ops the memory-tracking model needs are provided.

use std::collections::HashMap;

use rand::Rng;

use super::gemm::gemm;
use super::param::{ParamId, ParamStore};
use super::tensor::Tensor;
use super::{NumericError, Result};

/// Norms at or below this are rejected by [`Tape::l2_normalize`].
pub const NORM_EPSILON: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(#[allow(dead_code)] ParamId),
    MatMul { a: Var, b: Var, trans_b: bool },
    MatVec { m: Var, v: Var },
    Add(Var, Var),
    AddRow { mat: Var, row: Var },
    AddScalar { x: Var, s: Var },
    Mul(Var, Var),
    MulConst { x: Var, c: Vec<f64> },
    Scale { x: Var, factor: f64 },
    ScaleBy { x: Var, s: Var },
    ScaleRows { mat: Var, w: Var },
    Relu(Var),
    Sigmoid(Var),
    Softmax(Var),
    L2Normalize(Var),
    Dot(Var, Var),
    Concat(Var, Var),
    Gather { src: Var, idx: Vec<usize> },
    Column { mat: Var, col: usize },
    Row { mat: Var, row: usize },
    WeightedRowSum { w: Var, mat: Var },
    Sum(Var),
    CrossEntropy { logits: Var, target: usize },
    CrossEntropyRows { logits: Var, targets: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Recording of a single forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

fn shape_err(op: &'static str, left: &Tensor, right: &Tensor) -> NumericError {
    NumericError::ShapeMismatch {
        op,
        left: left.shape().to_vec(),
        right: right.shape().to_vec(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        debug_assert!(value.is_finite() || !self.value_inputs_finite(&op));
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    // Only used by the debug assertion above: a non-finite output is a bug
    // unless one of the inputs was already non-finite.
    fn value_inputs_finite(&self, op: &Op) -> bool {
        inputs(op).iter().all(|v| self.nodes[v.0].value.is_finite())
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// Free input whose gradient is tracked, e.g. for probing a sub-graph.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, true)
    }

    /// Leaf for a stored parameter. Registering the same parameter twice
    /// returns the same node, so its gradient accumulates in one place.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let p = store.get(id);
        let v = self.push(p.value.clone(), Op::Param(id), p.trainable);
        self.params.insert(id, v);
        v
    }

    pub fn param_vars(&self) -> impl Iterator<Item = (ParamId, Var)> + '_ {
        self.params.iter().map(|(&id, &v)| (id, v))
    }

    /// `a · b`, or `a · bᵀ` when `trans_b`. Both operands are matrices.
    pub fn matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.is_matrix() || !tb.is_matrix() {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k) = (ta.shape()[0], ta.shape()[1]);
        let (kb, n) = if trans_b {
            (tb.shape()[1], tb.shape()[0])
        } else {
            (tb.shape()[0], tb.shape()[1])
        };
        if k != kb {
            return Err(shape_err("matmul", ta, tb));
        }
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            ta.data(),
            false,
            tb.data(),
            trans_b,
            &mut out,
            false,
        );
        let value = Tensor::matrix(m, n, out)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::MatMul { a, b, trans_b }, ng))
    }

    /// Matrix `[r × c]` times vector `[c]`.
    pub fn matvec(&mut self, m: Var, v: Var) -> Result<Var> {
        let (tm, tv) = (self.value(m), self.value(v));
        if !tm.is_matrix() || tv.is_matrix() || tm.cols() != tv.len() {
            return Err(shape_err("matvec", tm, tv));
        }
        let r = tm.rows();
        let mut out = vec![0.0; r];
        gemm(
            r,
            tv.len(),
            1,
            tm.data(),
            false,
            tv.data(),
            false,
            &mut out,
            false,
        );
        let ng = self.ng(m) || self.ng(v);
        Ok(self.push(Tensor::vector(out), Op::MatVec { m, v }, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("add", ta, tb));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    /// Adds a `[c]` vector to every row of a `[r × c]` matrix.
    pub fn add_row(&mut self, mat: Var, row: Var) -> Result<Var> {
        let (tm, tr) = (self.value(mat), self.value(row));
        if !tm.is_matrix() || tr.is_matrix() || tm.cols() != tr.len() {
            return Err(shape_err("add_row", tm, tr));
        }
        let c = tm.cols();
        let data = tm
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| x + tr.data()[i % c])
            .collect();
        let value = Tensor::new(tm.shape().to_vec(), data)?;
        let ng = self.ng(mat) || self.ng(row);
        Ok(self.push(value, Op::AddRow { mat, row }, ng))
    }

    /// Adds a `[1]` tensor to every element.
    pub fn add_scalar(&mut self, x: Var, s: Var) -> Result<Var> {
        let (tx, ts) = (self.value(x), self.value(s));
        if ts.shape() != [1] {
            return Err(shape_err("add_scalar", tx, ts));
        }
        let b = ts.item();
        let data = tx.data().iter().map(|v| v + b).collect();
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        let ng = self.ng(x) || self.ng(s);
        Ok(self.push(value, Op::AddScalar { x, s }, ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("mul", ta, tb));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    /// Elementwise product with a fixed, non-differentiable mask.
    pub fn mul_const(&mut self, x: Var, c: Vec<f64>) -> Result<Var> {
        let tx = self.value(x);
        if tx.len() != c.len() {
            return Err(NumericError::ShapeMismatch {
                op: "mul_const",
                left: tx.shape().to_vec(),
                right: vec![c.len()],
            });
        }
        let data = tx.data().iter().zip(&c).map(|(a, b)| a * b).collect();
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        let ng = self.ng(x);
        Ok(self.push(value, Op::MulConst { x, c }, ng))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let tx = self.value(x);
        let data = tx.data().iter().map(|v| v * factor).collect();
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(x);
        self.push(value, Op::Scale { x, factor }, ng)
    }

    /// Multiplies every element by a `[1]` tensor.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        let (tx, ts) = (self.value(x), self.value(s));
        if ts.shape() != [1] {
            return Err(shape_err("scale_by", tx, ts));
        }
        let f = ts.item();
        let data = tx.data().iter().map(|v| v * f).collect();
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        let ng = self.ng(x) || self.ng(s);
        Ok(self.push(value, Op::ScaleBy { x, s }, ng))
    }

    /// Row `i` of a `[r × c]` matrix multiplied by `w[i]`.
    pub fn scale_rows(&mut self, mat: Var, w: Var) -> Result<Var> {
        let (tm, tw) = (self.value(mat), self.value(w));
        if !tm.is_matrix() || tw.is_matrix() || tm.rows() != tw.len() {
            return Err(shape_err("scale_rows", tm, tw));
        }
        let c = tm.cols();
        let data = tm
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| x * tw.data()[i / c])
            .collect();
        let value = Tensor::new(tm.shape().to_vec(), data)?;
        let ng = self.ng(mat) || self.ng(w);
        Ok(self.push(value, Op::ScaleRows { mat, w }, ng))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let data = tx.data().iter().map(|&v| v.max(0.0)).collect();
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(x);
        self.push(value, Op::Relu(x), ng)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let data = tx.data().iter().map(|&v| sigmoid(v)).collect();
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(x);
        self.push(value, Op::Sigmoid(x), ng)
    }

    /// Softmax over the last axis (each row of a matrix).
    pub fn softmax(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let c = tx.cols();
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c) {
            softmax_in_place(row);
        }
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(x);
        self.push(value, Op::Softmax(x), ng)
    }

    /// Scales a vector (or each matrix row) to unit Euclidean norm.
    pub fn l2_normalize(&mut self, x: Var) -> Result<Var> {
        let tx = self.value(x);
        let c = tx.cols();
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= NORM_EPSILON || !norm.is_finite() {
                return Err(NumericError::DegenerateNorm { norm });
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        let ng = self.ng(x);
        Ok(self.push(value, Op::L2Normalize(x), ng))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.is_matrix() || ta.shape() != tb.shape() {
            return Err(shape_err("dot", ta, tb));
        }
        let s = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b), ng))
    }

    /// Vector concatenation, or column-wise concatenation of two matrices
    /// with the same number of rows.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.is_matrix() != tb.is_matrix() || ta.rows() != tb.rows() {
            return Err(shape_err("concat", ta, tb));
        }
        let (ca, cb) = (ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(ta.len() + tb.len());
        for r in 0..ta.rows() {
            data.extend_from_slice(ta.row(r));
            data.extend_from_slice(tb.row(r));
        }
        let shape = if ta.is_matrix() {
            vec![ta.rows(), ca + cb]
        } else {
            vec![ca + cb]
        };
        let value = Tensor::new(shape, data)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Concat(a, b), ng))
    }

    /// Selects rows of a matrix (or elements of a vector); indices may repeat.
    pub fn gather(&mut self, src: Var, idx: &[usize]) -> Result<Var> {
        let ts = self.value(src);
        let limit = if ts.is_matrix() { ts.rows() } else { ts.len() };
        if let Some(&bad) = idx.iter().find(|&&i| i >= limit) {
            return Err(NumericError::IndexOutOfRange {
                index: bad,
                len: limit,
            });
        }
        if idx.is_empty() {
            return Err(NumericError::InvalidShape { shape: vec![0] });
        }
        let value = if ts.is_matrix() {
            let c = ts.cols();
            let mut data = Vec::with_capacity(idx.len() * c);
            for &i in idx {
                data.extend_from_slice(ts.row(i));
            }
            Tensor::matrix(idx.len(), c, data)?
        } else {
            Tensor::vector(idx.iter().map(|&i| ts.data()[i]).collect())
        };
        let ng = self.ng(src);
        Ok(self.push(
            value,
            Op::Gather {
                src,
                idx: idx.to_vec(),
            },
            ng,
        ))
    }

    pub fn column(&mut self, mat: Var, col: usize) -> Result<Var> {
        let tm = self.value(mat);
        if !tm.is_matrix() || col >= tm.cols() {
            return Err(NumericError::IndexOutOfRange {
                index: col,
                len: tm.cols(),
            });
        }
        let c = tm.cols();
        let data = (0..tm.rows()).map(|r| tm.data()[r * c + col]).collect();
        let ng = self.ng(mat);
        Ok(self.push(Tensor::vector(data), Op::Column { mat, col }, ng))
    }

    /// Row `row` of a matrix as a vector.
    pub fn row(&mut self, mat: Var, row: usize) -> Result<Var> {
        let tm = self.value(mat);
        if !tm.is_matrix() || row >= tm.rows() {
            return Err(NumericError::IndexOutOfRange {
                index: row,
                len: tm.rows(),
            });
        }
        let value = Tensor::vector(tm.row(row).to_vec());
        let ng = self.ng(mat);
        Ok(self.push(value, Op::Row { mat, row }, ng))
    }

    /// `Σ_i w[i] · mat[i, :]`.
    pub fn weighted_row_sum(&mut self, w: Var, mat: Var) -> Result<Var> {
        let (tw, tm) = (self.value(w), self.value(mat));
        if tw.is_matrix() || !tm.is_matrix() || tw.len() != tm.rows() {
            return Err(shape_err("weighted_row_sum", tw, tm));
        }
        let (r, c) = (tm.rows(), tm.cols());
        let mut out = vec![0.0; c];
        gemm(1, r, c, tw.data(), false, tm.data(), false, &mut out, false);
        let ng = self.ng(w) || self.ng(mat);
        Ok(self.push(Tensor::vector(out), Op::WeightedRowSum { w, mat }, ng))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let ng = self.ng(x);
        self.push(Tensor::scalar(s), Op::Sum(x), ng)
    }

    /// `−log softmax(logits)[target]` for a logit vector.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let tl = self.value(logits);
        if tl.is_matrix() {
            return Err(NumericError::InvalidShape {
                shape: tl.shape().to_vec(),
            });
        }
        if target >= tl.len() {
            return Err(NumericError::IndexOutOfRange {
                index: target,
                len: tl.len(),
            });
        }
        let loss = log_sum_exp(tl.data()) - tl.data()[target];
        let ng = self.ng(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy { logits, target },
            ng,
        ))
    }

    /// Mean over rows of the per-row cross entropy.
    pub fn cross_entropy_rows(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let tl = self.value(logits);
        if !tl.is_matrix() || tl.rows() != targets.len() {
            return Err(NumericError::ShapeMismatch {
                op: "cross_entropy_rows",
                left: tl.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        let c = tl.cols();
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            if t >= c {
                return Err(NumericError::IndexOutOfRange { index: t, len: c });
            }
            let row = tl.row(r);
            total += log_sum_exp(row) - row[t];
        }
        let loss = total / targets.len() as f64;
        let ng = self.ng(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropyRows {
                logits,
                targets: targets.to_vec(),
            },
            ng,
        ))
    }

    /// Inverted dropout: zeroes each element with probability `rate` and
    /// rescales survivors by `1 / (1 − rate)`.
    pub fn dropout<R: Rng>(&mut self, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if rate <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let mask = (0..self.value(x).len())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        self.mul_const(x, mask)
    }

    /// Back-propagates from a `[1]`-shaped loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.shape() != [1] {
            return Err(NumericError::NotScalar {
                shape: lt.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].needs_grad {
                self.propagate(i, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let out = &node.value;
        match &node.op {
            Op::Constant | Op::Param(_) => {}
            Op::MatMul { a, b, trans_b } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k) = (ta.shape()[0], ta.shape()[1]);
                let n = out.cols();
                if self.ng(*a) {
                    // da = g · bᵀ   (or g · b when b is stored transposed)
                    let da = self.slot(grads, *a);
                    gemm(m, n, k, g, false, tb.data(), !trans_b, da, true);
                }
                if self.ng(*b) {
                    let db = self.slot(grads, *b);
                    if *trans_b {
                        // db [n × k] = gᵀ · a
                        gemm(n, m, k, g, true, ta.data(), false, db, true);
                    } else {
                        // db [k × n] = aᵀ · g
                        gemm(k, m, n, ta.data(), true, g, false, db, true);
                    }
                }
            }
            Op::MatVec { m, v } => {
                let (tm, tv) = (self.value(*m), self.value(*v));
                let (r, c) = (tm.rows(), tm.cols());
                if self.ng(*m) {
                    let dm = self.slot(grads, *m);
                    gemm(r, 1, c, g, false, tv.data(), false, dm, true);
                }
                if self.ng(*v) {
                    let dv = self.slot(grads, *v);
                    gemm(c, r, 1, tm.data(), true, g, false, dv, true);
                }
            }
            Op::Add(a, b) => {
                for x in [a, b] {
                    if self.ng(*x) {
                        axpy(self.slot(grads, *x), g, 1.0);
                    }
                }
            }
            Op::AddRow { mat, row } => {
                if self.ng(*mat) {
                    axpy(self.slot(grads, *mat), g, 1.0);
                }
                if self.ng(*row) {
                    let c = out.cols();
                    let dr = self.slot(grads, *row);
                    for chunk in g.chunks(c) {
                        axpy(dr, chunk, 1.0);
                    }
                }
            }
            Op::AddScalar { x, s } => {
                if self.ng(*x) {
                    axpy(self.slot(grads, *x), g, 1.0);
                }
                if self.ng(*s) {
                    self.slot(grads, *s)[0] += g.iter().sum::<f64>();
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    let da = self.slot(grads, *a);
                    for ((d, gi), y) in da.iter_mut().zip(g).zip(tb.data()) {
                        *d += gi * y;
                    }
                }
                if self.ng(*b) {
                    let db = self.slot(grads, *b);
                    for ((d, gi), x) in db.iter_mut().zip(g).zip(ta.data()) {
                        *d += gi * x;
                    }
                }
            }
            Op::MulConst { x, c } => {
                let dx = self.slot(grads, *x);
                for ((d, gi), ci) in dx.iter_mut().zip(g).zip(c) {
                    *d += gi * ci;
                }
            }
            Op::Scale { x, factor } => axpy(self.slot(grads, *x), g, *factor),
            Op::ScaleBy { x, s } => {
                let f = self.value(*s).item();
                if self.ng(*x) {
                    axpy(self.slot(grads, *x), g, f);
                }
                if self.ng(*s) {
                    let tx = self.value(*x);
                    let ds: f64 = g.iter().zip(tx.data()).map(|(a, b)| a * b).sum();
                    self.slot(grads, *s)[0] += ds;
                }
            }
            Op::ScaleRows { mat, w } => {
                let (tm, tw) = (self.value(*mat), self.value(*w));
                let c = tm.cols();
                if self.ng(*mat) {
                    let dm = self.slot(grads, *mat);
                    for (idx, d) in dm.iter_mut().enumerate() {
                        *d += g[idx] * tw.data()[idx / c];
                    }
                }
                if self.ng(*w) {
                    let dw = self.slot(grads, *w);
                    for (r, d) in dw.iter_mut().enumerate() {
                        *d += dot(&g[r * c..(r + 1) * c], tm.row(r));
                    }
                }
            }
            Op::Relu(x) => {
                let tx = self.value(*x);
                let dx = self.slot(grads, *x);
                for ((d, gi), xi) in dx.iter_mut().zip(g).zip(tx.data()) {
                    if *xi > 0.0 {
                        *d += gi;
                    }
                }
            }
            Op::Sigmoid(x) => {
                let dx = self.slot(grads, *x);
                for ((d, gi), y) in dx.iter_mut().zip(g).zip(out.data()) {
                    *d += gi * y * (1.0 - y);
                }
            }
            Op::Softmax(x) => {
                let c = out.cols();
                let dx = self.slot(grads, *x);
                for ((drow, grow), yrow) in
                    dx.chunks_mut(c).zip(g.chunks(c)).zip(out.data().chunks(c))
                {
                    let gy = dot(grow, yrow);
                    for ((d, gi), y) in drow.iter_mut().zip(grow).zip(yrow) {
                        *d += y * (gi - gy);
                    }
                }
            }
            Op::L2Normalize(x) => {
                let tx = self.value(*x);
                let c = out.cols();
                let dx = self.slot(grads, *x);
                for (((drow, grow), yrow), xrow) in dx
                    .chunks_mut(c)
                    .zip(g.chunks(c))
                    .zip(out.data().chunks(c))
                    .zip(tx.data().chunks(c))
                {
                    let norm = dot(xrow, xrow).sqrt();
                    let gy = dot(grow, yrow);
                    for ((d, gi), y) in drow.iter_mut().zip(grow).zip(yrow) {
                        *d += (gi - y * gy) / norm;
                    }
                }
            }
            Op::Dot(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    axpy(self.slot(grads, *a), tb.data(), g[0]);
                }
                if self.ng(*b) {
                    axpy(self.slot(grads, *b), ta.data(), g[0]);
                }
            }
            Op::Concat(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                let w = ca + cb;
                if self.ng(*a) {
                    let da = self.slot(grads, *a);
                    for (drow, grow) in da.chunks_mut(ca).zip(g.chunks(w)) {
                        axpy(drow, &grow[..ca], 1.0);
                    }
                }
                if self.ng(*b) {
                    let db = self.slot(grads, *b);
                    for (drow, grow) in db.chunks_mut(cb).zip(g.chunks(w)) {
                        axpy(drow, &grow[ca..], 1.0);
                    }
                }
            }
            Op::Gather { src, idx } => {
                let c = if self.value(*src).is_matrix() {
                    self.value(*src).cols()
                } else {
                    1
                };
                let ds = self.slot(grads, *src);
                for (k, &i) in idx.iter().enumerate() {
                    axpy(&mut ds[i * c..(i + 1) * c], &g[k * c..(k + 1) * c], 1.0);
                }
            }
            Op::Row { mat, row } => {
                let c = self.value(*mat).cols();
                let dm = self.slot(grads, *mat);
                for (j, gi) in g.iter().enumerate() {
                    dm[row * c + j] += gi;
                }
            }
            Op::Column { mat, col } => {
                let c = self.value(*mat).cols();
                let dm = self.slot(grads, *mat);
                for (r, gi) in g.iter().enumerate() {
                    dm[r * c + col] += gi;
                }
            }
            Op::WeightedRowSum { w, mat } => {
                let (tw, tm) = (self.value(*w), self.value(*mat));
                let (r, c) = (tm.rows(), tm.cols());
                if self.ng(*w) {
                    let dw = self.slot(grads, *w);
                    for (i, d) in dw.iter_mut().enumerate() {
                        *d += dot(g, tm.row(i));
                    }
                }
                if self.ng(*mat) {
                    let dm = self.slot(grads, *mat);
                    gemm(r, 1, c, tw.data(), false, g, false, dm, true);
                }
            }
            Op::Sum(x) => {
                let dx = self.slot(grads, *x);
                dx.iter_mut().for_each(|d| *d += g[0]);
            }
            Op::CrossEntropy { logits, target } => {
                let mut p = self.value(*logits).data().to_vec();
                softmax_in_place(&mut p);
                p[*target] -= 1.0;
                axpy(self.slot(grads, *logits), &p, g[0]);
            }
            Op::CrossEntropyRows { logits, targets } => {
                let tl = self.value(*logits);
                let c = tl.cols();
                let scale = g[0] / targets.len() as f64;
                let dl = self.slot(grads, *logits);
                for (r, &t) in targets.iter().enumerate() {
                    let mut p = tl.row(r).to_vec();
                    softmax_in_place(&mut p);
                    p[t] -= 1.0;
                    axpy(&mut dl[r * c..(r + 1) * c], &p, scale);
                }
            }
        }
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> &'g mut [f64] {
        let n = self.nodes[v.0].value.len();
        grads[v.0].get_or_insert_with(|| vec![0.0; n])
    }
}

fn inputs(op: &Op) -> Vec<Var> {
    match op {
        Op::Constant | Op::Param(_) => vec![],
        Op::MatMul { a, b, .. } => vec![*a, *b],
        Op::MatVec { m, v } => vec![*m, *v],
        Op::Add(a, b) | Op::Mul(a, b) | Op::Dot(a, b) | Op::Concat(a, b) => vec![*a, *b],
        Op::AddRow { mat, row } => vec![*mat, *row],
        Op::AddScalar { x, s } | Op::ScaleBy { x, s } => vec![*x, *s],
        Op::ScaleRows { mat, w } => vec![*mat, *w],
        Op::WeightedRowSum { w, mat } => vec![*w, *mat],
        Op::MulConst { x, .. } | Op::Scale { x, .. } => vec![*x],
        Op::Relu(x) | Op::Sigmoid(x) | Op::Softmax(x) | Op::L2Normalize(x) | Op::Sum(x) => {
            vec![*x]
        }
        Op::Gather { src, .. } => vec![*src],
        Op::Column { mat, .. } | Op::Row { mat, .. } => vec![*mat],
        Op::CrossEntropy { logits, .. } | Op::CrossEntropyRows { logits, .. } => vec![*logits],
    }
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` when `v` does not
    /// influence the loss.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Like [`Gradients::wrt`] but reports an unreachable node as zeros.
    pub fn wrt_or_zero(&self, tape: &Tape, v: Var) -> Vec<f64> {
        self.wrt(v)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; tape.value(v).len()])
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], x: &[f64], alpha: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
