//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A `Tape` is a define-by-run arena: every forward operation pushes a node
//! holding its value and the rule needed to propagate gradients to its
//! parents. One training step owns one tape; tape order is the topological
//! order of the graph by construction.

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Handle to a tape node. Cheap to copy; only valid for the tape that
/// created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Largest f64 strictly below 1.0; sigmoid/tanh outputs are clamped inside
/// the open interval so saturation never rounds onto the boundary.
const ONE_INSIDE: f64 = 1.0 - f64::EPSILON / 2.0;

fn stable_sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, ONE_INSIDE)
}

fn stable_tanh(x: f64) -> f64 {
    x.tanh().clamp(-ONE_INSIDE, ONE_INSIDE)
}

#[derive(Clone, Debug)]
enum Rule {
    Leaf,
    MatMul(VarId, VarId),
    Add(VarId, VarId),
    Sub(VarId, VarId),
    Hadamard(VarId, VarId),
    Scale(VarId, f64),
    OneMinus(VarId),
    AddBias(VarId, VarId),
    Sigmoid(VarId),
    Tanh(VarId),
    Relu(VarId),
    Abs(VarId),
    ConcatCols(VarId, VarId),
    ConcatRows(VarId, VarId),
    MeanRows(VarId),
    Transpose(VarId),
    Reshape(VarId),
    SliceBlock { src: VarId, row0: usize, col0: usize },
    Sum(VarId),
}

struct Node {
    value: DenseMatrix,
    grad: DenseMatrix,
    rule: Rule,
    needs_grad: bool,
}

pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix, rule: Rule, needs_grad: bool) -> VarId {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        self.nodes.push(Node {
            value,
            grad,
            rule,
            needs_grad,
        });
        VarId(self.nodes.len() - 1)
    }

    /// Differentiable input: `backward` fills its gradient.
    pub fn leaf(&mut self, value: DenseMatrix) -> VarId {
        self.push(value, Rule::Leaf, true)
    }

    /// Non-differentiable input (data frames, the fixed adjacency); backward
    /// skips it and its gradient stays zero.
    pub fn constant(&mut self, value: DenseMatrix) -> VarId {
        self.push(value, Rule::Leaf, false)
    }

    pub fn value(&self, id: VarId) -> &DenseMatrix {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: VarId) -> &DenseMatrix {
        &self.nodes[id.0].grad
    }

    pub fn reset_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad.fill(0.0);
        }
    }

    fn needs(&self, id: VarId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn binary_needs(&self, a: VarId, b: VarId) -> bool {
        self.needs(a) || self.needs(b)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Rule::MatMul(a, b), self.binary_needs(a, b)))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(value, Rule::Add(a, b), self.binary_needs(a, b)))
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(value, Rule::Sub(a, b), self.binary_needs(a, b)))
    }

    pub fn hadamard(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(value, Rule::Hadamard(a, b), self.binary_needs(a, b)))
    }

    pub fn scale(&mut self, a: VarId, alpha: f64) -> VarId {
        let value = self.value(a).scale(alpha);
        self.push(value, Rule::Scale(a, alpha), self.needs(a))
    }

    /// 1 - x, entrywise.
    pub fn one_minus(&mut self, a: VarId) -> VarId {
        let value = self.value(a).map(|v| 1.0 - v);
        self.push(value, Rule::OneMinus(a), self.needs(a))
    }

    /// Adds a 1xC bias row to every row of a RxC matrix.
    pub fn add_bias(&mut self, a: VarId, bias: VarId) -> Result<VarId> {
        let (m, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != m.cols() {
            return Err(Error::shape("add_bias", m.dims(), b.dims()));
        }
        let mut value = m.clone();
        for i in 0..value.rows() {
            for j in 0..value.cols() {
                let v = value.get(i, j) + b.get(0, j);
                value.set(i, j, v);
            }
        }
        Ok(self.push(value, Rule::AddBias(a, bias), self.binary_needs(a, bias)))
    }

    pub fn sigmoid(&mut self, a: VarId) -> VarId {
        let value = self.value(a).map(stable_sigmoid);
        self.push(value, Rule::Sigmoid(a), self.needs(a))
    }

    pub fn tanh(&mut self, a: VarId) -> VarId {
        let value = self.value(a).map(stable_tanh);
        self.push(value, Rule::Tanh(a), self.needs(a))
    }

    pub fn relu(&mut self, a: VarId) -> VarId {
        let value = self.value(a).map(|v| v.max(0.0));
        self.push(value, Rule::Relu(a), self.needs(a))
    }

    /// |x| entrywise, with subgradient 0 at x = 0.
    pub fn abs(&mut self, a: VarId) -> VarId {
        let value = self.value(a).map(f64::abs);
        self.push(value, Rule::Abs(a), self.needs(a))
    }

    pub fn concat_cols(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (ma, mb) = (self.value(a), self.value(b));
        if ma.rows() != mb.rows() {
            return Err(Error::shape("concat_cols", ma.dims(), mb.dims()));
        }
        let (rows, ca, cb) = (ma.rows(), ma.cols(), mb.cols());
        let mut value = DenseMatrix::zeros(rows, ca + cb);
        for i in 0..rows {
            for j in 0..ca {
                value.set(i, j, ma.get(i, j));
            }
            for j in 0..cb {
                value.set(i, ca + j, mb.get(i, j));
            }
        }
        Ok(self.push(value, Rule::ConcatCols(a, b), self.binary_needs(a, b)))
    }

    pub fn concat_rows(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (ma, mb) = (self.value(a), self.value(b));
        if ma.cols() != mb.cols() {
            return Err(Error::shape("concat_rows", ma.dims(), mb.dims()));
        }
        let mut values = ma.values().to_vec();
        values.extend_from_slice(mb.values());
        let value = DenseMatrix::from_vec(ma.rows() + mb.rows(), ma.cols(), values)?;
        Ok(self.push(value, Rule::ConcatRows(a, b), self.binary_needs(a, b)))
    }

    /// Column-wise mean over rows: RxC -> 1xC.
    pub fn mean_rows(&mut self, a: VarId) -> VarId {
        let m = self.value(a);
        let (rows, cols) = m.shape();
        let mut value = DenseMatrix::zeros(1, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = value.get(0, j) + m.get(i, j);
                value.set(0, j, v);
            }
        }
        let value = value.scale(1.0 / rows as f64);
        self.push(value, Rule::MeanRows(a), self.needs(a))
    }

    pub fn transpose(&mut self, a: VarId) -> VarId {
        let value = self.value(a).transpose();
        self.push(value, Rule::Transpose(a), self.needs(a))
    }

    /// Row-major reinterpretation to a new shape with the same element count.
    pub fn reshape(&mut self, a: VarId, rows: usize, cols: usize) -> Result<VarId> {
        let m = self.value(a);
        if m.rows() * m.cols() != rows * cols {
            return Err(Error::shape("reshape", m.dims(), format!("{}x{}", rows, cols)));
        }
        let value = DenseMatrix::from_vec(rows, cols, m.values().to_vec())?;
        Ok(self.push(value, Rule::Reshape(a), self.needs(a)))
    }

    /// Contiguous submatrix starting at (row0, col0).
    pub fn slice_block(&mut self, a: VarId, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<VarId> {
        let m = self.value(a);
        if row0 + rows > m.rows() || col0 + cols > m.cols() {
            return Err(Error::shape(
                "slice_block",
                m.dims(),
                format!("[{}..{}, {}..{}]", row0, row0 + rows, col0, col0 + cols),
            ));
        }
        let mut value = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                value.set(i, j, m.get(row0 + i, col0 + j));
            }
        }
        Ok(self.push(value, Rule::SliceBlock { src: a, row0, col0 }, self.needs(a)))
    }

    /// Sum of all entries as a 1x1 scalar node.
    pub fn sum(&mut self, a: VarId) -> VarId {
        let value = DenseMatrix::from_vec(1, 1, vec![self.value(a).sum()]).expect("1x1");
        self.push(value, Rule::Sum(a), self.needs(a))
    }

    /// Propagates d(loss)/d(node) to every node the loss depends on and adds
    /// it into the node's persistent gradient, so repeated calls accumulate.
    pub fn backward(&mut self, loss: VarId) -> Result<()> {
        let loss_shape = self.value(loss).shape();
        if loss_shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward requires a 1x1 scalar loss, got {}x{}",
                loss_shape.0, loss_shape.1
            )));
        }

        let mut scratch: Vec<Option<DenseMatrix>> = vec![None; loss.0 + 1];
        scratch[loss.0] = Some(DenseMatrix::from_vec(1, 1, vec![1.0]).expect("1x1"));

        for idx in (0..=loss.0).rev() {
            let Some(g) = scratch[idx].take() else {
                continue;
            };
            if !self.nodes[idx].needs_grad {
                continue;
            }
            self.nodes[idx].grad.axpy(1.0, &g)?;
            let rule = self.nodes[idx].rule.clone();
            match rule {
                Rule::Leaf => {}
                Rule::MatMul(a, b) => {
                    if self.needs(a) {
                        let da = g.matmul(&self.value(b).transpose())?;
                        accumulate(&mut scratch, a, da);
                    }
                    if self.needs(b) {
                        let db = self.value(a).transpose().matmul(&g)?;
                        accumulate(&mut scratch, b, db);
                    }
                }
                Rule::Add(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.clone());
                    }
                    if self.needs(b) {
                        accumulate(&mut scratch, b, g);
                    }
                }
                Rule::Sub(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.clone());
                    }
                    if self.needs(b) {
                        accumulate(&mut scratch, b, g.scale(-1.0));
                    }
                }
                Rule::Hadamard(a, b) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.hadamard(self.value(b))?);
                    }
                    if self.needs(b) {
                        accumulate(&mut scratch, b, g.hadamard(self.value(a))?);
                    }
                }
                Rule::Scale(a, alpha) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.scale(alpha));
                    }
                }
                Rule::OneMinus(a) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.scale(-1.0));
                    }
                }
                Rule::AddBias(a, bias) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.clone());
                    }
                    if self.needs(bias) {
                        let mut db = DenseMatrix::zeros(1, g.cols());
                        for i in 0..g.rows() {
                            for j in 0..g.cols() {
                                let v = db.get(0, j) + g.get(i, j);
                                db.set(0, j, v);
                            }
                        }
                        accumulate(&mut scratch, bias, db);
                    }
                }
                Rule::Sigmoid(a) => {
                    if self.needs(a) {
                        let y = &self.nodes[idx].value;
                        let dy = y.map(|s| s * (1.0 - s));
                        accumulate(&mut scratch, a, g.hadamard(&dy)?);
                    }
                }
                Rule::Tanh(a) => {
                    if self.needs(a) {
                        let y = &self.nodes[idx].value;
                        let dy = y.map(|t| 1.0 - t * t);
                        accumulate(&mut scratch, a, g.hadamard(&dy)?);
                    }
                }
                Rule::Relu(a) => {
                    if self.needs(a) {
                        let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                        accumulate(&mut scratch, a, g.hadamard(&mask)?);
                    }
                }
                Rule::Abs(a) => {
                    if self.needs(a) {
                        let sign = self.value(a).map(|x| {
                            if x > 0.0 {
                                1.0
                            } else if x < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        });
                        accumulate(&mut scratch, a, g.hadamard(&sign)?);
                    }
                }
                Rule::ConcatCols(a, b) => {
                    let ca = self.value(a).cols();
                    if self.needs(a) {
                        let mut da = DenseMatrix::zeros(g.rows(), ca);
                        for i in 0..g.rows() {
                            for j in 0..ca {
                                da.set(i, j, g.get(i, j));
                            }
                        }
                        accumulate(&mut scratch, a, da);
                    }
                    if self.needs(b) {
                        let cb = g.cols() - ca;
                        let mut db = DenseMatrix::zeros(g.rows(), cb);
                        for i in 0..g.rows() {
                            for j in 0..cb {
                                db.set(i, j, g.get(i, ca + j));
                            }
                        }
                        accumulate(&mut scratch, b, db);
                    }
                }
                Rule::ConcatRows(a, b) => {
                    let ra = self.value(a).rows();
                    if self.needs(a) {
                        let da = DenseMatrix::from_vec(ra, g.cols(), g.values()[..ra * g.cols()].to_vec())?;
                        accumulate(&mut scratch, a, da);
                    }
                    if self.needs(b) {
                        let rb = g.rows() - ra;
                        let db = DenseMatrix::from_vec(rb, g.cols(), g.values()[ra * g.cols()..].to_vec())?;
                        accumulate(&mut scratch, b, db);
                    }
                }
                Rule::MeanRows(a) => {
                    if self.needs(a) {
                        let rows = self.value(a).rows();
                        let inv = 1.0 / rows as f64;
                        let mut da = DenseMatrix::zeros(rows, g.cols());
                        for i in 0..rows {
                            for j in 0..g.cols() {
                                da.set(i, j, g.get(0, j) * inv);
                            }
                        }
                        accumulate(&mut scratch, a, da);
                    }
                }
                Rule::Transpose(a) => {
                    if self.needs(a) {
                        accumulate(&mut scratch, a, g.transpose());
                    }
                }
                Rule::Reshape(a) => {
                    if self.needs(a) {
                        let (r, c) = self.value(a).shape();
                        let da = DenseMatrix::from_vec(r, c, g.values().to_vec())?;
                        accumulate(&mut scratch, a, da);
                    }
                }
                Rule::SliceBlock { src, row0, col0 } => {
                    if self.needs(src) {
                        let (r, c) = self.value(src).shape();
                        let mut da = DenseMatrix::zeros(r, c);
                        for i in 0..g.rows() {
                            for j in 0..g.cols() {
                                da.set(row0 + i, col0 + j, g.get(i, j));
                            }
                        }
                        accumulate(&mut scratch, src, da);
                    }
                }
                Rule::Sum(a) => {
                    if self.needs(a) {
                        let (r, c) = self.value(a).shape();
                        accumulate(&mut scratch, a, DenseMatrix::filled(r, c, g.get(0, 0)));
                    }
                }
            }
        }
        Ok(())
    }
}

fn accumulate(scratch: &mut [Option<DenseMatrix>], id: VarId, delta: DenseMatrix) {
    match &mut scratch[id.index()] {
        Some(existing) => existing.axpy(1.0, &delta).expect("matching shapes"),
        slot @ None => *slot = Some(delta),
    }
}
