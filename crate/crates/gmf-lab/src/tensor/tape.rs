//! Record-and-replay reverse-mode differentiation.
//!
//! A `Tape` is an append-only arena of evaluated nodes. Forward calls push a
//! node carrying its value and the operation that produced it; `backward`
//! walks the arena once in reverse, pushing vector-Jacobian products toward
//! the leaves and accumulating into `Parameter` gradients.
//!
//! The one non-textbook operation is `barrier`: forward it is a bit-exact
//! identity, backward it refuses to pass the adjoint when its `blocks` flag
//! is set. Scoped losses are built by routing a subgraph through a blocking
//! barrier, which keeps that loss's influence away from everything upstream
//! of the barrier while leaving other losses on the same tape untouched.
//!
//! Tapes are cheap and single-use: build one per training step and drop it.

use crate::error::{Error, Result};
use crate::tensor::matrix::Matrix;
use crate::tensor::optim::{ParamId, ParamSet};

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    /// Constant leaf (inputs, targets, anything non-learnable).
    Constant,
    /// Snapshot of a parameter value; backward accumulates here.
    Param(ParamId),
    Matmul { a: NodeId, b: NodeId },
    Transpose { a: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    MulElem { a: NodeId, b: NodeId },
    Scale { a: NodeId, c: f64 },
    /// Row-broadcast add of a 1 x n bias onto an m x n matrix.
    AddBias { a: NodeId, bias: NodeId },
    Relu { a: NodeId },
    ConcatCols { parts: Vec<NodeId> },
    SliceCols { a: NodeId, start: usize, len: usize },
    /// Forward identity. With `blocks` set the adjoint stops here.
    Barrier { a: NodeId, blocks: bool },
    SumAll { a: NodeId },
    MseLoss { pred: NodeId, target: NodeId },
    CrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        /// Softmax rows cached at forward time for the backward pass.
        probs: Matrix,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
}

/// Append-only computation record.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    /// Value held at a node.
    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        debug_assert!(value.all_finite(), "non-finite entry after {:?}", op_name(&op));
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Constant)
    }

    /// Snapshot a parameter's current value onto the tape. The same
    /// parameter may appear any number of times; adjoints sum.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> NodeId {
        self.push(params.get(id).value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::Matmul { a, b }))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose { a })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub { a, b }))
    }

    pub fn mul_elem(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).mul_elem(self.value(b))?;
        Ok(self.push(v, Op::MulElem { a, b }))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).scale(c);
        self.push(v, Op::Scale { a, c })
    }

    /// `a + bias` where `bias` is 1 x n and broadcasts over the rows of `a`.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(bias).shape();
        if br != 1 || bc != ac {
            return Err(Error::shape(
                "add_bias",
                format!("1x{ac} bias for {ar}x{ac} input"),
                self.value(bias).shape_str(),
            ));
        }
        let av = self.value(a);
        let bv = self.value(bias);
        let v = Matrix::from_fn(ar, ac, |i, j| av.get(i, j) + bv.get(0, j));
        Ok(self.push(v, Op::AddBias { a, bias }))
    }

    /// Affine layer `x * W^T + bias` for weight (out x in) and bias (1 x out).
    pub fn linear(&mut self, x: NodeId, weight: NodeId, bias: NodeId) -> Result<NodeId> {
        let wt = self.transpose(weight);
        let xw = self.matmul(x, wt)?;
        self.add_bias(xw, bias)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(v, Op::Relu { a })
    }

    /// Concatenate along columns; every part must share the row count.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols of zero parts".into()));
        }
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(Error::shape(
                    "concat_cols",
                    format!("{rows} rows in every part"),
                    self.value(p).shape_str(),
                ));
            }
            cols += self.value(p).cols();
        }
        let mut v = Matrix::zeros(rows, cols);
        let mut at = 0;
        for &p in parts {
            let pv = self.value(p);
            for i in 0..rows {
                for j in 0..pv.cols() {
                    v.set(i, at + j, pv.get(i, j));
                }
            }
            at += pv.cols();
        }
        Ok(self.push(v, Op::ConcatCols { parts: parts.to_vec() }))
    }

    /// Columns `start .. start + len` of a node.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (rows, cols) = self.value(a).shape();
        if len == 0 || start + len > cols {
            return Err(Error::shape(
                "slice_cols",
                format!("non-empty range within {cols} columns"),
                format!("{start}..{}", start + len),
            ));
        }
        let av = self.value(a);
        let v = Matrix::from_fn(rows, len, |i, j| av.get(i, start + j));
        Ok(self.push(v, Op::SliceCols { a, start, len }))
    }

    /// Gradient barrier: bit-exact identity forward; when `blocks` is set the
    /// backward pass drops the adjoint instead of passing it to `a`.
    pub fn barrier(&mut self, a: NodeId, blocks: bool) -> NodeId {
        let v = self.value(a).clone();
        self.push(v, Op::Barrier { a, blocks })
    }

    /// Sum of every entry, as a 1 x 1 node.
    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).sum();
        self.push(
            Matrix::from_vec(1, 1, vec![s]).expect("1x1"),
            Op::SumAll { a },
        )
    }

    /// Mean squared error over all entries: `mean((pred - target)^2)`.
    /// The adjoint flows to both operands, so detach the target with a
    /// barrier when it must be treated as a constant.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let p = self.value(pred);
        let t = self.value(target);
        if p.shape() != t.shape() {
            return Err(Error::shape("mse_loss", p.shape_str(), t.shape_str()));
        }
        let n = (p.rows() * p.cols()) as f64;
        if n == 0.0 {
            return Err(Error::Contract("mse_loss of an empty matrix".into()));
        }
        let mut acc = 0.0;
        for (a, b) in p.data().iter().zip(t.data().iter()) {
            let d = a - b;
            acc += d * d;
        }
        Ok(self.push(
            Matrix::from_vec(1, 1, vec![acc / n]).expect("1x1"),
            Op::MseLoss { pred, target },
        ))
    }

    /// Mean negative log softmax probability of the true class.
    /// `logits` is batch x C; `labels[i]` is the class of row i.
    pub fn cross_entropy_loss(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let l = self.value(logits);
        let (batch, classes) = l.shape();
        if batch == 0 || classes == 0 {
            return Err(Error::Contract("cross_entropy_loss of an empty batch".into()));
        }
        if labels.len() != batch {
            return Err(Error::Contract(format!(
                "cross_entropy_loss: {} labels for a batch of {batch}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::Contract(format!(
                "cross_entropy_loss: label {bad} out of range for {classes} classes"
            )));
        }
        let mut probs = Matrix::zeros(batch, classes);
        let mut loss = 0.0;
        for i in 0..batch {
            let row = l.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for j in 0..classes {
                let e = (row[j] - m).exp();
                probs.set(i, j, e);
                z += e;
            }
            for j in 0..classes {
                probs.set(i, j, probs.get(i, j) / z);
            }
            // Log-space form: stays finite even when the true class's
            // probability underflows to zero.
            loss -= row[labels[i]] - m - z.ln();
        }
        loss /= batch as f64;
        Ok(self.push(
            Matrix::from_vec(1, 1, vec![loss]).expect("1x1"),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
        ))
    }

    /// Reverse sweep from a scalar root. Parameter gradients accumulate into
    /// `params` (on top of whatever is already there); call
    /// `ParamSet::zero_grads` or the optimizer step to clear them.
    pub fn backward(&self, loss: NodeId, params: &mut ParamSet) -> Result<()> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward root must be a 1x1 scalar, got {}",
                self.value(loss).shape_str()
            )));
        }
        let mut adj: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Matrix::from_vec(1, 1, vec![1.0]).expect("1x1"));

        for i in (0..=loss.0).rev() {
            let g = match adj[i].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[i].op {
                Op::Constant => {}
                Op::Param(pid) => {
                    let p = params.get_mut(*pid);
                    if p.grad.shape() != g.shape() {
                        return Err(Error::shape(
                            "backward",
                            p.grad.shape_str(),
                            g.shape_str(),
                        ));
                    }
                    p.grad.axpy(1.0, &g)?;
                }
                Op::Matmul { a, b } => {
                    let da = g.matmul(&self.value(*b).transpose())?;
                    let db = self.value(*a).transpose().matmul(&g)?;
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *b, db)?;
                }
                Op::Transpose { a } => {
                    accumulate(&mut adj, *a, g.transpose())?;
                }
                Op::Add { a, b } => {
                    accumulate(&mut adj, *a, g.clone())?;
                    accumulate(&mut adj, *b, g)?;
                }
                Op::Sub { a, b } => {
                    accumulate(&mut adj, *a, g.clone())?;
                    accumulate(&mut adj, *b, g.scale(-1.0))?;
                }
                Op::MulElem { a, b } => {
                    let da = g.mul_elem(self.value(*b))?;
                    let db = g.mul_elem(self.value(*a))?;
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *b, db)?;
                }
                Op::Scale { a, c } => {
                    accumulate(&mut adj, *a, g.scale(*c))?;
                }
                Op::AddBias { a, bias } => {
                    let cols = g.cols();
                    let mut db = Matrix::zeros(1, cols);
                    for r in 0..g.rows() {
                        for c in 0..cols {
                            db.set(0, c, db.get(0, c) + g.get(r, c));
                        }
                    }
                    accumulate(&mut adj, *a, g)?;
                    accumulate(&mut adj, *bias, db)?;
                }
                Op::Relu { a } => {
                    let av = self.value(*a);
                    let da = Matrix::from_fn(g.rows(), g.cols(), |r, c| {
                        if av.get(r, c) > 0.0 {
                            g.get(r, c)
                        } else {
                            0.0
                        }
                    });
                    accumulate(&mut adj, *a, da)?;
                }
                Op::ConcatCols { parts } => {
                    let mut at = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        let dp = Matrix::from_fn(g.rows(), w, |r, c| g.get(r, at + c));
                        accumulate(&mut adj, p, dp)?;
                        at += w;
                    }
                }
                Op::SliceCols { a, start, len } => {
                    let (rows, cols) = self.value(*a).shape();
                    let mut da = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..*len {
                            da.set(r, start + c, g.get(r, c));
                        }
                    }
                    accumulate(&mut adj, *a, da)?;
                }
                Op::Barrier { a, blocks } => {
                    if !*blocks {
                        accumulate(&mut adj, *a, g)?;
                    }
                }
                Op::SumAll { a } => {
                    let s = g.get(0, 0);
                    let (rows, cols) = self.value(*a).shape();
                    accumulate(&mut adj, *a, Matrix::from_fn(rows, cols, |_, _| s))?;
                }
                Op::MseLoss { pred, target } => {
                    let s = g.get(0, 0);
                    let p = self.value(*pred);
                    let t = self.value(*target);
                    let n = (p.rows() * p.cols()) as f64;
                    let diff = p.sub(t)?.scale(2.0 * s / n);
                    accumulate(&mut adj, *pred, diff.clone())?;
                    accumulate(&mut adj, *target, diff.scale(-1.0))?;
                }
                Op::CrossEntropy { logits, labels, probs } => {
                    let s = g.get(0, 0);
                    let batch = probs.rows();
                    let mut dl = probs.scale(s / batch as f64);
                    for (i, &y) in labels.iter().enumerate() {
                        dl.set(i, y, dl.get(i, y) - s / batch as f64);
                    }
                    accumulate(&mut adj, *logits, dl)?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Matrix>], id: NodeId, delta: Matrix) -> Result<()> {
    match &mut adj[id.0] {
        Some(m) => m.axpy(1.0, &delta),
        slot @ None => {
            *slot = Some(delta);
            Ok(())
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Constant => "constant",
        Op::Param(_) => "param",
        Op::Matmul { .. } => "matmul",
        Op::Transpose { .. } => "transpose",
        Op::Add { .. } => "add",
        Op::Sub { .. } => "sub",
        Op::MulElem { .. } => "mul_elem",
        Op::Scale { .. } => "scale",
        Op::AddBias { .. } => "add_bias",
        Op::Relu { .. } => "relu",
        Op::ConcatCols { .. } => "concat_cols",
        Op::SliceCols { .. } => "slice_cols",
        Op::Barrier { .. } => "barrier",
        Op::SumAll { .. } => "sum_all",
        Op::MseLoss { .. } => "mse_loss",
        Op::CrossEntropy { .. } => "cross_entropy_loss",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::prng::SplitMix64;

    fn grad_of(params: &ParamSet, id: ParamId) -> Vec<f64> {
        params.get(id).grad.data().to_vec()
    }

    #[test]
    fn sum_of_matvec_gives_ones_outer_x() {
        // loss = sum(W x) with x fixed => dL/dW = 1 * x^T replicated per row.
        let mut ps = ParamSet::new();
        let w = ps
            .insert("w", Matrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap())
            .unwrap();
        let mut tape = Tape::new();
        let wn = tape.param(&ps, w);
        let x = tape.constant(Matrix::from_vec(3, 1, vec![2.0, -1.0, 0.5]).unwrap());
        let y = tape.matmul(wn, x).unwrap();
        let loss = tape.sum_all(y);
        tape.backward(loss, &mut ps).unwrap();
        assert_eq!(grad_of(&ps, w), vec![2.0, -1.0, 0.5, 2.0, -1.0, 0.5]);
    }

    #[test]
    fn mse_hand_values() {
        let mut tape = Tape::new();
        let p = tape.constant(Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let t = tape.constant(Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 2.0]).unwrap());
        let l = tape.mse_loss(p, t).unwrap();
        assert_eq!(tape.value(l).get(0, 0), 1.0); // single diff of 2 over 4 entries

        let mut tape = Tape::new();
        let p = tape.constant(Matrix::from_vec(1, 1, vec![2.0]).unwrap());
        let t = tape.constant(Matrix::from_vec(1, 1, vec![0.0]).unwrap());
        let l = tape.mse_loss(p, t).unwrap();
        assert_eq!(tape.value(l).get(0, 0), 4.0);
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_c() {
        let mut tape = Tape::new();
        let logits = tape.constant(Matrix::zeros(3, 4));
        let l = tape.cross_entropy_loss(logits, &[0, 1, 3]).unwrap();
        assert!((tape.value(l).get(0, 0) - 4.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_matches_hand_softmax() {
        // Batch of two, worked by explicit softmax arithmetic.
        let rows = vec![1.0, 2.0, 0.5, -0.5];
        let mut tape = Tape::new();
        let logits = tape.constant(Matrix::from_vec(2, 2, rows).unwrap());
        let l = tape.cross_entropy_loss(logits, &[0, 1]).unwrap();
        let e = |x: f64| x.exp();
        let p0 = e(1.0) / (e(1.0) + e(2.0));
        let p1 = e(-0.5) / (e(0.5) + e(-0.5));
        let expected = -(p0.ln() + p1.ln()) / 2.0;
        assert!((tape.value(l).get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_decreases_with_margin() {
        let loss_at = |margin: f64| {
            let mut tape = Tape::new();
            let logits =
                tape.constant(Matrix::from_vec(1, 3, vec![margin, 0.0, 0.0]).unwrap());
            let l = tape.cross_entropy_loss(logits, &[0]).unwrap();
            tape.value(l).get(0, 0)
        };
        assert!(loss_at(2.0) < loss_at(1.0));
        assert!(loss_at(1.0) < loss_at(0.0));
    }

    #[test]
    fn out_of_range_label_is_a_contract_error() {
        let mut tape = Tape::new();
        let logits = tape.constant(Matrix::zeros(1, 3));
        assert!(matches!(
            tape.cross_entropy_loss(logits, &[3]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn backward_root_must_be_scalar() {
        let mut ps = ParamSet::new();
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::zeros(2, 2));
        assert!(matches!(tape.backward(a, &mut ps), Err(Error::Contract(_))));
    }

    #[test]
    fn blocking_barrier_zeroes_the_upstream_adjoint_bitwise() {
        let mut ps = ParamSet::new();
        let w = ps.insert("w", Matrix::from_vec(1, 1, vec![3.0]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let wn = tape.param(&ps, w);
        let blocked = tape.barrier(wn, true);
        let sq = tape.mul_elem(blocked, blocked).unwrap();
        let loss = tape.sum_all(sq);
        // Forward identity is bit-exact.
        assert_eq!(tape.value(blocked).get(0, 0).to_bits(), 3.0_f64.to_bits());
        tape.backward(loss, &mut ps).unwrap();
        assert_eq!(ps.get(w).grad.get(0, 0).to_bits(), 0.0_f64.to_bits());

        // Same graph with the flag off: d(w^2)/dw = 6.
        let mut tape = Tape::new();
        let wn = tape.param(&ps, w);
        let open = tape.barrier(wn, false);
        let sq = tape.mul_elem(open, open).unwrap();
        let loss = tape.sum_all(sq);
        tape.backward(loss, &mut ps).unwrap();
        assert_eq!(ps.get(w).grad.get(0, 0), 6.0);
    }

    #[test]
    fn same_parameter_used_twice_sums_adjoints() {
        let mut ps = ParamSet::new();
        let w = ps.insert("w", Matrix::from_vec(1, 1, vec![2.0]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let w1 = tape.param(&ps, w);
        let w2 = tape.param(&ps, w);
        let s = tape.add(w1, w2).unwrap();
        let loss = tape.sum_all(s);
        tape.backward(loss, &mut ps).unwrap();
        assert_eq!(ps.get(w).grad.get(0, 0), 2.0);
    }

    #[test]
    fn finite_differences_agree_on_a_small_mixed_graph() {
        // loss = mse(relu(concat[x W1^T + b, slice(x,0,2)]) W2^T + b2, T)
        let mut rng = SplitMix64::stream(11, "fd-graph");
        let build = |ps: &ParamSet, w1: ParamId, b1: ParamId, w2: ParamId, b2: ParamId| {
            let mut tape = Tape::new();
            let x = tape.constant(Matrix::from_vec(2, 3, vec![0.3, -0.7, 0.2, 1.1, 0.4, -0.2]).unwrap());
            let t = tape.constant(Matrix::from_vec(2, 2, vec![0.1, -0.3, 0.8, 0.25]).unwrap());
            let w1n = tape.param(ps, w1);
            let b1n = tape.param(ps, b1);
            let h = tape.linear(x, w1n, b1n).unwrap();
            let hr = tape.relu(h);
            let xs = tape.slice_cols(x, 0, 2).unwrap();
            let cat = tape.concat_cols(&[hr, xs]).unwrap();
            let w2n = tape.param(ps, w2);
            let b2n = tape.param(ps, b2);
            let out = tape.linear(cat, w2n, b2n).unwrap();
            let loss = tape.mse_loss(out, t).unwrap();
            (tape, loss)
        };

        let mut ps = ParamSet::new();
        let w1 = ps.insert_linear_weight("w1", 4, 3, &mut rng).unwrap();
        let b1 = ps.insert_bias("b1", 4, 3, &mut rng).unwrap();
        let w2 = ps.insert_linear_weight("w2", 2, 6, &mut rng).unwrap();
        let b2 = ps.insert_bias("b2", 2, 6, &mut rng).unwrap();

        let (tape, loss) = build(&ps, w1, b1, w2, b2);
        tape.backward(loss, &mut ps).unwrap();
        let analytic: Vec<Vec<f64>> = [w1, b1, w2, b2]
            .iter()
            .map(|&id| ps.get(id).grad.data().to_vec())
            .collect();

        let h = 1e-5;
        for (k, &id) in [w1, b1, w2, b2].iter().enumerate() {
            let n = ps.get(id).value.data().len();
            for e in 0..n {
                let orig = ps.get(id).value.data()[e];
                ps.get_mut(id).value.data_mut()[e] = orig + h;
                let (tp, lp) = build(&ps, w1, b1, w2, b2);
                let fp = tp.value(lp).get(0, 0);
                ps.get_mut(id).value.data_mut()[e] = orig - h;
                let (tm, lm) = build(&ps, w1, b1, w2, b2);
                let fm = tm.value(lm).get(0, 0);
                ps.get_mut(id).value.data_mut()[e] = orig;
                let fd = (fp - fm) / (2.0 * h);
                let an = analytic[k][e];
                let denom = an.abs().max(fd.abs()).max(1e-8);
                assert!(
                    ((an - fd) / denom).abs() < 1e-5,
                    "param {k} entry {e}: analytic {an} vs fd {fd}"
                );
            }
        }
    }
}
