//! Append-only compute tape with reverse-mode differentiation.
//!
//! Every value produced during a forward pass is a node on the tape; node
//! inputs always refer to earlier nodes, so the tape is a DAG in topological
//! order and `backward` is a single reverse sweep.

use super::kernels as k;
use super::{NumError, Scalar, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The closed set of differentiable operations, without payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    MatMul,
    RowSoftmax,
    RowLogSoftmax,
    Sigmoid,
    Softplus,
    Tanh,
    Relu,
    Exp,
    Log,
    Sum,
    Mean,
    Concat,
    GatherRows,
    ScatterAddRows,
    L2NormalizeRows,
    LayerNormRows,
    EmbeddingLookup,
    MaskedFill,
    CrossEntropyRows,
    Transpose,
    NarrowCols,
}

impl OpKind {
    pub const ALL: [OpKind; 24] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::MatMul,
        OpKind::RowSoftmax,
        OpKind::RowLogSoftmax,
        OpKind::Sigmoid,
        OpKind::Softplus,
        OpKind::Tanh,
        OpKind::Relu,
        OpKind::Exp,
        OpKind::Log,
        OpKind::Sum,
        OpKind::Mean,
        OpKind::Concat,
        OpKind::GatherRows,
        OpKind::ScatterAddRows,
        OpKind::L2NormalizeRows,
        OpKind::LayerNormRows,
        OpKind::EmbeddingLookup,
        OpKind::MaskedFill,
        OpKind::CrossEntropyRows,
        OpKind::Transpose,
        OpKind::NarrowCols,
    ];
}

/// An operation together with its non-tensor arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// Element-wise, numpy-style broadcasting.
    Add,
    Sub,
    Mul,
    /// Rank-2 matrix product.
    MatMul,
    RowSoftmax,
    RowLogSoftmax,
    Sigmoid,
    Softplus,
    Tanh,
    Relu,
    Exp,
    Log,
    /// Sum over one axis, or over everything when `axis` is `None`.
    Sum { axis: Option<usize> },
    Mean { axis: Option<usize> },
    Concat { axis: usize },
    GatherRows { index: Vec<usize> },
    /// Inputs `(dest, src)`; row `s` of `src` is added into row `index[s]` of `dest`.
    ScatterAddRows { index: Vec<usize> },
    L2NormalizeRows,
    /// Inputs `(x, gain, bias)`.
    LayerNormRows { eps: f64 },
    /// Input is the table; output row `r` is `table[ids[r]]`.
    EmbeddingLookup { ids: Vec<usize> },
    /// Inputs `(x, mask)`; output is `x + mask`.
    MaskedFill,
    /// Per-row `-log_softmax(x)[target]`, output shape `[rows]`.
    CrossEntropyRows { targets: Vec<usize> },
    Transpose,
    NarrowCols { start: usize, len: usize },
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Add => OpKind::Add,
            Op::Sub => OpKind::Sub,
            Op::Mul => OpKind::Mul,
            Op::MatMul => OpKind::MatMul,
            Op::RowSoftmax => OpKind::RowSoftmax,
            Op::RowLogSoftmax => OpKind::RowLogSoftmax,
            Op::Sigmoid => OpKind::Sigmoid,
            Op::Softplus => OpKind::Softplus,
            Op::Tanh => OpKind::Tanh,
            Op::Relu => OpKind::Relu,
            Op::Exp => OpKind::Exp,
            Op::Log => OpKind::Log,
            Op::Sum { .. } => OpKind::Sum,
            Op::Mean { .. } => OpKind::Mean,
            Op::Concat { .. } => OpKind::Concat,
            Op::GatherRows { .. } => OpKind::GatherRows,
            Op::ScatterAddRows { .. } => OpKind::ScatterAddRows,
            Op::L2NormalizeRows => OpKind::L2NormalizeRows,
            Op::LayerNormRows { .. } => OpKind::LayerNormRows,
            Op::EmbeddingLookup { .. } => OpKind::EmbeddingLookup,
            Op::MaskedFill => OpKind::MaskedFill,
            Op::CrossEntropyRows { .. } => OpKind::CrossEntropyRows,
            Op::Transpose => OpKind::Transpose,
            Op::NarrowCols { .. } => OpKind::NarrowCols,
        }
    }

    fn name(&self) -> &'static str {
        match self.kind() {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::MatMul => "matmul",
            OpKind::RowSoftmax => "row_softmax",
            OpKind::RowLogSoftmax => "row_log_softmax",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Softplus => "softplus",
            OpKind::Tanh => "tanh",
            OpKind::Relu => "relu",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::Concat => "concat",
            OpKind::GatherRows => "gather_rows",
            OpKind::ScatterAddRows => "scatter_add_rows",
            OpKind::L2NormalizeRows => "l2_normalize_rows",
            OpKind::LayerNormRows => "layer_norm_rows",
            OpKind::EmbeddingLookup => "embedding_lookup",
            OpKind::MaskedFill => "masked_fill",
            OpKind::CrossEntropyRows => "cross_entropy_rows",
            OpKind::Transpose => "transpose",
            OpKind::NarrowCols => "narrow_cols",
        }
    }
}

#[derive(Debug)]
struct Node<T> {
    op: Option<Op>,
    inputs: Vec<Var>,
    value: Tensor<T>,
    needs_grad: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros of `shape` if the loss does not depend on it.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor<T> {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape))
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    backward_done: bool,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), backward_done: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Option<Op>, inputs: Vec<Var>, value: Tensor<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, inputs, value, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable input (a parameter or probe point).
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(None, vec![], value, true)
    }

    /// A non-differentiable input.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(None, vec![], value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Evaluate `op` on `inputs` and record the result.
    pub fn apply(&mut self, op: Op, inputs: &[Var]) -> Result<Var, NumError> {
        if self.backward_done {
            return Err(NumError::TapeConsumed);
        }
        let arity = match op.kind() {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::MatMul => Some(2),
            OpKind::ScatterAddRows | OpKind::MaskedFill => Some(2),
            OpKind::LayerNormRows => Some(3),
            OpKind::Concat => None,
            _ => Some(1),
        };
        if let Some(n) = arity {
            if inputs.len() != n {
                return Err(NumError::Shape {
                    op: op.name(),
                    detail: format!("expected {n} inputs, got {}", inputs.len()),
                });
            }
        }
        if inputs.iter().any(|v| v.0 >= self.nodes.len()) {
            return Err(NumError::Shape { op: op.name(), detail: "input refers past the tape end".into() });
        }
        let value = self.forward(&op, inputs)?;
        if !value.all_finite() {
            return Err(NumError::NonFinite { op: op.name() });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        Ok(self.push(Some(op), inputs.to_vec(), value, needs_grad))
    }

    fn forward(&self, op: &Op, inputs: &[Var]) -> Result<Tensor<T>, NumError> {
        let x = |i: usize| &self.nodes[inputs[i].0].value;
        let unary = |f: fn(T) -> T| Ok(x(0).map(f));
        match op {
            Op::Add => k::broadcast_binary("add", x(0), x(1), |a, b| a + b),
            Op::Sub => k::broadcast_binary("sub", x(0), x(1), |a, b| a - b),
            Op::Mul => k::broadcast_binary("mul", x(0), x(1), |a, b| a * b),
            Op::MatMul => k::matmul(x(0), x(1), false, false),
            Op::RowSoftmax => k::softmax_rows(x(0), false),
            Op::RowLogSoftmax => k::softmax_rows(x(0), true),
            Op::Sigmoid => unary(k::sigmoid),
            Op::Softplus => unary(k::softplus),
            Op::Tanh => unary(|v| v.tanh()),
            Op::Relu => unary(|v| v.max(T::zero())),
            Op::Exp => unary(|v| v.exp()),
            Op::Log => unary(|v| v.ln()),
            Op::Sum { axis } => k::reduce_axis("sum", x(0), *axis, false),
            Op::Mean { axis } => k::reduce_axis("mean", x(0), *axis, true),
            Op::Concat { axis } => {
                let parts: Vec<&Tensor<T>> = (0..inputs.len()).map(x).collect();
                k::concat(&parts, *axis)
            }
            Op::GatherRows { index } => k::gather_rows("gather_rows", x(0), index),
            Op::EmbeddingLookup { ids } => k::gather_rows("embedding_lookup", x(0), ids),
            Op::ScatterAddRows { index } => k::scatter_add_rows(x(0), x(1), index),
            Op::L2NormalizeRows => {
                let (r, c) = k::row_view("l2_normalize_rows", x(0))?;
                let mut out = Vec::with_capacity(r * c);
                for i in 0..r {
                    let row = &x(0).data()[i * c..(i + 1) * c];
                    let n = row.iter().map(|&v| v * v).sum::<T>().sqrt();
                    if n == T::zero() {
                        return Err(NumError::ZeroRow { op: "l2_normalize_rows", row: i });
                    }
                    out.extend(row.iter().map(|&v| v / n));
                }
                Tensor::new(x(0).shape().to_vec(), out)
            }
            Op::LayerNormRows { eps } => {
                let (r, c) = k::row_view("layer_norm_rows", x(0))?;
                if x(1).shape() != [c] || x(2).shape() != [c] {
                    return Err(NumError::Shape {
                        op: "layer_norm_rows",
                        detail: format!("gain/bias must be [{c}], got {:?}/{:?}", x(1).shape(), x(2).shape()),
                    });
                }
                let (gain, bias) = (x(1).data(), x(2).data());
                let eps = T::from_f64(*eps);
                let mut out = Vec::with_capacity(r * c);
                for i in 0..r {
                    let row = &x(0).data()[i * c..(i + 1) * c];
                    let (mu, inv) = row_stats(row, eps);
                    out.extend(row.iter().enumerate().map(|(j, &v)| (v - mu) * inv * gain[j] + bias[j]));
                }
                Tensor::new(x(0).shape().to_vec(), out)
            }
            Op::MaskedFill => {
                if x(0).shape() != x(1).shape() {
                    return Err(NumError::Shape {
                        op: "masked_fill",
                        detail: format!("mask {:?} vs input {:?}", x(1).shape(), x(0).shape()),
                    });
                }
                k::broadcast_binary("masked_fill", x(0), x(1), |a, b| a + b)
            }
            Op::CrossEntropyRows { targets } => {
                let (r, c) = x(0).dims2()?;
                if targets.len() != r {
                    return Err(NumError::Shape {
                        op: "cross_entropy_rows",
                        detail: format!("{} targets for {r} rows", targets.len()),
                    });
                }
                let ls = k::softmax_rows(x(0), true)?;
                let mut out = Vec::with_capacity(r);
                for (i, &t) in targets.iter().enumerate() {
                    if t >= c {
                        return Err(NumError::Index { op: "cross_entropy_rows", index: t, bound: c });
                    }
                    out.push(-ls.data()[i * c + t]);
                }
                Tensor::new(vec![r], out)
            }
            Op::Transpose => x(0).transpose2(),
            Op::NarrowCols { start, len } => {
                let (_, c) = x(0).dims2()?;
                if start + len > c {
                    return Err(NumError::Index { op: "narrow_cols", index: start + len, bound: c + 1 });
                }
                Ok(k::narrow(x(0), 1, *start, *len))
            }
        }
    }

    /// Reverse sweep from a scalar `loss`. A tape can be swept once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>, NumError> {
        if self.backward_done {
            return Err(NumError::TapeConsumed);
        }
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(NumError::NotScalar { shape: self.nodes[loss.0].value.shape().to_vec() });
        }
        self.backward_done = true;
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.nodes[loss.0].value.shape(), T::one()));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if let Some(op) = &node.op {
                if node.needs_grad {
                    let input_grads = self.vjp(op, &node.inputs, &node.value, &g)?;
                    for (inp, ig) in node.inputs.iter().zip(input_grads) {
                        let Some(ig) = ig else { continue };
                        if !self.nodes[inp.0].needs_grad {
                            continue;
                        }
                        grads[inp.0] = Some(match grads[inp.0].take() {
                            None => ig,
                            Some(acc) => k::broadcast_binary("accumulate", &acc, &ig, |a, b| a + b)?,
                        });
                    }
                }
            }
            grads[idx] = Some(g);
        }
        if let Some(bad) = grads.iter().flatten().find(|g| !g.all_finite()) {
            let _ = bad;
            return Err(NumError::NonFinite { op: "backward" });
        }
        Ok(Gradients { grads })
    }

    /// Vector-Jacobian product of `op` for upstream gradient `g`.
    fn vjp(&self, op: &Op, inputs: &[Var], y: &Tensor<T>, g: &Tensor<T>) -> Result<Vec<Option<Tensor<T>>>, NumError> {
        let x = |i: usize| &self.nodes[inputs[i].0].value;
        let want = |i: usize| self.nodes[inputs[i].0].needs_grad;
        let elementwise = |f: &dyn Fn(T, T, T) -> T| -> Result<Vec<Option<Tensor<T>>>, NumError> {
            // f(x, y, g)
            let d = x(0).data().iter().zip(y.data()).zip(g.data()).map(|((&xv, &yv), &gv)| f(xv, yv, gv)).collect();
            Ok(vec![Some(Tensor::new(y.shape().to_vec(), d)?)])
        };
        match op {
            Op::Add | Op::MaskedFill => Ok(vec![
                want(0).then(|| k::reduce_to(g, x(0).shape())),
                want(1).then(|| k::reduce_to(g, x(1).shape())),
            ]),
            Op::Sub => Ok(vec![
                want(0).then(|| k::reduce_to(g, x(0).shape())),
                want(1).then(|| k::reduce_to(&g.map(|v| -v), x(1).shape())),
            ]),
            Op::Mul => {
                let ga = if want(0) {
                    Some(k::reduce_to(&k::broadcast_binary("mul", g, &k::expand_to(x(1), g.shape()), |a, b| a * b)?, x(0).shape()))
                } else {
                    None
                };
                let gb = if want(1) {
                    Some(k::reduce_to(&k::broadcast_binary("mul", g, &k::expand_to(x(0), g.shape()), |a, b| a * b)?, x(1).shape()))
                } else {
                    None
                };
                Ok(vec![ga, gb])
            }
            Op::MatMul => Ok(vec![
                if want(0) { Some(k::matmul(g, x(1), false, true)?) } else { None },
                if want(1) { Some(k::matmul(x(0), g, true, false)?) } else { None },
            ]),
            Op::RowSoftmax => {
                let (r, c) = k::row_view("row_softmax", y)?;
                let mut out = Vec::with_capacity(r * c);
                for i in 0..r {
                    let yr = &y.data()[i * c..(i + 1) * c];
                    let gr = &g.data()[i * c..(i + 1) * c];
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    out.extend(yr.iter().zip(gr).map(|(&a, &b)| a * (b - dot)));
                }
                Ok(vec![Some(Tensor::new(y.shape().to_vec(), out)?)])
            }
            Op::RowLogSoftmax => {
                let (r, c) = k::row_view("row_log_softmax", y)?;
                let mut out = Vec::with_capacity(r * c);
                for i in 0..r {
                    let yr = &y.data()[i * c..(i + 1) * c];
                    let gr = &g.data()[i * c..(i + 1) * c];
                    let s: T = gr.iter().copied().sum();
                    out.extend(yr.iter().zip(gr).map(|(&a, &b)| b - a.exp() * s));
                }
                Ok(vec![Some(Tensor::new(y.shape().to_vec(), out)?)])
            }
            Op::Sigmoid => elementwise(&|_, yv, gv| gv * yv * (T::one() - yv)),
            Op::Softplus => elementwise(&|xv, _, gv| gv * k::sigmoid(xv)),
            Op::Tanh => elementwise(&|_, yv, gv| gv * (T::one() - yv * yv)),
            Op::Relu => elementwise(&|xv, _, gv| if xv > T::zero() { gv } else { T::zero() }),
            Op::Exp => elementwise(&|_, yv, gv| gv * yv),
            Op::Log => elementwise(&|xv, _, gv| gv / xv),
            Op::Sum { axis } => Ok(vec![Some(k::expand_axis(g, x(0).shape(), *axis, T::one()))]),
            Op::Mean { axis } => {
                let n = match axis {
                    None => x(0).numel(),
                    Some(a) => x(0).shape()[*a],
                };
                let scale = T::one() / T::from_f64(n.max(1) as f64);
                Ok(vec![Some(k::expand_axis(g, x(0).shape(), *axis, scale))])
            }
            Op::Concat { axis } => {
                let mut start = 0;
                let mut out = Vec::with_capacity(inputs.len());
                for i in 0..inputs.len() {
                    let len = x(i).shape()[*axis];
                    out.push(want(i).then(|| k::narrow(g, *axis, start, len)));
                    start += len;
                }
                Ok(out)
            }
            Op::GatherRows { index } | Op::EmbeddingLookup { ids: index } => {
                let dest = Tensor::zeros(x(0).shape());
                Ok(vec![Some(k::scatter_add_rows(&dest, g, index)?)])
            }
            Op::ScatterAddRows { index } => Ok(vec![
                want(0).then(|| g.clone()),
                if want(1) { Some(k::gather_rows("scatter_add_rows", g, index)?) } else { None },
            ]),
            Op::L2NormalizeRows => {
                let (r, c) = k::row_view("l2_normalize_rows", y)?;
                let mut out = Vec::with_capacity(r * c);
                for i in 0..r {
                    let xr = &x(0).data()[i * c..(i + 1) * c];
                    let yr = &y.data()[i * c..(i + 1) * c];
                    let gr = &g.data()[i * c..(i + 1) * c];
                    let n = xr.iter().map(|&v| v * v).sum::<T>().sqrt();
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    out.extend(yr.iter().zip(gr).map(|(&a, &b)| (b - a * dot) / n));
                }
                Ok(vec![Some(Tensor::new(y.shape().to_vec(), out)?)])
            }
            Op::LayerNormRows { eps } => {
                let (r, c) = k::row_view("layer_norm_rows", y)?;
                let eps = T::from_f64(*eps);
                let gain = x(1).data();
                let mut gx = Vec::with_capacity(r * c);
                let mut ggain = vec![T::zero(); c];
                let mut gbias = vec![T::zero(); c];
                let cn = T::from_f64(c as f64);
                for i in 0..r {
                    let xr = &x(0).data()[i * c..(i + 1) * c];
                    let gr = &g.data()[i * c..(i + 1) * c];
                    let (mu, inv) = row_stats(xr, eps);
                    let xhat: Vec<T> = xr.iter().map(|&v| (v - mu) * inv).collect();
                    let gxhat: Vec<T> = gr.iter().zip(gain).map(|(&a, &b)| a * b).collect();
                    let m1 = gxhat.iter().copied().sum::<T>() / cn;
                    let m2 = gxhat.iter().zip(&xhat).map(|(&a, &b)| a * b).sum::<T>() / cn;
                    for j in 0..c {
                        gx.push(inv * (gxhat[j] - m1 - xhat[j] * m2));
                        ggain[j] = ggain[j] + gr[j] * xhat[j];
                        gbias[j] = gbias[j] + gr[j];
                    }
                }
                Ok(vec![
                    Some(Tensor::new(y.shape().to_vec(), gx)?),
                    Some(Tensor::new(vec![c], ggain)?),
                    Some(Tensor::new(vec![c], gbias)?),
                ])
            }
            Op::CrossEntropyRows { targets } => {
                let (r, c) = x(0).dims2()?;
                let sm = k::softmax_rows(x(0), false)?;
                let mut out = sm.into_data();
                for i in 0..r {
                    out[i * c + targets[i]] = out[i * c + targets[i]] - T::one();
                    let gi = g.data()[i];
                    out[i * c..(i + 1) * c].iter_mut().for_each(|v| *v = *v * gi);
                }
                Ok(vec![Some(Tensor::new(vec![r, c], out)?)])
            }
            Op::Transpose => Ok(vec![Some(g.transpose2()?)]),
            Op::NarrowCols { start, len } => {
                let (r, c) = x(0).dims2()?;
                let mut out = vec![T::zero(); r * c];
                for i in 0..r {
                    out[i * c + start..i * c + start + len].copy_from_slice(&g.data()[i * len..(i + 1) * len]);
                }
                Ok(vec![Some(Tensor::new(vec![r, c], out)?)])
            }
        }
    }

    // Convenience wrappers over `apply`.

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Op::Add, &[a, b])
    }
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Op::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Op::Mul, &[a, b])
    }
    /// Multiply by a non-differentiable scalar.
    pub fn scale(&mut self, a: Var, s: T) -> Result<Var, NumError> {
        let c = self.constant(Tensor::scalar(s));
        self.mul(a, c)
    }
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Op::MatMul, &[a, b])
    }
    pub fn row_softmax(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::RowSoftmax, &[a])
    }
    pub fn row_log_softmax(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::RowLogSoftmax, &[a])
    }
    pub fn sigmoid(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Sigmoid, &[a])
    }
    pub fn softplus(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Softplus, &[a])
    }
    pub fn tanh(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Tanh, &[a])
    }
    pub fn relu(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Relu, &[a])
    }
    pub fn exp(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Exp, &[a])
    }
    pub fn log(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Log, &[a])
    }
    pub fn sum(&mut self, a: Var, axis: Option<usize>) -> Result<Var, NumError> {
        self.apply(Op::Sum { axis }, &[a])
    }
    pub fn mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var, NumError> {
        self.apply(Op::Mean { axis }, &[a])
    }
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, NumError> {
        self.apply(Op::Concat { axis }, parts)
    }
    pub fn gather_rows(&mut self, a: Var, index: Vec<usize>) -> Result<Var, NumError> {
        self.apply(Op::GatherRows { index }, &[a])
    }
    pub fn scatter_add_rows(&mut self, dest: Var, src: Var, index: Vec<usize>) -> Result<Var, NumError> {
        self.apply(Op::ScatterAddRows { index }, &[dest, src])
    }
    pub fn l2_normalize_rows(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::L2NormalizeRows, &[a])
    }
    pub fn layer_norm_rows(&mut self, a: Var, gain: Var, bias: Var) -> Result<Var, NumError> {
        self.apply(Op::LayerNormRows { eps: LAYER_NORM_EPS }, &[a, gain, bias])
    }
    pub fn embedding_lookup(&mut self, table: Var, ids: Vec<usize>) -> Result<Var, NumError> {
        self.apply(Op::EmbeddingLookup { ids }, &[table])
    }
    pub fn masked_fill(&mut self, a: Var, mask: Var) -> Result<Var, NumError> {
        self.apply(Op::MaskedFill, &[a, mask])
    }
    pub fn cross_entropy_rows(&mut self, logits: Var, targets: Vec<usize>) -> Result<Var, NumError> {
        self.apply(Op::CrossEntropyRows { targets }, &[logits])
    }
    pub fn transpose(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Op::Transpose, &[a])
    }
    pub fn narrow_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NumError> {
        self.apply(Op::NarrowCols { start, len }, &[a])
    }
}

/// Epsilon inside the layer-norm variance.
pub const LAYER_NORM_EPS: f64 = 1e-5;

fn row_stats<T: Scalar>(row: &[T], eps: T) -> (T, T) {
    let n = T::from_f64(row.len() as f64);
    let mu = row.iter().copied().sum::<T>() / n;
    let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / n;
    (mu, T::one() / (var + eps).sqrt())
}
