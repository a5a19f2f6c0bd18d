//! Reverse-mode automatic differentiation on dense matrices.
//!
//! A [`Tape`] records primitive operations during the forward pass
//! (define-by-run; a fresh tape is built per mini-batch) and replays them in
//! exact reverse order to accumulate adjoints. Values are row-major
//! [`Array2`] matrices; scalars are `1x1`. Every forward op validates shapes
//! and rejects non-finite results, so NaN/Inf surfaces as an error naming the
//! offending op instead of propagating silently.

use crate::scalar::Scalar;
use ndarray::{Array2, Axis, Zip};
use std::fmt;
use std::rc::Rc;
use thiserror::Error;

pub mod adam;
pub mod gradcheck;

pub use adam::{AdamConfig, AdamState};

/// Errors raised by tape construction and the backward pass.
#[derive(Debug, Error)]
pub enum NumError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: non-finite value in result")]
    NonFinite { op: &'static str },
    #[error("backward root must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("{op}: {detail}")]
    Invalid { op: &'static str, detail: String },
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// A differentiable operation supplied from outside the primitive set.
///
/// Used for ops whose gradient rule lives naturally elsewhere (spline basis
/// evaluation, density clamping) without growing the core enum.
pub trait CustomOp<F: Scalar>: fmt::Debug {
    fn name(&self) -> &'static str;
    fn forward(&self, inputs: &[&Array2<F>]) -> Result<Array2<F>, NumError>;
    /// One adjoint contribution per input, in input order.
    fn backward(
        &self,
        inputs: &[&Array2<F>],
        output: &Array2<F>,
        adjoint: &Array2<F>,
    ) -> Vec<Array2<F>>;
}

enum Op<F: Scalar> {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    Transpose(usize),
    Square(usize),
    Elu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Exp(usize),
    Ln(usize),
    Mean(usize),
    Sum(usize),
    Softmax { input: usize, axis: usize },
    Concat { inputs: Vec<usize>, axis: usize },
    Slice { input: usize, axis: usize, start: usize, end: usize },
    Broadcast(usize),
    Custom { inputs: Vec<usize>, rule: Rc<dyn CustomOp<F>> },
}

struct Node<F: Scalar> {
    value: Array2<F>,
    op: Op<F>,
}

/// Record of a forward computation, in topological order by construction.
pub struct Tape<F: Scalar> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

fn all_finite<F: Scalar>(a: &Array2<F>) -> bool {
    a.iter().all(|v| v.is_finite())
}

fn accum<F: Scalar>(slot: &mut Option<Array2<F>>, delta: Array2<F>) {
    match slot {
        Some(acc) => *acc += &delta,
        None => *slot = Some(delta),
    }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Current value of a node.
    pub fn value(&self, v: Var) -> &Array2<F> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    /// Scalar payload of a 1x1 node.
    pub fn scalar_value(&self, v: Var) -> F {
        debug_assert_eq!(self.shape(v), (1, 1));
        self.nodes[v.0].value[[0, 0]]
    }

    /// Register an input (data or parameter) on the tape.
    pub fn leaf(&mut self, value: Array2<F>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// 1x1 constant leaf.
    pub fn scalar(&mut self, c: F) -> Var {
        self.leaf(Array2::from_elem((1, 1), c))
    }

    fn push(&mut self, op: &'static str, value: Array2<F>, kind: Op<F>) -> Result<Var, NumError> {
        if !all_finite(&value) {
            return Err(NumError::NonFinite { op });
        }
        self.nodes.push(Node { value, op: kind });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), NumError> {
        if self.shape(a) != self.shape(b) {
            return Err(NumError::ShapeMismatch {
                op,
                detail: format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.same_shape("add", a, b)?;
        let v = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push("add", v, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.same_shape("subtract", a, b)?;
        let v = &self.nodes[a.0].value - &self.nodes[b.0].value;
        self.push("subtract", v, Op::Sub(a.0, b.0))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.same_shape("multiply", a, b)?;
        let v = &self.nodes[a.0].value * &self.nodes[b.0].value;
        self.push("multiply", v, Op::Mul(a.0, b.0))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(NumError::ShapeMismatch {
                op: "matmul",
                detail: format!("{ar}x{ac} . {br}x{bc}"),
            });
        }
        let v = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push("matmul", v, Op::MatMul(a.0, b.0))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.t().to_owned();
        self.nodes.push(Node {
            value: v,
            op: Op::Transpose(a.0),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn square(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(|x| x * x);
        self.push("square", v, Op::Square(a.0))
    }

    /// ELU activation with alpha = 1.
    pub fn elu(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(elu_scalar);
        self.push("elu", v, Op::Elu(a.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(sigmoid_scalar);
        self.push("sigmoid", v, Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(|x| x.tanh());
        self.push("tanh", v, Op::Tanh(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(|x| x.exp());
        self.push("exp", v, Op::Exp(a.0))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var, NumError> {
        let v = self.nodes[a.0].value.mapv(|x| x.ln());
        self.push("log", v, Op::Ln(a.0))
    }

    /// Mean over all entries, producing a 1x1 scalar.
    pub fn mean(&mut self, a: Var) -> Result<Var, NumError> {
        let n = self.nodes[a.0].value.len();
        if n == 0 {
            return Err(NumError::Invalid {
                op: "mean",
                detail: "empty input".into(),
            });
        }
        let m = self.nodes[a.0].value.sum() / F::of(n as f64);
        self.push("mean", Array2::from_elem((1, 1), m), Op::Mean(a.0))
    }

    /// Sum over all entries, producing a 1x1 scalar.
    pub fn sum(&mut self, a: Var) -> Result<Var, NumError> {
        let s = self.nodes[a.0].value.sum();
        self.push("sum", Array2::from_elem((1, 1), s), Op::Sum(a.0))
    }

    /// Softmax normalizing over `axis`; with `axis = 1` every row sums to one.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, NumError> {
        if axis > 1 {
            return Err(NumError::Invalid {
                op: "softmax",
                detail: format!("axis {axis} out of range"),
            });
        }
        let v = softmax_array(&self.nodes[a.0].value, axis);
        self.push("softmax", v, Op::Softmax { input: a.0, axis })
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, NumError> {
        if parts.is_empty() {
            return Err(NumError::Invalid {
                op: "concatenate",
                detail: "no inputs".into(),
            });
        }
        if axis > 1 {
            return Err(NumError::Invalid {
                op: "concatenate",
                detail: format!("axis {axis} out of range"),
            });
        }
        let views: Vec<_> = parts.iter().map(|p| self.nodes[p.0].value.view()).collect();
        let v = ndarray::concatenate(Axis(axis), &views).map_err(|e| NumError::ShapeMismatch {
            op: "concatenate",
            detail: e.to_string(),
        })?;
        self.push(
            "concatenate",
            v,
            Op::Concat {
                inputs: parts.iter().map(|p| p.0).collect(),
                axis,
            },
        )
    }

    /// Contiguous sub-range `[start, end)` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, end: usize) -> Result<Var, NumError> {
        let dim = self.shape(a);
        let extent = if axis == 0 { dim.0 } else { dim.1 };
        if axis > 1 || start >= end || end > extent {
            return Err(NumError::Invalid {
                op: "slice",
                detail: format!("range {start}..{end} on axis {axis} of {dim:?}"),
            });
        }
        let v = self
            .nodes[a.0]
            .value
            .slice_axis(Axis(axis), ndarray::Slice::from(start..end))
            .to_owned();
        self.push(
            "slice",
            v,
            Op::Slice {
                input: a.0,
                axis,
                start,
                end,
            },
        )
    }

    /// Broadcast to `(rows, cols)`; each input axis must match or have extent 1.
    pub fn broadcast(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, NumError> {
        let (r0, c0) = self.shape(a);
        if (r0 != rows && r0 != 1) || (c0 != cols && c0 != 1) {
            return Err(NumError::ShapeMismatch {
                op: "broadcast",
                detail: format!("{r0}x{c0} -> {rows}x{cols}"),
            });
        }
        let v = self.nodes[a.0]
            .value
            .broadcast((rows, cols))
            .expect("validated broadcast")
            .to_owned();
        self.push("broadcast", v, Op::Broadcast(a.0))
    }

    /// Apply a [`CustomOp`] to the given inputs.
    pub fn custom(&mut self, rule: Rc<dyn CustomOp<F>>, inputs: &[Var]) -> Result<Var, NumError> {
        let vals: Vec<&Array2<F>> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
        let out = rule.forward(&vals)?;
        let name = rule.name();
        self.push(
            name,
            out,
            Op::Custom {
                inputs: inputs.iter().map(|v| v.0).collect(),
                rule,
            },
        )
    }

    // -- composed conveniences (no new gradient rules) --

    /// Multiply every entry by a constant.
    pub fn scale(&mut self, a: Var, c: F) -> Result<Var, NumError> {
        let (r, co) = self.shape(a);
        let k = self.scalar(c);
        let k = self.broadcast(k, r, co)?;
        self.mul(a, k)
    }

    /// Add a constant to every entry.
    pub fn offset(&mut self, a: Var, c: F) -> Result<Var, NumError> {
        let (r, co) = self.shape(a);
        let k = self.scalar(c);
        let k = self.broadcast(k, r, co)?;
        self.add(a, k)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, NumError> {
        self.scale(a, F::of(-1.0))
    }

    /// Elementwise reciprocal of a strictly positive tensor, via exp(-ln x).
    pub fn recip_pos(&mut self, a: Var) -> Result<Var, NumError> {
        let l = self.ln(a)?;
        let n = self.neg(l)?;
        self.exp(n)
    }

    /// Reverse pass from a scalar root. Returns adjoints for every node that
    /// influenced the root; leaves not on any path keep a zero gradient.
    pub fn backward(&self, root: Var) -> Result<Gradients<F>, NumError> {
        let (rr, rc) = self.shape(root);
        if (rr, rc) != (1, 1) {
            return Err(NumError::NonScalarRoot { rows: rr, cols: rc });
        }
        let mut adj: Vec<Option<Array2<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[root.0] = Some(Array2::ones((1, 1)));

        for id in (0..=root.0).rev() {
            if matches!(self.nodes[id].op, Op::Leaf) {
                continue;
            }
            let Some(g) = adj[id].take() else { continue };
            self.propagate(id, &g, &mut adj);
        }
        Ok(Gradients { adj })
    }

    fn propagate(&self, id: usize, g: &Array2<F>, adj: &mut [Option<Array2<F>>]) {
        let val = |i: usize| &self.nodes[i].value;
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                accum(&mut adj[*a], g.clone());
                accum(&mut adj[*b], g.clone());
            }
            Op::Sub(a, b) => {
                accum(&mut adj[*a], g.clone());
                accum(&mut adj[*b], g.mapv(|x| -x));
            }
            Op::Mul(a, b) => {
                accum(&mut adj[*a], g * val(*b));
                accum(&mut adj[*b], g * val(*a));
            }
            Op::MatMul(a, b) => {
                accum(&mut adj[*a], g.dot(&val(*b).t()));
                accum(&mut adj[*b], val(*a).t().dot(g));
            }
            Op::Transpose(a) => {
                accum(&mut adj[*a], g.t().to_owned());
            }
            Op::Square(a) => {
                accum(&mut adj[*a], (g * val(*a)).mapv(|x| x + x));
            }
            Op::Elu(a) => {
                let d = Zip::from(g).and(val(*a)).map_collect(|&gi, &x| {
                    if x > F::zero() {
                        gi
                    } else {
                        gi * x.exp()
                    }
                });
                accum(&mut adj[*a], d);
            }
            Op::Sigmoid(a) => {
                let y = &self.nodes[id].value;
                let d = Zip::from(g)
                    .and(y)
                    .map_collect(|&gi, &yi| gi * yi * (F::one() - yi));
                accum(&mut adj[*a], d);
            }
            Op::Tanh(a) => {
                let y = &self.nodes[id].value;
                let d = Zip::from(g)
                    .and(y)
                    .map_collect(|&gi, &yi| gi * (F::one() - yi * yi));
                accum(&mut adj[*a], d);
            }
            Op::Exp(a) => {
                accum(&mut adj[*a], g * &self.nodes[id].value);
            }
            Op::Ln(a) => {
                accum(&mut adj[*a], g / val(*a));
            }
            Op::Mean(a) => {
                let v = val(*a);
                let c = g[[0, 0]] / F::of(v.len() as f64);
                accum(&mut adj[*a], Array2::from_elem(v.dim(), c));
            }
            Op::Sum(a) => {
                let v = val(*a);
                accum(&mut adj[*a], Array2::from_elem(v.dim(), g[[0, 0]]));
            }
            Op::Softmax { input, axis } => {
                let y = &self.nodes[id].value;
                let gy = g * y;
                let s = gy.sum_axis(Axis(*axis)).insert_axis(Axis(*axis));
                let s = s.broadcast(y.dim()).expect("softmax backward broadcast");
                let d = y * &(g - &s);
                accum(&mut adj[*input], d);
            }
            Op::Concat { inputs, axis } => {
                let mut offset = 0;
                for &i in inputs {
                    let extent = if *axis == 0 {
                        val(i).nrows()
                    } else {
                        val(i).ncols()
                    };
                    let part = g
                        .slice_axis(Axis(*axis), ndarray::Slice::from(offset..offset + extent))
                        .to_owned();
                    accum(&mut adj[i], part);
                    offset += extent;
                }
            }
            Op::Slice {
                input,
                axis,
                start,
                end,
            } => {
                let mut d = Array2::zeros(val(*input).dim());
                d.slice_axis_mut(Axis(*axis), ndarray::Slice::from(*start..*end))
                    .assign(g);
                accum(&mut adj[*input], d);
            }
            Op::Broadcast(a) => {
                let (r0, c0) = val(*a).dim();
                let mut d = g.clone();
                if r0 == 1 && d.nrows() > 1 {
                    d = d.sum_axis(Axis(0)).insert_axis(Axis(0));
                }
                if c0 == 1 && d.ncols() > 1 {
                    d = d.sum_axis(Axis(1)).insert_axis(Axis(1));
                }
                accum(&mut adj[*a], d);
            }
            Op::Custom { inputs, rule } => {
                let vals: Vec<&Array2<F>> = inputs.iter().map(|&i| &self.nodes[i].value).collect();
                let contributions = rule.backward(&vals, &self.nodes[id].value, g);
                debug_assert_eq!(contributions.len(), inputs.len());
                for (&i, d) in inputs.iter().zip(contributions) {
                    accum(&mut adj[i], d);
                }
            }
        }
    }
}

/// Adjoints produced by [`Tape::backward`].
pub struct Gradients<F: Scalar> {
    adj: Vec<Option<Array2<F>>>,
}

impl<F: Scalar> Gradients<F> {
    /// Adjoint of a node, if it received any contribution.
    pub fn get(&self, v: Var) -> Option<&Array2<F>> {
        self.adj.get(v.id()).and_then(|o| o.as_ref())
    }

    /// Adjoint of a node, densified to zeros when it had no influence.
    pub fn dense(&self, v: Var, shape: (usize, usize)) -> Array2<F> {
        match self.get(v) {
            Some(a) => a.clone(),
            None => Array2::zeros(shape),
        }
    }
}

pub(crate) fn elu_scalar<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        x.exp() - F::one()
    }
}

pub(crate) fn sigmoid_scalar<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

pub(crate) fn softmax_array<F: Scalar>(x: &Array2<F>, axis: usize) -> Array2<F> {
    let lane = Axis(axis);
    let m = x
        .fold_axis(lane, F::neg_infinity(), |acc, &v| acc.max(v))
        .insert_axis(lane);
    let m = m.broadcast(x.dim()).expect("softmax max broadcast");
    let e = (x - &m).mapv(|v| v.exp());
    let s = e.sum_axis(lane).insert_axis(lane);
    let s = s.broadcast(x.dim()).expect("softmax sum broadcast");
    &e / &s
}
