use std::borrow::Cow;

use super::scalar::{gemm, MatRef};
use super::{AutodiffError, Scalar, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise function with a known derivative. Evaluated in f64 and cast
/// back to the graph's scalar type.
pub trait Activation: Send + Sync {
    fn name(&self) -> &'static str;
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// GELU, tanh approximation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Gelu;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044_715;

impl Activation for Gelu {
    fn name(&self) -> &'static str {
        "gelu"
    }

    fn value(&self, x: f64) -> f64 {
        let u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
        0.5 * x * (1.0 + u.tanh())
    }

    fn derivative(&self, x: f64) -> f64 {
        let u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
        let t = u.tanh();
        let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x * x);
        0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Linear { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    Hadamard(Var, Var),
    Scale(Var, T),
    Unary(Var, Box<dyn Activation>),
    Softmax { x: Var, axis: usize },
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Vec<T>, inv_std: Vec<T> },
    Transpose(Var),
    Reshape(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { x: Var, axis: usize, start: usize },
    Sum(Var),
    Mean(Var),
    CrossEntropy { logits: Var, labels: Vec<usize>, probs: Vec<T> },
}

struct Node<'a, T: Scalar> {
    value: Cow<'a, Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
    /// True when a gradient must flow through this node.
    tracked: bool,
}

/// Single-use computation graph. Nodes are appended in evaluation order, so
/// the node list is always a topological order and cannot contain cycles.
/// Leaves may borrow their value (parameters are not copied).
pub struct Graph<'a, T: Scalar> {
    nodes: Vec<Node<'a, T>>,
}

impl<T: Scalar> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Split `shape` around `axis` into (outer, axis length, inner) extents.
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl<'a, T: Scalar> Graph<'a, T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, parents: &[Var]) -> Var {
        let tracked = parents.iter().any(|p| self.nodes[p.0].tracked);
        self.nodes.push(Node { value: Cow::Owned(value), op, requires_grad: false, tracked });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf that borrows its value.
    pub fn param(&mut self, t: &'a Tensor<T>) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(t), op: Op::Leaf, requires_grad: true, tracked: true });
        Var(self.nodes.len() - 1)
    }

    /// Owned leaf; gradients are reported for it when `requires_grad` is set.
    pub fn input(&mut self, t: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(t),
            op: Op::Leaf,
            requires_grad,
            tracked: requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Owned leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.input(t, false)
    }

    fn dims2(&self, v: Var, op: &'static str) -> Result<(usize, usize), AutodiffError> {
        self.value(v).dims2().ok_or_else(|| AutodiffError::Rank {
            op,
            expected: 2,
            shape: self.shape(v).to_vec(),
        })
    }

    fn shape_err(&self, op: &'static str, a: Var, b: Var) -> AutodiffError {
        AutodiffError::Shape { op, lhs: self.shape(a).to_vec(), rhs: self.shape(b).to_vec() }
    }

    /// `[m×k] · [k×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (m, k) = self.dims2(a, "matmul")?;
        let (k2, n) = self.dims2(b, "matmul")?;
        if k != k2 {
            return Err(self.shape_err("matmul", a, b));
        }
        let mut out = vec![T::zero(); m * n];
        gemm(
            MatRef::new(self.value(a).data(), m, k),
            MatRef::new(self.value(b).data(), k, n),
            &mut out,
            false,
        );
        let t = Tensor::new(&[m, n], out)?;
        Ok(self.push(t, Op::MatMul(a, b), &[a, b]))
    }

    /// `x · wᵀ + b` with `x: [m×in]`, `w: [out×in]`, `b: [out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var, AutodiffError> {
        let (m, k) = self.dims2(x, "linear")?;
        let (n, k2) = self.dims2(w, "linear")?;
        if k != k2 {
            return Err(self.shape_err("linear", x, w));
        }
        let mut out = vec![T::zero(); m * n];
        if let Some(b) = b {
            let bias = self.value(b);
            if bias.numel() != n || bias.rank() != 1 {
                return Err(self.shape_err("linear", w, b));
            }
            for row in out.chunks_exact_mut(n) {
                row.copy_from_slice(bias.data());
            }
        }
        gemm(
            MatRef::new(self.value(x).data(), m, k),
            MatRef::t(self.value(w).data(), n, k),
            &mut out,
            b.is_some(),
        );
        let t = Tensor::new(&[m, n], out)?;
        let parents: Vec<Var> = [Some(x), Some(w), b].into_iter().flatten().collect();
        Ok(self.push(t, Op::Linear { x, w, b }, &parents))
    }

    /// Elementwise sum. `b` may have the shape of a trailing suffix of `a`'s
    /// shape, in which case it is repeated over `a`'s leading dimensions.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return Err(self.shape_err("add", a, b));
        }
        let bd = self.value(b).data();
        let mut out = self.value(a).data().to_vec();
        for chunk in out.chunks_exact_mut(bd.len()) {
            chunk.iter_mut().zip(bd).for_each(|(o, &v)| *o += v);
        }
        let t = Tensor::new(self.shape(a), out)?;
        Ok(self.push(t, Op::Add(a, b), &[a, b]))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(self.shape_err("hadamard", a, b));
        }
        let out = self.value(a).data().iter().zip(self.value(b).data()).map(|(&x, &y)| x * y).collect();
        let t = Tensor::new(self.shape(a), out)?;
        Ok(self.push(t, Op::Hadamard(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var, AutodiffError> {
        let out = self.value(a).data().iter().map(|&x| x * c).collect();
        let t = Tensor::new(self.shape(a), out)?;
        Ok(self.push(t, Op::Scale(a, c), &[a]))
    }

    pub fn unary(&mut self, a: Var, f: Box<dyn Activation>) -> Result<Var, AutodiffError> {
        let out = self
            .value(a)
            .data()
            .iter()
            .map(|&x| T::from_f64_lossy(f.value(x.to_f64_lossy())))
            .collect();
        let t = Tensor::new(self.shape(a), out)?;
        Ok(self.push(t, Op::Unary(a, f), &[a]))
    }

    pub fn gelu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, Box::new(Gelu))
    }

    /// Softmax along `axis`, stabilized by subtracting the per-slice maximum.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(AutodiffError::Axis { op: "softmax", axis, shape });
        }
        let (outer, len, inner) = axis_split(&shape, axis);
        let x = self.value(a).data();
        let mut out = vec![T::zero(); x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| (o * len + j) * inner + i;
                let max = (0..len).map(|j| x[idx(j)]).fold(T::neg_infinity(), T::max);
                let mut total = T::zero();
                for j in 0..len {
                    let e = (x[idx(j)] - max).exp();
                    out[idx(j)] = e;
                    total += e;
                }
                for j in 0..len {
                    out[idx(j)] /= total;
                }
            }
        }
        let t = Tensor::new(&shape, out)?;
        Ok(self.push(t, Op::Softmax { x: a, axis }, &[a]))
    }

    /// Normalize over the last axis, then apply `gain` and `bias`
    /// (both shaped like the last axis).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        let n = *shape.last().expect("non-empty shape");
        if self.shape(gain) != [n] {
            return Err(self.shape_err("layer_norm", x, gain));
        }
        if self.shape(bias) != [n] {
            return Err(self.shape_err("layer_norm", x, bias));
        }
        let xs = self.value(x).data();
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let nf = T::from_usize(n).expect("usize fits");
        let eps = T::from_f64_lossy(eps);
        let rows = xs.len() / n;
        let mut xhat = vec![T::zero(); xs.len()];
        let mut inv_std = vec![T::zero(); rows];
        let mut out = vec![T::zero(); xs.len()];
        for r in 0..rows {
            let row = &xs[r * n..(r + 1) * n];
            let mean = row.iter().fold(T::zero(), |acc, &v| acc + v) / nf;
            let var = row.iter().fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean)) / nf;
            let is = T::one() / (var + eps).sqrt();
            inv_std[r] = is;
            for c in 0..n {
                let h = (row[c] - mean) * is;
                xhat[r * n + c] = h;
                out[r * n + c] = h * g[c] + b[c];
            }
        }
        let t = Tensor::new(&shape, out)?;
        Ok(self.push(t, Op::LayerNorm { x, gain, bias, xhat, inv_std }, &[x, gain, bias]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (r, c) = self.dims2(a, "transpose")?;
        let x = self.value(a).data();
        let mut out = vec![T::zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = x[i * c + j];
            }
        }
        let t = Tensor::new(&[c, r], out)?;
        Ok(self.push(t, Op::Transpose(a), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, AutodiffError> {
        let t = self.value(a).clone().reshaped(shape)?;
        Ok(self.push(t, Op::Reshape(a), &[a]))
    }

    /// Concatenate along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, AutodiffError> {
        let first = *parts.first().ok_or(AutodiffError::Empty { op: "concat" })?;
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(AutodiffError::Axis { op: "concat", axis, shape: base });
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(self.shape_err("concat", first, p));
            }
            total += s[axis];
        }
        let (outer, _, inner) = axis_split(&base, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let len = self.shape(p)[axis];
                let d = self.value(p).data();
                out.extend_from_slice(&d[o * len * inner..(o + 1) * len * inner]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let t = Tensor::new(&shape, out)?;
        Ok(self.push(t, Op::Concat { parts: parts.to_vec(), axis }, parts))
    }

    /// Elements `start..start+len` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(AutodiffError::Axis { op: "slice", axis, shape });
        }
        if len == 0 || start + len > shape[axis] {
            return Err(AutodiffError::Range { op: "slice", start, len, shape });
        }
        let (outer, full, inner) = axis_split(&shape, axis);
        let x = self.value(a).data();
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let from = (o * full + start) * inner;
            out.extend_from_slice(&x[from..from + len * inner]);
        }
        let mut new_shape = shape;
        new_shape[axis] = len;
        let t = Tensor::new(&new_shape, out)?;
        Ok(self.push(t, Op::Slice { x: a, axis, start }, &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &v| acc + v);
        Ok(self.push(Tensor::scalar(s), Op::Sum(a), &[a]))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let x = self.value(a).data();
        let n = T::from_usize(x.len()).expect("usize fits");
        let s = x.iter().fold(T::zero(), |acc, &v| acc + v) / n;
        Ok(self.push(Tensor::scalar(s), Op::Mean(a), &[a]))
    }

    /// Mean over the batch of `-log softmax(logits)[label]`, computed with a
    /// log-sum-exp shifted by the row maximum.
    pub fn cross_entropy_logits(&mut self, logits: Var, labels: &[usize]) -> Result<Var, AutodiffError> {
        let (batch, classes) = self.dims2(logits, "cross_entropy")?;
        if labels.len() != batch {
            return Err(AutodiffError::Shape {
                op: "cross_entropy",
                lhs: self.shape(logits).to_vec(),
                rhs: vec![labels.len()],
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(AutodiffError::Label { label, classes });
        }
        let x = self.value(logits).data();
        let mut probs = vec![T::zero(); x.len()];
        let mut loss = T::zero();
        for (r, &label) in labels.iter().enumerate() {
            let row = &x[r * classes..(r + 1) * classes];
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for (c, &v) in row.iter().enumerate() {
                let e = (v - max).exp();
                probs[r * classes + c] = e;
                total += e;
            }
            probs[r * classes..(r + 1) * classes].iter_mut().for_each(|p| *p /= total);
            loss += total.ln() + max - row[label];
        }
        loss /= T::from_usize(batch).expect("usize fits");
        let labels = labels.to_vec();
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { logits, labels, probs }, &[logits]))
    }

    /// Reverse-mode sweep from the scalar `loss`. Consumes the graph and
    /// returns gradients of every leaf created with `requires_grad`.
    /// Contributions from multiple uses of a node are summed.
    pub fn backward(self, loss: Var) -> Result<Gradients<T>, AutodiffError> {
        let loss_shape = self.shape(loss);
        if self.value(loss).numel() != 1 {
            return Err(AutodiffError::NonScalarLoss { shape: loss_shape.to_vec() });
        }
        let nodes = &self.nodes;
        let mut grads: Vec<Option<Vec<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            if !nodes[i].tracked {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let node = &nodes[i];
            if matches!(node.op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            backprop_node(nodes, i, &g, &mut grads);
        }

        let leaves = nodes
            .iter()
            .zip(grads)
            .map(|(node, g)| {
                if !node.requires_grad {
                    return None;
                }
                let data = g.unwrap_or_else(|| vec![T::zero(); node.value.numel()]);
                Some(Tensor::new(node.value.shape(), data).expect("gradient matches value shape"))
            })
            .collect();
        Ok(Gradients { grads: leaves })
    }
}

/// Gradient buffer for `v`, zero-initialized on first use.
fn slot<'g, T: Scalar>(nodes: &[Node<'_, T>], grads: &'g mut [Option<Vec<T>>], v: Var) -> Option<&'g mut Vec<T>> {
    if !nodes[v.0].tracked {
        return None;
    }
    let len = nodes[v.0].value.numel();
    Some(grads[v.0].get_or_insert_with(|| vec![T::zero(); len]))
}

fn backprop_node<T: Scalar>(nodes: &[Node<'_, T>], i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
    let val = |v: Var| -> &Tensor<T> { &nodes[v.0].value };
    match &nodes[i].op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = val(*a).dims2().expect("rank 2");
            let n = val(*b).shape()[1];
            if let Some(da) = slot(nodes, grads, *a) {
                gemm(MatRef::new(g, m, n), MatRef::t(val(*b).data(), k, n), da, true);
            }
            if let Some(db) = slot(nodes, grads, *b) {
                gemm(MatRef::t(val(*a).data(), m, k), MatRef::new(g, m, n), db, true);
            }
        }
        Op::Linear { x, w, b } => {
            let (m, k) = val(*x).dims2().expect("rank 2");
            let n = val(*w).shape()[0];
            if let Some(dx) = slot(nodes, grads, *x) {
                gemm(MatRef::new(g, m, n), MatRef::new(val(*w).data(), n, k), dx, true);
            }
            if let Some(dw) = slot(nodes, grads, *w) {
                gemm(MatRef::t(g, m, n), MatRef::new(val(*x).data(), m, k), dw, true);
            }
            if let Some(b) = b {
                if let Some(db) = slot(nodes, grads, *b) {
                    for row in g.chunks_exact(n) {
                        db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
                    }
                }
            }
        }
        Op::Add(a, b) => {
            if let Some(da) = slot(nodes, grads, *a) {
                da.iter_mut().zip(g).for_each(|(d, &v)| *d += v);
            }
            if let Some(db) = slot(nodes, grads, *b) {
                let n = db.len();
                for chunk in g.chunks_exact(n) {
                    db.iter_mut().zip(chunk).for_each(|(d, &v)| *d += v);
                }
            }
        }
        Op::Hadamard(a, b) => {
            if let Some(da) = slot(nodes, grads, *a) {
                for ((d, &gv), &bv) in da.iter_mut().zip(g).zip(val(*b).data()) {
                    *d += gv * bv;
                }
            }
            if let Some(db) = slot(nodes, grads, *b) {
                for ((d, &gv), &av) in db.iter_mut().zip(g).zip(val(*a).data()) {
                    *d += gv * av;
                }
            }
        }
        Op::Scale(a, c) => {
            if let Some(da) = slot(nodes, grads, *a) {
                da.iter_mut().zip(g).for_each(|(d, &v)| *d += v * *c);
            }
        }
        Op::Unary(a, f) => {
            if let Some(da) = slot(nodes, grads, *a) {
                for ((d, &gv), &x) in da.iter_mut().zip(g).zip(val(*a).data()) {
                    *d += gv * T::from_f64_lossy(f.derivative(x.to_f64_lossy()));
                }
            }
        }
        Op::Softmax { x, axis } => {
            let y = nodes[i].value.data();
            let (outer, len, inner) = axis_split(nodes[i].value.shape(), *axis);
            if let Some(dx) = slot(nodes, grads, *x) {
                for o in 0..outer {
                    for inn in 0..inner {
                        let idx = |j: usize| (o * len + j) * inner + inn;
                        let dot = (0..len).fold(T::zero(), |acc, j| acc + g[idx(j)] * y[idx(j)]);
                        for j in 0..len {
                            dx[idx(j)] += y[idx(j)] * (g[idx(j)] - dot);
                        }
                    }
                }
            }
        }
        Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
            let n = val(*gain).numel();
            let gv = val(*gain).data();
            let nf = T::from_usize(n).expect("usize fits");
            if let Some(dg) = slot(nodes, grads, *gain) {
                for (grow, hrow) in g.chunks_exact(n).zip(xhat.chunks_exact(n)) {
                    for c in 0..n {
                        dg[c] += grow[c] * hrow[c];
                    }
                }
            }
            if let Some(db) = slot(nodes, grads, *bias) {
                for grow in g.chunks_exact(n) {
                    db.iter_mut().zip(grow).for_each(|(d, &v)| *d += v);
                }
            }
            if let Some(dx) = slot(nodes, grads, *x) {
                for (r, (grow, hrow)) in g.chunks_exact(n).zip(xhat.chunks_exact(n)).enumerate() {
                    let mut sum_d = T::zero();
                    let mut sum_dh = T::zero();
                    for c in 0..n {
                        let dh = grow[c] * gv[c];
                        sum_d += dh;
                        sum_dh += dh * hrow[c];
                    }
                    let scale = inv_std[r] / nf;
                    for c in 0..n {
                        let dh = grow[c] * gv[c];
                        dx[r * n + c] += scale * (nf * dh - sum_d - hrow[c] * sum_dh);
                    }
                }
            }
        }
        Op::Transpose(a) => {
            let (r, c) = val(*a).dims2().expect("rank 2");
            if let Some(da) = slot(nodes, grads, *a) {
                for p in 0..r {
                    for q in 0..c {
                        da[p * c + q] += g[q * r + p];
                    }
                }
            }
        }
        Op::Reshape(a) => {
            if let Some(da) = slot(nodes, grads, *a) {
                da.iter_mut().zip(g).for_each(|(d, &v)| *d += v);
            }
        }
        Op::Concat { parts, axis } => {
            let shape = nodes[i].value.shape();
            let (outer, total, inner) = axis_split(shape, *axis);
            let mut offset = 0;
            for p in parts {
                let len = val(*p).shape()[*axis];
                if let Some(dp) = slot(nodes, grads, *p) {
                    for o in 0..outer {
                        let src = (o * total + offset) * inner;
                        let dst = o * len * inner;
                        for (d, &v) in dp[dst..dst + len * inner].iter_mut().zip(&g[src..src + len * inner]) {
                            *d += v;
                        }
                    }
                }
                offset += len;
            }
        }
        Op::Slice { x, axis, start } => {
            let (outer, full, inner) = axis_split(val(*x).shape(), *axis);
            let len = nodes[i].value.shape()[*axis];
            if let Some(dx) = slot(nodes, grads, *x) {
                for o in 0..outer {
                    let dst = (o * full + start) * inner;
                    let src = o * len * inner;
                    for (d, &v) in dx[dst..dst + len * inner].iter_mut().zip(&g[src..src + len * inner]) {
                        *d += v;
                    }
                }
            }
        }
        Op::Sum(a) => {
            if let Some(da) = slot(nodes, grads, *a) {
                da.iter_mut().for_each(|d| *d += g[0]);
            }
        }
        Op::Mean(a) => {
            if let Some(da) = slot(nodes, grads, *a) {
                let share = g[0] / T::from_usize(da.len()).expect("usize fits");
                da.iter_mut().for_each(|d| *d += share);
            }
        }
        Op::CrossEntropy { logits, labels, probs } => {
            let classes = val(*logits).shape()[1];
            let batch = T::from_usize(labels.len()).expect("usize fits");
            if let Some(dl) = slot(nodes, grads, *logits) {
                let share = g[0] / batch;
                for (r, &label) in labels.iter().enumerate() {
                    for c in 0..classes {
                        let onehot = if c == label { T::one() } else { T::zero() };
                        dl[r * classes + c] += share * (probs[r * classes + c] - onehot);
                    }
                }
            }
        }
    }
}

/// Leaf gradients produced by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of a `requires_grad` leaf; `None` for any other node.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
