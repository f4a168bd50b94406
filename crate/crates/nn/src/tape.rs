//! Reverse-mode trace. Values are computed eagerly as operations are
//! recorded; `backward` walks the record in reverse.

use crate::brnn::{self, BrnnParams};
use crate::error::{shape_err, Error, Result};
use crate::param::{Gradients, ParamId, ParamStore};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Embed { table: ParamId, ids: Vec<usize> },
    Brnn { params: BrnnParams, input: Var, hcat: Vec<f64> },
    MaxPool { input: Var, argmax: Vec<usize> },
    MatVec { w: ParamId, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    Sum(Var),
    Softmax(Var),
    Index(Var, usize),
    Scale(Var, f64),
    OneMinus(Var),
    WeightedSum { weights: Var, items: Vec<Var> },
    AddAll(Vec<Var>),
    CrossEntropy2 { logits: Var, label: usize },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// A computation trace over a read-only parameter store.
pub struct Tape<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max subtraction.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Attention weights over a nonempty list of finite scores.
pub fn attention_weights(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptySequence("attention over no scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite attention score".into()));
    }
    Ok(softmax(scores))
}

impl<'a> Tape<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'a ParamStore {
        self.store
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn vec_of(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    pub fn scalar(&mut self, x: f64) -> Var {
        self.constant(Tensor::scalar(x))
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.store.tensor(id).clone();
        self.push(value, Op::Param(id))
    }

    /// Rows of `table` for each id; `len × d`.
    pub fn embed(&mut self, table: ParamId, ids: &[usize]) -> Result<Var> {
        let t = self.store.tensor(table);
        if t.shape().len() != 2 {
            return shape_err("embedding table must be a matrix");
        }
        let (rows, d) = (t.shape()[0], t.shape()[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= rows {
                return Err(Error::Vocabulary { id, size: rows });
            }
            data.extend_from_slice(t.row(id));
        }
        let value = Tensor::from_parts(vec![ids.len(), d], data);
        Ok(self.push(
            value,
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    pub fn brnn(&mut self, params: BrnnParams, input: Var) -> Result<Var> {
        let x = &self.nodes[input.0].value;
        if x.shape().len() != 2 {
            return shape_err("BRNN input must be a len × d matrix");
        }
        let (len, k) = (x.shape()[0], x.shape()[1]);
        if len == 0 {
            return Err(Error::EmptySequence("BRNN over an empty sequence"));
        }
        let dims = params.dims(self.store, k)?;
        let s = self.store;
        let (out, hcat) = brnn::forward(
            x.data(),
            len,
            dims,
            s.tensor(params.wf).data(),
            s.tensor(params.wb).data(),
            s.tensor(params.w).data(),
            s.tensor(params.b).data(),
        );
        Ok(self.push(Tensor::from_parts(vec![len, dims.o], out), Op::Brnn { params, input, hcat }))
    }

    /// Column-wise maximum of a `len × d` matrix.
    pub fn maxpool(&mut self, input: Var) -> Result<Var> {
        let x = &self.nodes[input.0].value;
        if x.shape().len() != 2 {
            return shape_err("maxpool input must be a matrix");
        }
        let (len, d) = (x.shape()[0], x.shape()[1]);
        if len == 0 {
            return Err(Error::EmptySequence("maxpool over an empty sequence"));
        }
        let mut argmax = vec![0usize; d];
        let mut out = x.row(0).to_vec();
        for t in 1..len {
            for (j, &v) in x.row(t).iter().enumerate() {
                if v > out[j] {
                    out[j] = v;
                    argmax[j] = t;
                }
            }
        }
        Ok(self.push(Tensor::vector(out), Op::MaxPool { input, argmax }))
    }

    /// Smallest gap between the winner and the runner-up of any max-pool
    /// column recorded so far; `None` without a pool over two or more rows.
    /// Finite differences are only meaningful when this exceeds the step.
    pub fn pool_margin(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for node in &self.nodes {
            let Op::MaxPool { input, argmax } = &node.op else { continue };
            let x = &self.nodes[input.0].value;
            if x.rows() < 2 {
                continue;
            }
            for (j, &win) in argmax.iter().enumerate() {
                let top = x.row(win)[j];
                for t in (0..x.rows()).filter(|&t| t != win) {
                    let gap = top - x.row(t)[j];
                    best = Some(best.map_or(gap, |b: f64| b.min(gap)));
                }
            }
        }
        best
    }

    /// `W x` for a parameter matrix `W`.
    pub fn matvec(&mut self, w: ParamId, x: Var) -> Result<Var> {
        let wt = self.store.tensor(w);
        let xv = self.vec_of(x);
        if wt.shape().len() != 2 || wt.shape()[1] != xv.len() {
            return shape_err(format!(
                "{} of shape {:?} cannot multiply a vector of {}",
                self.store.get(w).name,
                wt.shape(),
                xv.len()
            ));
        }
        let out: Vec<f64> = (0..wt.shape()[0])
            .map(|i| wt.row(i).iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, x }))
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (la, lb) = (self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        if la != lb {
            return shape_err(format!("{what}: lengths {la} and {lb} differ"));
        }
        Ok(())
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let x = &self.nodes[a.0].value;
        let value = Tensor::from_parts(x.shape().to_vec(), x.data().iter().map(|&v| f(v)).collect());
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "add")?;
        let data = self.vec_of(a).iter().zip(self.vec_of(b)).map(|(x, y)| x + y).collect();
        let shape = self.nodes[a.0].value.shape().to_vec();
        Ok(self.push(Tensor::from_parts(shape, data), Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "mul")?;
        let data = self.vec_of(a).iter().zip(self.vec_of(b)).map(|(x, y)| x * y).collect();
        let shape = self.nodes[a.0].value.shape().to_vec();
        Ok(self.push(Tensor::from_parts(shape, data), Op::Mul(a, b)))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.map(a, |x| k * x, Op::Scale(a, k))
    }

    /// `1 − a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.map(a, |x| 1.0 - x, Op::OneMinus(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return shape_err("concat of nothing");
        }
        let data: Vec<f64> = parts.iter().flat_map(|p| self.vec_of(*p).iter().copied()).collect();
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec())))
    }

    /// Sum of all coordinates, as a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.vec_of(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let w = attention_weights(self.vec_of(a))?;
        Ok(self.push(Tensor::vector(w), Op::Softmax(a)))
    }

    pub fn index(&mut self, a: Var, i: usize) -> Result<Var> {
        let x = self.vec_of(a);
        if i >= x.len() {
            return shape_err(format!("index {i} out of {}", x.len()));
        }
        let v = x[i];
        Ok(self.push(Tensor::scalar(v), Op::Index(a, i)))
    }

    /// `Σ_i weights[i] · items[i]`.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        let w = self.vec_of(weights);
        if w.len() != items.len() || items.is_empty() {
            return shape_err(format!("{} weights for {} items", w.len(), items.len()));
        }
        let d = self.nodes[items[0].0].value.len();
        let mut out = vec![0.0; d];
        for (&wi, it) in w.iter().zip(items) {
            let v = self.vec_of(*it);
            if v.len() != d {
                return shape_err("weighted sum over vectors of different lengths");
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += wi * x;
            }
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        ))
    }

    pub fn add_all(&mut self, items: &[Var]) -> Result<Var> {
        let Some(first) = items.first() else {
            return shape_err("sum of no terms");
        };
        let mut acc = self.nodes[first.0].value.clone();
        for it in &items[1..] {
            self.same_len(*first, *it, "add_all")?;
            acc.data_mut().iter_mut().zip(self.vec_of(*it)).for_each(|(a, b)| *a += b);
        }
        Ok(self.push(acc, Op::AddAll(items.to_vec())))
    }

    /// `−ln softmax(logits)[label]` for two logits, computed stably.
    pub fn cross_entropy2(&mut self, logits: Var, label: usize) -> Result<Var> {
        let l = self.vec_of(logits);
        if l.len() != 2 || label > 1 {
            return shape_err("two-class cross-entropy needs 2 logits and a 0/1 label");
        }
        let m = l[0].max(l[1]);
        let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
        let v = lse - l[label];
        Ok(self.push(Tensor::scalar(v), Op::CrossEntropy2 { logits, label }))
    }

    /// Gradients of the scalar `loss` with respect to every parameter used.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let mut out = Gradients::new(self.store);
        self.backward_into(loss, 1.0, &mut out)?;
        Ok(out)
    }

    /// Accumulate `seed · ∂loss/∂θ` into `out`.
    pub fn backward_into(&self, loss: Var, seed: f64, out: &mut Gradients) -> Result<()> {
        if self.nodes[loss.0].value.len() != 1 {
            return shape_err("backward needs a scalar loss");
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![seed]);
        fn acc(grads: &mut [Option<Vec<f64>>], v: Var, n: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; n])
        }
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let y = node.value.data();
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    let slot = out.slot(*id, node.value.shape());
                    slot.data_mut().iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                }
                Op::Embed { table, ids } => {
                    let shape = self.store.tensor(*table).shape().to_vec();
                    let d = shape[1];
                    let slot = out.slot(*table, &shape).data_mut();
                    for (t, &id) in ids.iter().enumerate() {
                        for j in 0..d {
                            slot[id * d + j] += g[t * d + j];
                        }
                    }
                }
                Op::Brnn { params, input, hcat } => {
                    let x = &self.nodes[input.0].value;
                    let (len, k) = (x.shape()[0], x.shape()[1]);
                    let dims = params.dims(self.store, k)?;
                    let s = self.store;
                    let bg = brnn::backward(
                        &g,
                        x.data(),
                        hcat,
                        len,
                        dims,
                        s.tensor(params.wf).data(),
                        s.tensor(params.wb).data(),
                        s.tensor(params.w).data(),
                    );
                    for (id, dg) in [(params.wf, &bg.dwf), (params.wb, &bg.dwb), (params.w, &bg.dw), (params.b, &bg.db)] {
                        let shape = s.tensor(id).shape().to_vec();
                        out.slot(id, &shape).data_mut().iter_mut().zip(dg).for_each(|(a, b)| *a += b);
                    }
                    let n = x.len();
                    acc(&mut grads, *input, n).iter_mut().zip(&bg.dx).for_each(|(a, b)| *a += b);
                }
                Op::MaxPool { input, argmax } => {
                    let x = &self.nodes[input.0].value;
                    let d = x.cols();
                    let gx = acc(&mut grads, *input, x.len());
                    for (j, &t) in argmax.iter().enumerate() {
                        gx[t * d + j] += g[j];
                    }
                }
                Op::MatVec { w, x } => {
                    let wt = self.store.tensor(*w);
                    let xv = self.vec_of(*x);
                    let cols = xv.len();
                    let slot = out.slot(*w, wt.shape()).data_mut();
                    for (r, gr) in g.iter().enumerate() {
                        for (c, xc) in xv.iter().enumerate() {
                            slot[r * cols + c] += gr * xc;
                        }
                    }
                    let gx = acc(&mut grads, *x, cols);
                    for (r, gr) in g.iter().enumerate() {
                        for (c, wv) in wt.row(r).iter().enumerate() {
                            gx[c] += wv * gr;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        acc(&mut grads, *v, g.len()).iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.vec_of(*a), self.vec_of(*b));
                    let ga: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.iter().zip(av).map(|(x, y)| x * y).collect();
                    acc(&mut grads, *a, g.len()).iter_mut().zip(&ga).for_each(|(x, y)| *x += y);
                    acc(&mut grads, *b, g.len()).iter_mut().zip(&gb).for_each(|(x, y)| *x += y);
                }
                Op::Tanh(a) => {
                    let ga = acc(&mut grads, *a, g.len());
                    for ((x, gy), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *x += gy * (1.0 - yv * yv);
                    }
                }
                Op::Sigmoid(a) => {
                    let ga = acc(&mut grads, *a, g.len());
                    for ((x, gy), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *x += gy * yv * (1.0 - yv);
                    }
                }
                Op::Scale(a, k) => {
                    acc(&mut grads, *a, g.len()).iter_mut().zip(&g).for_each(|(x, gy)| *x += k * gy);
                }
                Op::OneMinus(a) => {
                    acc(&mut grads, *a, g.len()).iter_mut().zip(&g).for_each(|(x, gy)| *x -= gy);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        acc(&mut grads, *p, n).iter_mut().zip(&g[off..off + n]).for_each(|(x, gy)| *x += gy);
                        off += n;
                    }
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    acc(&mut grads, *a, n).iter_mut().for_each(|x| *x += g[0]);
                }
                Op::Softmax(a) => {
                    let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    let ga = acc(&mut grads, *a, g.len());
                    for ((x, gy), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *x += yv * (gy - dot);
                    }
                }
                Op::Index(a, i) => {
                    let n = self.nodes[a.0].value.len();
                    acc(&mut grads, *a, n)[*i] += g[0];
                }
                Op::WeightedSum { weights, items } => {
                    let w = self.vec_of(*weights).to_vec();
                    let gw: Vec<f64> = items
                        .iter()
                        .map(|it| self.vec_of(*it).iter().zip(&g).map(|(a, b)| a * b).sum())
                        .collect();
                    acc(&mut grads, *weights, w.len()).iter_mut().zip(&gw).for_each(|(x, y)| *x += y);
                    for (wi, it) in w.iter().zip(items) {
                        acc(&mut grads, *it, g.len()).iter_mut().zip(&g).for_each(|(x, gy)| *x += wi * gy);
                    }
                }
                Op::AddAll(items) => {
                    for it in items {
                        acc(&mut grads, *it, g.len()).iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                    }
                }
                Op::CrossEntropy2 { logits, label } => {
                    let p = softmax(self.vec_of(*logits));
                    let gl = acc(&mut grads, *logits, 2);
                    for c in 0..2 {
                        gl[c] += g[0] * (p[c] - if c == *label { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(())
    }
}
