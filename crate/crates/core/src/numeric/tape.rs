//! Reverse-mode differentiation over a closed set of vector operations.
//!
//! A [`Tape`] records every operation applied during a forward pass. Calling
//! [`Tape::backward`] on a scalar node replays the tape in reverse and returns
//! [`Gradients`] for every parameter of the borrowed [`ParamStore`].
//! Parameters that the loss does not reach get zero gradients.
//!
//! Supported operations: affine map / matrix product, addition,
//! concatenation, slicing, tanh, sigmoid, relu, softmax, log, sum, scaling,
//! gather (embedding lookup and patch extraction), transpose and a fused
//! LSTM cell step.

use std::collections::HashMap;
use std::sync::Arc;

use super::array::softmax_into;
use super::{Array, Gradients, NumericError, ParamId, ParamStore};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    /// `w [m,k] * x [k,n] (+ b [m])`
    Affine { w: Var, x: Var, b: Option<Var>, m: usize, k: usize, n: usize },
    Add(Var, Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    Log { src: Var, eps: f64 },
    Sum(Var),
    Scale(Var, f64),
    Gather { src: Var, idx: Arc<[usize]> },
    Transpose { src: Var, rows: usize, cols: usize },
    /// Fused LSTM step; output is `[h'; c']`. `saved` holds gates `i,f,g,o`
    /// followed by `tanh(c')` and the cell input `[x; h]`.
    Lstm { w: Var, b: Var, x: Var, h: Var, c: Var, hidden: usize, saved: Vec<f64> },
}

struct Node {
    op: Op,
    shape: Vec<usize>,
    value: Vec<f64>,
}

/// Records a forward computation for later differentiation.
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

fn shape_err(op: &'static str, detail: String) -> NumericError {
    NumericError::Shape { op, detail }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::with_capacity(256), param_vars: HashMap::new() }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, shape, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => self.params.value(id).data(),
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    fn len_of(&self, v: Var) -> usize {
        self.nodes[v.0].shape.iter().product()
    }

    pub fn array(&self, v: Var) -> Array {
        Array::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("tape values are well-formed")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a constant input.
    pub fn input(&mut self, a: Array) -> Var {
        let shape = a.shape().to_vec();
        self.push(Op::Input, shape, a.into_data())
    }

    pub fn input_vec(&mut self, data: Vec<f64>) -> Var {
        let n = data.len();
        self.push(Op::Input, vec![n], data)
    }

    /// Leaf for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let shape = self.params.value(id).shape().to_vec();
        let v = self.push(Op::Param(id), shape, Vec::new());
        self.param_vars.insert(id, v);
        v
    }

    pub fn param_named(&mut self, name: &str) -> Result<Var, NumericError> {
        let id = self.params.id(name).ok_or_else(|| NumericError::UnknownParam(name.to_string()))?;
        Ok(self.param(id))
    }

    fn matrix_dims(&self, v: Var) -> (usize, usize) {
        let s = self.shape(v);
        match s.len() {
            1 => (s[0], 1),
            _ => (s[0], s[1..].iter().product()),
        }
    }

    /// `w * x + b`, with `x` a vector or a `[k, n]` matrix and `b` broadcast over columns.
    pub fn affine(&mut self, w: Var, x: Var, b: Option<Var>) -> Result<Var, NumericError> {
        let (m, k) = self.matrix_dims(w);
        let (kx, n) = self.matrix_dims(x);
        if self.shape(w).len() != 2 || k != kx {
            return Err(shape_err(
                "affine",
                format!("weight {:?} incompatible with input {:?}", self.shape(w), self.shape(x)),
            ));
        }
        if let Some(b) = b {
            if self.len_of(b) != m {
                return Err(shape_err("affine", format!("bias {:?} does not match {m} output rows", self.shape(b))));
            }
        }
        let mut out = vec![0.0; m * n];
        {
            let wv = self.value(w);
            let xv = self.value(x);
            if n == 1 {
                for i in 0..m {
                    out[i] = dot(&wv[i * k..(i + 1) * k], xv);
                }
            } else {
                for i in 0..m {
                    let row = &mut out[i * n..(i + 1) * n];
                    for p in 0..k {
                        let a = wv[i * k + p];
                        if a != 0.0 {
                            axpy(a, &xv[p * n..(p + 1) * n], row);
                        }
                    }
                }
            }
            if let Some(b) = b {
                let bv = self.value(b);
                for i in 0..m {
                    for j in 0..n {
                        out[i * n + j] += bv[i];
                    }
                }
            }
        }
        let shape = if self.shape(x).len() == 1 { vec![m] } else { vec![m, n] };
        Ok(self.push(Op::Affine { w, x, b, m, k, n }, shape, out))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        self.affine(a, b, None)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("add", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let out: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Op::Add(a, b), shape, out))
    }

    /// Flat concatenation of the given nodes.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, NumericError> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no inputs".into()));
        }
        let mut out = Vec::with_capacity(parts.iter().map(|&p| self.len_of(p)).sum());
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        Ok(self.push(Op::Concat(parts.to_vec()), vec![n], out))
    }

    /// Concatenation of equal-length vectors into a `[rows, len]` matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var, NumericError> {
        let first = rows.first().map(|&r| self.len_of(r)).ok_or_else(|| shape_err("stack", "no inputs".into()))?;
        if rows.iter().any(|&r| self.len_of(r) != first) {
            return Err(shape_err("stack", "rows differ in length".into()));
        }
        let v = self.concat(rows)?;
        self.nodes[v.0].shape = vec![rows.len(), first];
        Ok(v)
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var, NumericError> {
        let n = self.len_of(src);
        if len == 0 || start + len > n {
            return Err(shape_err("slice", format!("[{start}, {}) out of range for length {n}", start + len)));
        }
        let out = self.value(src)[start..start + len].to_vec();
        Ok(self.push(Op::Slice { src, start }, vec![len], out))
    }

    fn unary(&mut self, src: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out: Vec<f64> = self.value(src).iter().map(|&x| f(x)).collect();
        let shape = self.shape(src).to_vec();
        self.push(op, shape, out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    /// `ln(max(x, eps))`; pass `eps = 0` for a plain logarithm.
    pub fn log(&mut self, a: Var, eps: f64) -> Result<Var, NumericError> {
        if let Some(bad) = self.value(a).iter().find(|&&x| x.max(eps) <= 0.0) {
            return Err(NumericError::NonFinite(format!("log of non-positive value {bad}")));
        }
        Ok(self.unary(a, Op::Log { src: a, eps }, move |x| x.max(eps).ln()))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, Op::Scale(a, s), move |x| x * s)
    }

    /// Softmax over all entries of `a`.
    pub fn softmax(&mut self, a: Var) -> Result<Var, NumericError> {
        if self.len_of(a) == 0 {
            return Err(shape_err("softmax", "empty axis".into()));
        }
        let mut out = vec![0.0; self.len_of(a)];
        softmax_into(self.value(a), &mut out);
        let n = out.len();
        Ok(self.push(Op::Softmax(a), vec![n], out))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(Op::Sum(a), vec![1], vec![s])
    }

    /// `out[i] = src[idx[i]]`, reshaped to `shape`.
    pub fn gather(&mut self, src: Var, idx: Arc<[usize]>, shape: Vec<usize>) -> Result<Var, NumericError> {
        let n = self.len_of(src);
        if shape.iter().product::<usize>() != idx.len() {
            return Err(shape_err("gather", format!("{} indices cannot fill shape {shape:?}", idx.len())));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(shape_err("gather", format!("index {bad} out of range for length {n}")));
        }
        let sv = self.value(src);
        let out: Vec<f64> = idx.iter().map(|&i| sv[i]).collect();
        Ok(self.push(Op::Gather { src, idx }, shape, out))
    }

    /// Row `row` of a `[rows, d]` table (embedding lookup).
    pub fn row(&mut self, table: Var, row: usize) -> Result<Var, NumericError> {
        let (rows, d) = self.matrix_dims(table);
        if row >= rows {
            return Err(shape_err("embedding", format!("row {row} out of range for {rows} rows")));
        }
        let idx: Arc<[usize]> = (row * d..(row + 1) * d).collect();
        self.gather(table, idx, vec![d])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, NumericError> {
        if self.shape(a).len() != 2 {
            return Err(shape_err("transpose", format!("expected a matrix, got {:?}", self.shape(a))));
        }
        let (rows, cols) = (self.shape(a)[0], self.shape(a)[1]);
        let av = self.value(a);
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                out[j * rows + i] = av[i * cols + j];
            }
        }
        Ok(self.push(Op::Transpose { src: a, rows, cols }, vec![cols, rows], out))
    }

    /// One LSTM cell step; returns `(h', c')`.
    ///
    /// `w` is `[4H, I + H]`, `b` is `[4H]`, gate order is input, forget,
    /// candidate, output.
    pub fn lstm(&mut self, w: Var, b: Var, x: Var, h: Var, c: Var) -> Result<(Var, Var), NumericError> {
        let hidden = self.len_of(h);
        let input = self.len_of(x);
        let ws = self.shape(w);
        if ws.len() != 2 || ws[0] != 4 * hidden || ws[1] != input + hidden {
            return Err(shape_err(
                "lstm",
                format!("weight {:?} incompatible with input {input} and hidden {hidden}", self.shape(w)),
            ));
        }
        if self.len_of(b) != 4 * hidden || self.len_of(c) != hidden {
            return Err(shape_err("lstm", format!("bias {:?} / cell {:?} mismatch", self.shape(b), self.shape(c))));
        }
        let k = input + hidden;
        let mut xh = Vec::with_capacity(k);
        xh.extend_from_slice(self.value(x));
        xh.extend_from_slice(self.value(h));
        let wv = self.value(w);
        let bv = self.value(b);
        let cv = self.value(c);
        let mut saved = vec![0.0; 5 * hidden + k];
        let mut out = vec![0.0; 2 * hidden];
        for r in 0..4 * hidden {
            let z = dot(&wv[r * k..(r + 1) * k], &xh) + bv[r];
            saved[r] = if (2 * hidden..3 * hidden).contains(&r) { z.tanh() } else { sigmoid(z) };
        }
        for j in 0..hidden {
            let (i, f, g, o) = (saved[j], saved[hidden + j], saved[2 * hidden + j], saved[3 * hidden + j]);
            let c_new = f * cv[j] + i * g;
            let tc = c_new.tanh();
            saved[4 * hidden + j] = tc;
            out[j] = o * tc;
            out[hidden + j] = c_new;
        }
        saved[5 * hidden..].copy_from_slice(&xh);
        let joint = self.push(Op::Lstm { w, b, x, h, c, hidden, saved }, vec![2 * hidden], out);
        let h_new = self.slice(joint, 0, hidden)?;
        let c_new = self.slice(joint, hidden, hidden)?;
        Ok((h_new, c_new))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumericError> {
        if self.len_of(loss) != 1 {
            return Err(NumericError::NonScalarLoss(self.shape(loss).to_vec()));
        }
        let mut grads = Gradients::zeros_like(self.params);
        let mut adj: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(vec![1.0]);

        fn acc(adj: &mut [Option<Vec<f64>>], v: Var, n: usize) -> &mut Vec<f64> {
            adj[v.0].get_or_insert_with(|| vec![0.0; n])
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    axpy(1.0, &g, grads.get_mut(*id));
                }
                &Op::Affine { w, x, b, m, k, n } => {
                    let wv = self.value(w);
                    let xv = self.value(x);
                    {
                        let gw = acc(&mut adj, w, m * k);
                        if n == 1 {
                            for i in 0..m {
                                if g[i] != 0.0 {
                                    axpy(g[i], xv, &mut gw[i * k..(i + 1) * k]);
                                }
                            }
                        } else {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                for p in 0..k {
                                    gw[i * k + p] += dot(grow, &xv[p * n..(p + 1) * n]);
                                }
                            }
                        }
                    }
                    {
                        let gx = acc(&mut adj, x, k * n);
                        if n == 1 {
                            for i in 0..m {
                                if g[i] != 0.0 {
                                    axpy(g[i], &wv[i * k..(i + 1) * k], gx);
                                }
                            }
                        } else {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                for p in 0..k {
                                    let a = wv[i * k + p];
                                    if a != 0.0 {
                                        axpy(a, grow, &mut gx[p * n..(p + 1) * n]);
                                    }
                                }
                            }
                        }
                    }
                    if let Some(b) = b {
                        let gb = acc(&mut adj, b, m);
                        for i in 0..m {
                            gb[i] += g[i * n..(i + 1) * n].iter().sum::<f64>();
                        }
                    }
                }
                &Op::Add(a, b) => {
                    axpy(1.0, &g, acc(&mut adj, a, g.len()));
                    axpy(1.0, &g, acc(&mut adj, b, g.len()));
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.len_of(p);
                        axpy(1.0, &g[off..off + n], acc(&mut adj, p, n));
                        off += n;
                    }
                }
                &Op::Slice { src, start } => {
                    let n = self.len_of(src);
                    axpy(1.0, &g, &mut acc(&mut adj, src, n)[start..start + g.len()]);
                }
                &Op::Tanh(a) => {
                    let y = &node.value;
                    let ga = acc(&mut adj, a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }
                &Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = acc(&mut adj, a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }
                &Op::Relu(a) => {
                    let y = &node.value;
                    let ga = acc(&mut adj, a, g.len());
                    for i in 0..g.len() {
                        if y[i] > 0.0 {
                            ga[i] += g[i];
                        }
                    }
                }
                &Op::Softmax(a) => {
                    let y = &node.value;
                    let gy = dot(&g, y);
                    let ga = acc(&mut adj, a, g.len());
                    for i in 0..g.len() {
                        ga[i] += y[i] * (g[i] - gy);
                    }
                }
                &Op::Log { src, eps } => {
                    let xv = self.value(src);
                    let ga = acc(&mut adj, src, g.len());
                    for i in 0..g.len() {
                        if xv[i] >= eps {
                            ga[i] += g[i] / xv[i];
                        }
                    }
                }
                &Op::Sum(a) => {
                    let n = self.len_of(a);
                    acc(&mut adj, a, n).iter_mut().for_each(|x| *x += g[0]);
                }
                &Op::Scale(a, s) => {
                    axpy(s, &g, acc(&mut adj, a, g.len()));
                }
                Op::Gather { src, idx } => {
                    let n = self.len_of(*src);
                    let gs = acc(&mut adj, *src, n);
                    for (gi, &i) in g.iter().zip(idx.iter()) {
                        gs[i] += gi;
                    }
                }
                &Op::Transpose { src, rows, cols } => {
                    let gs = acc(&mut adj, src, rows * cols);
                    for i in 0..rows {
                        for j in 0..cols {
                            gs[i * cols + j] += g[j * rows + i];
                        }
                    }
                }
                Op::Lstm { w, b, x, h, c, hidden, saved } => {
                    let hd = *hidden;
                    let k = saved.len() - 5 * hd;
                    let xh = &saved[5 * hd..];
                    let cv = self.value(*c);
                    let mut dz = vec![0.0; 4 * hd];
                    let mut dc_prev = vec![0.0; hd];
                    for j in 0..hd {
                        let (i, f, gg, o) = (saved[j], saved[hd + j], saved[2 * hd + j], saved[3 * hd + j]);
                        let tc = saved[4 * hd + j];
                        let dh = g[j];
                        let dc = g[hd + j] + dh * o * (1.0 - tc * tc);
                        let d_o = dh * tc;
                        let d_i = dc * gg;
                        let d_g = dc * i;
                        let d_f = dc * cv[j];
                        dc_prev[j] = dc * f;
                        dz[j] = d_i * i * (1.0 - i);
                        dz[hd + j] = d_f * f * (1.0 - f);
                        dz[2 * hd + j] = d_g * (1.0 - gg * gg);
                        dz[3 * hd + j] = d_o * o * (1.0 - o);
                    }
                    let wv = self.value(*w);
                    {
                        let gw = acc(&mut adj, *w, 4 * hd * k);
                        for r in 0..4 * hd {
                            if dz[r] != 0.0 {
                                axpy(dz[r], xh, &mut gw[r * k..(r + 1) * k]);
                            }
                        }
                    }
                    axpy(1.0, &dz, acc(&mut adj, *b, 4 * hd));
                    let mut dxh = vec![0.0; k];
                    for r in 0..4 * hd {
                        if dz[r] != 0.0 {
                            axpy(dz[r], &wv[r * k..(r + 1) * k], &mut dxh);
                        }
                    }
                    let input = k - hd;
                    axpy(1.0, &dxh[..input], acc(&mut adj, *x, input));
                    axpy(1.0, &dxh[input..], acc(&mut adj, *h, hd));
                    axpy(1.0, &dc_prev, acc(&mut adj, *c, hd));
                }
            }
        }
        Ok(grads)
    }
}

/// Evaluates `build` on a fresh tape and differentiates the returned scalar.
pub fn forward_backward<F>(params: &ParamStore, build: F) -> Result<(f64, Gradients), NumericError>
where
    F: FnOnce(&mut Tape<'_>) -> Result<Var, NumericError>,
{
    let mut tape = Tape::new(params);
    let loss = build(&mut tape)?;
    let grads = tape.backward(loss)?;
    let value = tape.value(loss)[0];
    if !value.is_finite() {
        return Err(NumericError::NonFinite(format!("loss {value}")));
    }
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gradcheck::{central_difference, relative_error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_has_grad_six() {
        let mut store = ParamStore::new();
        let p = store.insert("p", Array::new(vec![1, 1], vec![3.0]).unwrap()).unwrap();
        let (val, grads) = forward_backward(&store, |t| {
            let w = t.param(p);
            let x = t.gather(w, Arc::from(vec![0usize]), vec![1])?;
            let sq = t.affine(w, x, None)?;
            Ok(t.sum(sq))
        })
        .unwrap();
        assert_eq!(val, 9.0);
        assert_eq!(grads.get(p), &[6.0]);
    }

    #[test]
    fn softmax_sum_has_zero_gradient() {
        let mut store = ParamStore::new();
        let z = store.insert("z", Array::vector(vec![0.3, -2.0, 5.0, 1.0])).unwrap();
        let (val, grads) = forward_backward(&store, |t| {
            let v = t.param(z);
            let s = t.softmax(v)?;
            Ok(t.sum(s))
        })
        .unwrap();
        assert!((val - 1.0).abs() < 1e-12);
        assert!(grads.get(z).iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn unreachable_params_get_zero_grads() {
        let mut store = ParamStore::new();
        let a = store.insert("a", Array::vector(vec![1.0, 2.0])).unwrap();
        let b = store.insert("b", Array::vector(vec![4.0])).unwrap();
        let (_, grads) = forward_backward(&store, |t| {
            let v = t.param(a);
            Ok(t.sum(v))
        })
        .unwrap();
        assert_eq!(grads.get(a), &[1.0, 1.0]);
        assert_eq!(grads.get(b), &[0.0]);
    }

    #[test]
    fn errors_name_the_op() {
        let mut store = ParamStore::new();
        let w = store.insert("w", Array::new(vec![2, 3], vec![0.0; 6]).unwrap()).unwrap();
        let mut tape = Tape::new(&store);
        let wv = tape.param(w);
        let x = tape.input_vec(vec![1.0, 2.0]);
        let err = tape.affine(wv, x, None).unwrap_err();
        assert!(err.to_string().contains("affine"), "{err}");
        let s = tape.input_vec(vec![1.0, 2.0]);
        assert!(matches!(tape.backward(s), Err(NumericError::NonScalarLoss(_))));
        let y = tape.input_vec(vec![1.0]);
        assert!(tape.add(s, y).unwrap_err().to_string().contains("add"));
    }

    fn random_store(rng: &mut ChaCha8Rng, specs: &[(&str, Vec<usize>)]) -> ParamStore {
        let mut s = ParamStore::new();
        for (name, shape) in specs {
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            s.insert(*name, Array::new(shape.clone(), data).unwrap()).unwrap();
        }
        s
    }

    /// Two-layer net using every op, checked entry by entry against central differences.
    #[test]
    fn two_layer_network_matches_finite_differences() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let store = random_store(
                &mut rng,
                &[
                    ("w1", vec![5, 4]),
                    ("b1", vec![5]),
                    ("w2", vec![3, 5]),
                    ("b2", vec![3]),
                    ("emb", vec![6, 4]),
                    ("lw", vec![12, 7]),
                    ("lb", vec![12]),
                ],
            );
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = |t: &mut Tape<'_>| -> Result<Var, NumericError> {
                let w1 = t.param_named("w1")?;
                let b1 = t.param_named("b1")?;
                let w2 = t.param_named("w2")?;
                let b2 = t.param_named("b2")?;
                let emb = t.param_named("emb")?;
                let xin = t.input_vec(x.clone());
                let e = t.row(emb, 2)?;
                let xe = t.add(xin, e)?;
                let h = t.affine(w1, xe, Some(b1))?;
                let h = t.tanh(h);
                let lw = t.param_named("lw")?;
                let lb = t.param_named("lb")?;
                let lx = t.slice(h, 0, 4)?;
                let h0 = t.input_vec(vec![0.1, -0.2, 0.3]);
                let c0 = t.input_vec(vec![0.5, 0.0, -0.5]);
                let (h1, c1) = t.lstm(lw, lb, lx, h0, c0)?;
                let (h2, _) = t.lstm(lw, lb, lx, h1, c1)?;
                let o = t.affine(w2, h, Some(b2))?;
                let o = t.sigmoid(o);
                let mixed = t.add(o, h2)?;
                let rows = t.stack(&[mixed, h2])?;
                let rt = t.transpose(rows)?;
                let prod = t.matmul(rows, rt)?;
                let r = t.relu(prod);
                let flat = t.gather(r, Arc::from(vec![0usize, 1, 2, 3]), vec![4])?;
                let p = t.softmax(flat)?;
                let lp = t.log(p, 0.0)?;
                let s = t.sum(lp);
                Ok(t.scale(s, -0.5))
            };
            let (_, grads) = forward_backward(&store, f).unwrap();
            for id in store.ids() {
                for i in 0..store.value(id).len() {
                    let num = central_difference(&store, id, i, 1e-5, |s| {
                        let mut t = Tape::new(s);
                        let v = f(&mut t).unwrap();
                        t.value(v)[0]
                    });
                    let ana = grads.get(id)[i];
                    let err = relative_error(ana, num);
                    assert!(err <= 1e-4, "seed {seed} {}[{i}]: {ana} vs {num}", store.name(id));
                }
            }
        }
    }
}
