//! Reverse-mode differentiation over a recorded operation list.
//!
//! A [`Graph`] records every operation applied to its variables in order.
//! Parameters enter by reference so large models are never copied into the
//! graph; intermediate values are owned. `backward` walks the list in
//! reverse, accumulating vector-Jacobian products for every variable that
//! transitively depends on a gradient-requiring leaf.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{shape_err, NumericsError, Tensor};

/// Handle to a value recorded in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    AddRow {
        x: Var,
        row: Var,
    },
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    Conv1d {
        x: Var,
        w: Var,
        stride: usize,
    },
    Gelu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        shift: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Transpose(Var),
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        probs: Vec<f64>,
    },
    MeanRows(Var),
    WeightedSum {
        x: Var,
        weights: Option<Vec<f64>>,
    },
    L1 {
        pred: Var,
        target: Var,
    },
    Reshape(Var),
}

struct Node<'a> {
    shape: Vec<usize>,
    value: Cow<'a, [f64]>,
    op: Op,
    needs_grad: bool,
}

/// Recorded computation. Parameters borrowed for `'a`.
#[derive(Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
}

/// Gradients of a scalar with respect to every recorded variable that needed one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, var: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(var.0).and_then(|g| g.take())
    }
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * core::f64::consts::FRAC_1_SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * core::f64::consts::FRAC_1_SQRT_2));
    let pdf = libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI);
    cdf + x * pdf
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            shape,
            value: Cow::Owned(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, false)
    }

    /// Owned leaf that receives a gradient.
    pub fn input(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, true)
    }

    /// Borrowed leaf; receives a gradient when the tensor requires one.
    pub fn param(&mut self, t: &'a Tensor) -> Var {
        self.nodes.push(Node {
            shape: t.shape().to_vec(),
            value: Cow::Borrowed(t.data()),
            op: Op::Leaf,
            needs_grad: t.requires_grad(),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("graph node shape")
    }

    pub fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Per-head softmax weights `[heads, N, N]` of an attention node.
    pub fn attention_probs(&self, v: Var) -> Option<&[f64]> {
        match &self.nodes[v.0].op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    fn ng(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(
                "add",
                format!("lhs {:?} vs rhs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let out: Vec<f64> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        let ng = self.ng(&[a, b]);
        Ok(self.push(shape, out, Op::Add(a, b), ng))
    }

    /// `x[..., C] + row[C]` with the row broadcast over all leading positions.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var, NumericsError> {
        let c = *self.shape(x).last().unwrap();
        if self.value(row).len() != c {
            return Err(shape_err(
                "add_row",
                format!(
                    "trailing axis of x is {c} but row has {} elements",
                    self.value(row).len()
                ),
            ));
        }
        let r = self.value(row);
        let out: Vec<f64> = self
            .value(x)
            .chunks(c)
            .flat_map(|xr| xr.iter().zip(r).map(|(a, b)| a + b))
            .collect();
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x, row]);
        Ok(self.push(shape, out, Op::AddRow { x, row }, ng))
    }

    /// `y = x·W + b` over the trailing axis of `x`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, NumericsError> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        if ws.len() != 2 {
            return Err(shape_err("linear", format!("weight must be 2-D, got {ws:?}")));
        }
        let (din, dout) = (ws[0], ws[1]);
        if *xs.last().unwrap() != din {
            return Err(shape_err(
                "linear",
                format!(
                    "x trailing axis {} (shape {xs:?}) != weight axis 0 ({din})",
                    xs.last().unwrap()
                ),
            ));
        }
        if self.shape(b) != [dout] {
            return Err(shape_err(
                "linear",
                format!("bias shape {:?} != [{dout}] (weight axis 1)", self.shape(b)),
            ));
        }
        let mut shape = xs.to_vec();
        *shape.last_mut().unwrap() = dout;
        let xv = self.value(x);
        let wv = self.value(w);
        let bv = self.value(b);
        let rows = xv.len() / din;
        let mut out = vec![0.0; rows * dout];
        for r in 0..rows {
            let yr = &mut out[r * dout..(r + 1) * dout];
            yr.copy_from_slice(bv);
            for (i, &xi) in xv[r * din..(r + 1) * din].iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                for (y, &wio) in yr.iter_mut().zip(&wv[i * dout..(i + 1) * dout]) {
                    *y += xi * wio;
                }
            }
        }
        let ng = self.ng(&[x, w, b]);
        Ok(self.push(shape, out, Op::Linear { x, w, b }, ng))
    }

    /// Valid (unpadded) strided 1-D convolution without bias.
    /// `x: [C_in, L]`, `w: [C_out, C_in, K]` → `[C_out, floor((L-K)/stride)+1]`.
    pub fn conv1d(&mut self, x: Var, w: Var, stride: usize) -> Result<Var, NumericsError> {
        if stride == 0 {
            return Err(NumericsError::Config("conv1d stride must be >= 1".into()));
        }
        let xs = self.shape(x);
        let ws = self.shape(w);
        if xs.len() != 2 || ws.len() != 3 {
            return Err(shape_err(
                "conv1d",
                format!("expected x [C_in, L] and w [C_out, C_in, K], got {xs:?} and {ws:?}"),
            ));
        }
        let (cin, len) = (xs[0], xs[1]);
        let (cout, wcin, k) = (ws[0], ws[1], ws[2]);
        if wcin != cin {
            return Err(shape_err(
                "conv1d",
                format!("x channels (axis 0) {cin} != weight input channels (axis 1) {wcin}"),
            ));
        }
        if len < k {
            return Err(NumericsError::InputTooShort {
                op: "conv1d",
                got: len,
                required: k,
            });
        }
        let olen = (len - k) / stride + 1;
        let xv = self.value(x);
        let wv = self.value(w);
        let mut out = vec![0.0; cout * olen];
        for co in 0..cout {
            let orow = &mut out[co * olen..(co + 1) * olen];
            for ci in 0..cin {
                let xrow = &xv[ci * len..(ci + 1) * len];
                let wrow = &wv[(co * cin + ci) * k..(co * cin + ci + 1) * k];
                for (kk, &wk) in wrow.iter().enumerate() {
                    for (t, o) in orow.iter_mut().enumerate() {
                        *o += wk * xrow[t * stride + kk];
                    }
                }
            }
        }
        let ng = self.ng(&[x, w]);
        Ok(self.push(vec![cout, olen], out, Op::Conv1d { x, w, stride }, ng))
    }

    /// Exact GELU, `x·Φ(x)`.
    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|&v| gelu(v)).collect();
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x]);
        self.push(shape, out, Op::Gelu(x), ng)
    }

    /// Normalizes the trailing axis to zero mean and unit (population)
    /// variance, then applies `gain` and `shift`.
    pub fn layer_norm(
        &mut self,
        x: Var,
        gain: Var,
        shift: Var,
        eps: f64,
    ) -> Result<Var, NumericsError> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(NumericsError::Config("layer_norm eps must be > 0".into()));
        }
        let c = *self.shape(x).last().unwrap();
        if self.shape(gain) != [c] || self.shape(shift) != [c] {
            return Err(shape_err(
                "layer_norm",
                format!(
                    "gain {:?} / shift {:?} must both be [{c}] (trailing axis of x)",
                    self.shape(gain),
                    self.shape(shift)
                ),
            ));
        }
        let xv = self.value(x);
        let g = self.value(gain);
        let s = self.value(shift);
        let rows = xv.len() / c;
        let mut xhat = vec![0.0; xv.len()];
        let mut inv_std = vec![0.0; rows];
        let mut out = vec![0.0; xv.len()];
        for r in 0..rows {
            let xr = &xv[r * c..(r + 1) * c];
            let mean = xr.iter().sum::<f64>() / c as f64;
            let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv = 1.0 / libm::sqrt(var + eps);
            inv_std[r] = inv;
            for j in 0..c {
                let h = (xr[j] - mean) * inv;
                xhat[r * c + j] = h;
                out[r * c + j] = g[j] * h + s[j];
            }
        }
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x, gain, shift]);
        Ok(self.push(
            shape,
            out,
            Op::LayerNorm {
                x,
                gain,
                shift,
                xhat,
                inv_std,
            },
            ng,
        ))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, NumericsError> {
        let s = self.shape(x);
        if s.len() != 2 {
            return Err(shape_err("transpose", format!("expected 2-D, got {s:?}")));
        }
        let (r, c) = (s[0], s[1]);
        let xv = self.value(x);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = xv[i * c + j];
            }
        }
        let ng = self.ng(&[x]);
        Ok(self.push(vec![c, r], out, Op::Transpose(x), ng))
    }

    /// Multi-head scaled dot-product attention core over already-projected
    /// `q`, `k`, `v` of shape `[N, C]`; heads split the channel axis into
    /// contiguous blocks of `C/heads`. No masking.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize) -> Result<Var, NumericsError> {
        let qs = self.shape(q).to_vec();
        if qs.len() != 2 || self.shape(k) != qs.as_slice() || self.shape(v) != qs.as_slice() {
            return Err(shape_err(
                "attention",
                format!(
                    "q {:?}, k {:?}, v {:?} must share one 2-D shape",
                    qs,
                    self.shape(k),
                    self.shape(v)
                ),
            ));
        }
        let (n, c) = (qs[0], qs[1]);
        if heads == 0 || c % heads != 0 {
            return Err(NumericsError::Config(format!(
                "model dim {c} is not divisible by {heads} heads"
            )));
        }
        let d = c / heads;
        let scale = 1.0 / libm::sqrt(d as f64);
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let mut probs = vec![0.0; heads * n * n];
        let mut out = vec![0.0; n * c];
        for h in 0..heads {
            let off = h * d;
            for i in 0..n {
                let p = &mut probs[(h * n + i) * n..(h * n + i + 1) * n];
                let qi = &qv[i * c + off..i * c + off + d];
                let mut max = f64::NEG_INFINITY;
                for (j, pj) in p.iter_mut().enumerate() {
                    let kj = &kv[j * c + off..j * c + off + d];
                    let s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                    *pj = s;
                    max = max.max(s);
                }
                let mut z = 0.0;
                for pj in p.iter_mut() {
                    *pj = libm::exp(*pj - max);
                    z += *pj;
                }
                for pj in p.iter_mut() {
                    *pj /= z;
                }
                let oi = &mut out[i * c + off..i * c + off + d];
                for (j, &pj) in p.iter().enumerate() {
                    let vj = &vv[j * c + off..j * c + off + d];
                    for (o, &x) in oi.iter_mut().zip(vj) {
                        *o += pj * x;
                    }
                }
            }
        }
        let ng = self.ng(&[q, k, v]);
        Ok(self.push(
            qs,
            out,
            Op::Attention {
                q,
                k,
                v,
                heads,
                probs,
            },
            ng,
        ))
    }

    /// Mean over axis 0 of a 2-D tensor: `[N, C]` → `[C]`.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var, NumericsError> {
        let s = self.shape(x);
        if s.len() != 2 {
            return Err(shape_err("mean_rows", format!("expected [N, C], got {s:?}")));
        }
        let (n, c) = (s[0], s[1]);
        let xv = self.value(x);
        let mut out = vec![0.0; c];
        for r in 0..n {
            for (o, v) in out.iter_mut().zip(&xv[r * c..(r + 1) * c]) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= n as f64;
        }
        let ng = self.ng(&[x]);
        Ok(self.push(vec![c], out, Op::MeanRows(x), ng))
    }

    /// Sum of all elements, shape `[1]`.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().sum();
        let ng = self.ng(&[x]);
        self.push(vec![1], vec![s], Op::WeightedSum { x, weights: None }, ng)
    }

    /// `Σ weights[i]·x[i]`, shape `[1]`.
    pub fn weighted_sum(&mut self, x: Var, weights: Vec<f64>) -> Result<Var, NumericsError> {
        if weights.len() != self.value(x).len() {
            return Err(shape_err(
                "weighted_sum",
                format!("{} weights for {} elements", weights.len(), self.value(x).len()),
            ));
        }
        let s = self
            .value(x)
            .iter()
            .zip(&weights)
            .map(|(a, b)| a * b)
            .sum();
        let ng = self.ng(&[x]);
        Ok(self.push(
            vec![1],
            vec![s],
            Op::WeightedSum {
                x,
                weights: Some(weights),
            },
            ng,
        ))
    }

    /// `Σ |pred − target|`, shape `[1]`.
    pub fn l1(&mut self, pred: Var, target: Var) -> Result<Var, NumericsError> {
        if self.value(pred).len() != self.value(target).len() {
            return Err(NumericsError::Config(format!(
                "l1: prediction has {} elements, target has {}",
                self.value(pred).len(),
                self.value(target).len()
            )));
        }
        let s = self
            .value(pred)
            .iter()
            .zip(self.value(target))
            .map(|(p, t)| (p - t).abs())
            .sum();
        let ng = self.ng(&[pred, target]);
        Ok(self.push(vec![1], vec![s], Op::L1 { pred, target }, ng))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, NumericsError> {
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(shape_err(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape(x)),
            ));
        }
        let out = self.value(x).to_vec();
        let ng = self.ng(&[x]);
        Ok(self.push(shape.to_vec(), out, Op::Reshape(x), ng))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumericsError> {
        let ls = self.shape(loss);
        if ls.iter().product::<usize>() != 1 {
            return Err(NumericsError::NonScalarLoss(ls.to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(&node.op, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn acc<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let len = self.nodes[v.0].value.len();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
    }

    fn propagate(&self, op: &Op, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if let Some(d) = self.acc(grads, v) {
                        d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::AddRow { x, row } => {
                if let Some(d) = self.acc(grads, *x) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                }
                if let Some(d) = self.acc(grads, *row) {
                    let c = d.len();
                    for gr in g.chunks(c) {
                        d.iter_mut().zip(gr).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::Linear { x, w, b } => {
                let ws = self.shape(*w);
                let (din, dout) = (ws[0], ws[1]);
                let xv = self.value(*x);
                let wv = self.value(*w);
                let rows = xv.len() / din;
                if let Some(d) = self.acc(grads, *x) {
                    for r in 0..rows {
                        let gr = &g[r * dout..(r + 1) * dout];
                        for i in 0..din {
                            let wr = &wv[i * dout..(i + 1) * dout];
                            d[r * din + i] += gr.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
                if let Some(d) = self.acc(grads, *w) {
                    for r in 0..rows {
                        let gr = &g[r * dout..(r + 1) * dout];
                        for i in 0..din {
                            let xi = xv[r * din + i];
                            if xi == 0.0 {
                                continue;
                            }
                            for (dw, &go) in d[i * dout..(i + 1) * dout].iter_mut().zip(gr) {
                                *dw += xi * go;
                            }
                        }
                    }
                }
                if let Some(d) = self.acc(grads, *b) {
                    for gr in g.chunks(dout) {
                        d.iter_mut().zip(gr).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::Conv1d { x, w, stride } => {
                let stride = *stride;
                let (cin, len) = (self.shape(*x)[0], self.shape(*x)[1]);
                let (cout, k) = (self.shape(*w)[0], self.shape(*w)[2]);
                let olen = (len - k) / stride + 1;
                let xv = self.value(*x);
                let wv = self.value(*w);
                if let Some(d) = self.acc(grads, *x) {
                    for co in 0..cout {
                        let grow = &g[co * olen..(co + 1) * olen];
                        for ci in 0..cin {
                            let wrow = &wv[(co * cin + ci) * k..(co * cin + ci + 1) * k];
                            let drow = &mut d[ci * len..(ci + 1) * len];
                            for (kk, &wk) in wrow.iter().enumerate() {
                                for (t, &go) in grow.iter().enumerate() {
                                    drow[t * stride + kk] += wk * go;
                                }
                            }
                        }
                    }
                }
                if let Some(d) = self.acc(grads, *w) {
                    for co in 0..cout {
                        let grow = &g[co * olen..(co + 1) * olen];
                        for ci in 0..cin {
                            let xrow = &xv[ci * len..(ci + 1) * len];
                            for kk in 0..k {
                                let s: f64 = grow
                                    .iter()
                                    .enumerate()
                                    .map(|(t, &go)| go * xrow[t * stride + kk])
                                    .sum();
                                d[(co * cin + ci) * k + kk] += s;
                            }
                        }
                    }
                }
            }
            Op::Gelu(x) => {
                let xv = self.value(*x);
                if let Some(d) = self.acc(grads, *x) {
                    for ((d, &g), &xi) in d.iter_mut().zip(g).zip(xv) {
                        *d += g * gelu_grad(xi);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                shift,
                xhat,
                inv_std,
            } => {
                let c = self.shape(*gain)[0];
                let gv = self.value(*gain);
                if let Some(d) = self.acc(grads, *x) {
                    for (r, &inv) in inv_std.iter().enumerate() {
                        let gr = &g[r * c..(r + 1) * c];
                        let hr = &xhat[r * c..(r + 1) * c];
                        let mut mean_dh = 0.0;
                        let mut mean_dh_h = 0.0;
                        for j in 0..c {
                            let dh = gr[j] * gv[j];
                            mean_dh += dh;
                            mean_dh_h += dh * hr[j];
                        }
                        mean_dh /= c as f64;
                        mean_dh_h /= c as f64;
                        for j in 0..c {
                            let dh = gr[j] * gv[j];
                            d[r * c + j] += inv * (dh - mean_dh - hr[j] * mean_dh_h);
                        }
                    }
                }
                if let Some(d) = self.acc(grads, *gain) {
                    for (gr, hr) in g.chunks(c).zip(xhat.chunks(c)) {
                        for j in 0..c {
                            d[j] += gr[j] * hr[j];
                        }
                    }
                }
                if let Some(d) = self.acc(grads, *shift) {
                    for gr in g.chunks(c) {
                        d.iter_mut().zip(gr).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::Transpose(x) => {
                let (r, c) = (self.shape(*x)[0], self.shape(*x)[1]);
                if let Some(d) = self.acc(grads, *x) {
                    for i in 0..r {
                        for j in 0..c {
                            d[i * c + j] += g[j * r + i];
                        }
                    }
                }
            }
            Op::Attention {
                q,
                k,
                v,
                heads,
                probs,
            } => self.attention_backward(*q, *k, *v, *heads, probs, g, grads),
            Op::MeanRows(x) => {
                let n = self.shape(*x)[0];
                if let Some(d) = self.acc(grads, *x) {
                    let c = g.len();
                    for r in 0..n {
                        for j in 0..c {
                            d[r * c + j] += g[j] / n as f64;
                        }
                    }
                }
            }
            Op::WeightedSum { x, weights } => {
                if let Some(d) = self.acc(grads, *x) {
                    match weights {
                        Some(w) => d.iter_mut().zip(w).for_each(|(d, w)| *d += g[0] * w),
                        None => d.iter_mut().for_each(|d| *d += g[0]),
                    }
                }
            }
            Op::L1 { pred, target } => {
                let pv = self.value(*pred);
                let tv = self.value(*target);
                // subgradient 0 at ties
                let sign = |p: f64, t: f64| {
                    if p > t {
                        1.0
                    } else if p < t {
                        -1.0
                    } else {
                        0.0
                    }
                };
                if let Some(d) = self.acc(grads, *pred) {
                    for ((d, &p), &t) in d.iter_mut().zip(pv).zip(tv) {
                        *d += g[0] * sign(p, t);
                    }
                }
                if let Some(d) = self.acc(grads, *target) {
                    for ((d, &p), &t) in d.iter_mut().zip(pv).zip(tv) {
                        *d -= g[0] * sign(p, t);
                    }
                }
            }
            Op::Reshape(x) => {
                if let Some(d) = self.acc(grads, *x) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn attention_backward(
        &self,
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        probs: &[f64],
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let (n, c) = (self.shape(q)[0], self.shape(q)[1]);
        let d = c / heads;
        let scale = 1.0 / libm::sqrt(d as f64);
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let mut dq = vec![0.0; n * c];
        let mut dk = vec![0.0; n * c];
        let mut dv = vec![0.0; n * c];
        let mut dp = vec![0.0; n];
        for h in 0..heads {
            let off = h * d;
            for i in 0..n {
                let p = &probs[(h * n + i) * n..(h * n + i + 1) * n];
                let gi = &g[i * c + off..i * c + off + d];
                // dV[j] += P[i,j]·dO[i];  dP[i,j] = dO[i]·V[j]
                for j in 0..n {
                    let vj = &vv[j * c + off..j * c + off + d];
                    dp[j] = gi.iter().zip(vj).map(|(a, b)| a * b).sum();
                    for (dvj, &go) in dv[j * c + off..j * c + off + d].iter_mut().zip(gi) {
                        *dvj += p[j] * go;
                    }
                }
                let dot: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
                let qi = &qv[i * c + off..i * c + off + d];
                for j in 0..n {
                    let ds = p[j] * (dp[j] - dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let kj = &kv[j * c + off..j * c + off + d];
                    for (dqi, &kjx) in dq[i * c + off..i * c + off + d].iter_mut().zip(kj) {
                        *dqi += ds * kjx;
                    }
                    for (dkj, &qix) in dk[j * c + off..j * c + off + d].iter_mut().zip(qi) {
                        *dkj += ds * qix;
                    }
                }
            }
        }
        for (var, buf) in [(q, dq), (k, dk), (v, dv)] {
            if let Some(d) = self.acc(grads, var) {
                d.iter_mut().zip(&buf).for_each(|(d, g)| *d += g);
            }
        }
    }
}
