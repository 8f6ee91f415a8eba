//! Reverse-mode tape over dense row-major tensors.
//!
//! The network is recorded on the tape together with its two forward-mode
//! tangent streams `∂φ/∂x₁`, `∂φ/∂x₂`, so a backward pass through the tape
//! differentiates spatial derivatives with respect to the parameters.

use thiserror::Error;

use crate::geometry::Vec2;
use crate::network::NetworkParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("non-finite value produced by `{op}` (node {node})")]
    NonFinite { op: &'static str, node: usize },
    #[error("shape mismatch in `{op}`: {detail}")]
    Shape { op: &'static str, detail: String },
}

/// Handle to a tape node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Sparse per-slot combination of the three network streams at one point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Slot {
    pub point: usize,
    /// `(stream, component, coefficient)`, stream 0 = value, 1 = ∂/∂x₁, 2 = ∂/∂x₂.
    pub terms: Vec<(u8, u8, f64)>,
}

/// Dense row-major matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `y = M x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four partial sums keep the reduction order fixed and vectorizable
    let mut s = [0.0; 4];
    let n = a.len().min(b.len());
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

enum Op<'a> {
    Leaf,
    /// `a·bᵀ (+ bias)`.
    Affine { a: Var, b: Var, bias: Option<Var> },
    Tanh(Var),
    /// `1 − a²`.
    OneMinusSq(Var),
    Mul(Var, Var),
    Add(Var, Var),
    Combine { streams: [Var; 3], slots: &'a [Slot] },
    MatVec { m: &'a Matrix, x: Var },
    WeightedSumSquares { x: Var, target: &'a [f64], weights: &'a [f64] },
}

impl Op<'_> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Affine { .. } => "affine",
            Op::Tanh(_) => "tanh",
            Op::OneMinusSq(_) => "one_minus_square",
            Op::Mul(..) => "mul",
            Op::Add(..) => "add",
            Op::Combine { .. } => "combine",
            Op::MatVec { .. } => "matvec",
            Op::WeightedSumSquares { .. } => "weighted_sum_squares",
        }
    }
}

struct Node<'a> {
    value: Matrix,
    op: Op<'a>,
    requires_grad: bool,
}

/// Recording of one evaluation; borrowed tables must outlive it.
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    error: Option<AutodiffError>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), error: None }
    }

    fn push(&mut self, value: Matrix, op: Op<'a>) -> Var {
        let requires_grad = match &op {
            Op::Leaf => false,
            Op::Affine { a, b, bias } => {
                self.req(*a) || self.req(*b) || bias.map(|v| self.req(v)).unwrap_or(false)
            }
            Op::Tanh(a) | Op::OneMinusSq(a) => self.req(*a),
            Op::Mul(a, b) | Op::Add(a, b) => self.req(*a) || self.req(*b),
            Op::Combine { streams, .. } => streams.iter().any(|s| self.req(*s)),
            Op::MatVec { x, .. } => self.req(*x),
            Op::WeightedSumSquares { x, .. } => self.req(*x),
        };
        if self.error.is_none() && !value.data.iter().all(|v| v.is_finite()) {
            self.error = Some(AutodiffError::NonFinite { op: op.name(), node: self.nodes.len() });
        }
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn req(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape_error(&mut self, op: &'static str, detail: String) {
        if self.error.is_none() {
            self.error = Some(AutodiffError::Shape { op, detail });
        }
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data[0]
    }

    /// First error raised while recording, if any.
    pub fn error(&self) -> Option<&AutodiffError> {
        self.error.as_ref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Constant input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Differentiable input.
    pub fn parameter(&mut self, value: Matrix) -> Var {
        let v = self.push(value, Op::Leaf);
        self.nodes[v.0].requires_grad = true;
        v
    }

    pub fn affine(&mut self, a: Var, b: Var, bias: Option<Var>) -> Var {
        let (ar, ac, br, bc) = {
            let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
            (av.rows, av.cols, bv.rows, bv.cols)
        };
        if ac != bc {
            self.shape_error("affine", format!("{ar}x{ac} · ({br}x{bc})ᵀ"));
        }
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let (n, k, m) = (ar, ac.min(bc), br);
        // transpose b once so the inner loop is a contiguous axpy
        let mut bt = vec![0.0; k * m];
        for j in 0..m {
            for l in 0..k {
                bt[l * m + j] = bv.data[j * bv.cols + l];
            }
        }
        let mut out = Matrix::zeros(n, m);
        let bias_row = bias.map(|v| self.nodes[v.0].value.data.clone());
        for p in 0..n {
            let orow = &mut out.data[p * m..(p + 1) * m];
            if let Some(b) = &bias_row {
                orow.copy_from_slice(&b[..m]);
            }
            let arow = &av.data[p * av.cols..p * av.cols + k];
            for l in 0..k {
                axpy(arow[l], &bt[l * m..(l + 1) * m], orow);
            }
        }
        self.push(out, Op::Affine { a, b, bias })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let out = Matrix { rows: av.rows, cols: av.cols, data: av.data.iter().map(|v| v.tanh()).collect() };
        self.push(out, Op::Tanh(a))
    }

    pub fn one_minus_sq(&mut self, a: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let out = Matrix { rows: av.rows, cols: av.cols, data: av.data.iter().map(|v| 1.0 - v * v).collect() };
        self.push(out, Op::OneMinusSq(a))
    }

    fn zip(&mut self, a: Var, b: Var, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Option<Matrix> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.rows != bv.rows || av.cols != bv.cols {
            let d = format!("{}x{} vs {}x{}", av.rows, av.cols, bv.rows, bv.cols);
            self.shape_error(op, d);
            return None;
        }
        Some(Matrix { rows: av.rows, cols: av.cols, data: av.data.iter().zip(&bv.data).map(|(x, y)| f(*x, *y)).collect() })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip(a, b, "mul", |x, y| x * y).unwrap_or_default();
        self.push(out, Op::Mul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip(a, b, "add", |x, y| x + y).unwrap_or_default();
        self.push(out, Op::Add(a, b))
    }

    /// Slot vector `u_s = Σ c · stream[point][component]` as an `S × 1` column.
    pub fn combine(&mut self, streams: [Var; 3], slots: &'a [Slot]) -> Var {
        let mut out = Matrix::zeros(slots.len(), 1);
        for (s, slot) in slots.iter().enumerate() {
            let mut acc = 0.0;
            for &(st, comp, c) in &slot.terms {
                let m = &self.nodes[streams[st as usize].0].value;
                acc += c * m.data[slot.point * m.cols + comp as usize];
            }
            out.data[s] = acc;
        }
        self.push(out, Op::Combine { streams, slots })
    }

    pub fn matvec(&mut self, m: &'a Matrix, x: Var) -> Var {
        let xv = &self.nodes[x.0].value;
        if m.cols != xv.data.len() {
            let d = format!("{}x{} · {}", m.rows, m.cols, xv.data.len());
            self.shape_error("matvec", d);
            return self.push(Matrix::zeros(m.rows, 1), Op::MatVec { m, x });
        }
        let out = Matrix { rows: m.rows, cols: 1, data: m.matvec(&xv.data) };
        self.push(out, Op::MatVec { m, x })
    }

    /// `Σ w_i (x_i − target_i)²` as a `1 × 1` node.
    pub fn weighted_sum_squares(&mut self, x: Var, target: &'a [f64], weights: &'a [f64]) -> Var {
        let xv = &self.nodes[x.0].value.data;
        let s = xv.iter().zip(target).zip(weights).map(|((x, t), w)| w * (x - t) * (x - t)).sum();
        self.push(Matrix { rows: 1, cols: 1, data: vec![s] }, Op::WeightedSumSquares { x, target, weights })
    }

    /// Gradients of the scalar node `out` with respect to every node that
    /// requires them; entries for other nodes are empty.
    pub fn backward(&self, out: Var) -> Result<Vec<Matrix>, AutodiffError> {
        let n = self.nodes[out.0].value.data.len();
        self.backward_seeded(out, &vec![1.0; n])
    }

    /// Vector–Jacobian product: gradients of `Σ seed_i · out_i`.
    pub fn backward_seeded(&self, out: Var, seed: &[f64]) -> Result<Vec<Matrix>, AutodiffError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let mut grads: Vec<Matrix> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            grads.push(if n.requires_grad { Matrix::zeros(n.value.rows, n.value.cols) } else { Matrix::default() });
        }
        if !self.nodes[out.0].requires_grad {
            return Ok(grads);
        }
        if seed.len() != grads[out.0].data.len() {
            return Err(AutodiffError::Shape {
                op: "backward",
                detail: format!("seed has {} entries for a node of {}", seed.len(), grads[out.0].data.len()),
            });
        }
        grads[out.0].data.copy_from_slice(seed);
        for i in (0..=out.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let g = std::mem::take(&mut grads[i]);
            match &node.op {
                Op::Leaf => {}
                Op::Affine { a, b, bias } => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (n, k, m) = (av.rows, av.cols, bv.rows);
                    if self.req(*a) {
                        let ga = &mut grads[a.0];
                        for p in 0..n {
                            let grow = &g.data[p * m..(p + 1) * m];
                            let arow = &mut ga.data[p * k..(p + 1) * k];
                            for j in 0..m {
                                axpy(grow[j], &bv.data[j * k..(j + 1) * k], arow);
                            }
                        }
                    }
                    if self.req(*b) {
                        let gb = &mut grads[b.0];
                        for p in 0..n {
                            let grow = &g.data[p * m..(p + 1) * m];
                            let arow = &av.data[p * k..(p + 1) * k];
                            for j in 0..m {
                                axpy(grow[j], arow, &mut gb.data[j * k..(j + 1) * k]);
                            }
                        }
                    }
                    if let Some(bias) = bias {
                        if self.req(*bias) {
                            let gbias = &mut grads[bias.0];
                            for p in 0..n {
                                axpy(1.0, &g.data[p * m..(p + 1) * m], &mut gbias.data);
                            }
                        }
                    }
                }
                Op::Tanh(a) => {
                    if self.req(*a) {
                        let ga = &mut grads[a.0].data;
                        for ((gi, yi), gai) in g.data.iter().zip(&node.value.data).zip(ga.iter_mut()) {
                            *gai += gi * (1.0 - yi * yi);
                        }
                    }
                }
                Op::OneMinusSq(a) => {
                    if self.req(*a) {
                        let av = &self.nodes[a.0].value.data;
                        let ga = &mut grads[a.0].data;
                        for ((gi, ai), gai) in g.data.iter().zip(av).zip(ga.iter_mut()) {
                            *gai -= 2.0 * gi * ai;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value.data, &self.nodes[b.0].value.data);
                    if self.req(*a) {
                        let ga = &mut grads[a.0].data;
                        for ((gi, bi), gai) in g.data.iter().zip(bv).zip(ga.iter_mut()) {
                            *gai += gi * bi;
                        }
                    }
                    if self.req(*b) {
                        let gb = &mut grads[b.0].data;
                        for ((gi, ai), gbi) in g.data.iter().zip(av).zip(gb.iter_mut()) {
                            *gbi += gi * ai;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        if self.req(*v) {
                            axpy(1.0, &g.data, &mut grads[v.0].data);
                        }
                    }
                }
                Op::Combine { streams, slots } => {
                    for (s, slot) in slots.iter().enumerate() {
                        let gs = g.data[s];
                        if gs == 0.0 {
                            continue;
                        }
                        for &(st, comp, c) in &slot.terms {
                            let v = streams[st as usize];
                            if self.req(v) {
                                let cols = self.nodes[v.0].value.cols;
                                grads[v.0].data[slot.point * cols + comp as usize] += c * gs;
                            }
                        }
                    }
                }
                Op::MatVec { m, x } => {
                    if self.req(*x) {
                        let gx = &mut grads[x.0].data;
                        for r in 0..m.rows {
                            if g.data[r] != 0.0 {
                                axpy(g.data[r], m.row(r), gx);
                            }
                        }
                    }
                }
                Op::WeightedSumSquares { x, target, weights } => {
                    if self.req(*x) {
                        let xv = &self.nodes[x.0].value.data;
                        let gx = &mut grads[x.0].data;
                        for i in 0..xv.len() {
                            gx[i] += g.data[0] * 2.0 * weights[i] * (xv[i] - target[i]);
                        }
                    }
                }
            }
            grads[i] = g;
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.data.iter().all(|v| v.is_finite()) {
                return Err(AutodiffError::NonFinite { op: "backward", node: i });
            }
        }
        Ok(grads)
    }
}

/// Network outputs recorded on a tape: values and the two tangent streams,
/// each `P × n_u`, plus the parameter leaves in layer order.
pub struct RecordedNetwork {
    pub value: Var,
    pub tangents: [Var; 2],
    params: Vec<(Var, Var)>,
}

impl RecordedNetwork {
    pub fn streams(&self) -> [Var; 3] {
        [self.value, self.tangents[0], self.tangents[1]]
    }

    /// Collects parameter gradients into the flat layout of [`NetworkParams`].
    pub fn gradient(&self, params: &NetworkParams, grads: &[Matrix]) -> Vec<f64> {
        let mut out = vec![0.0; params.values.len()];
        for (l, (w, b)) in params.arch.layers().iter().zip(&self.params) {
            let gw = &grads[w.0].data;
            let gb = &grads[b.0].data;
            if !gw.is_empty() {
                out[l.weight..l.weight + gw.len()].copy_from_slice(gw);
            }
            if !gb.is_empty() {
                out[l.bias..l.bias + gb.len()].copy_from_slice(gb);
            }
        }
        out
    }
}

/// Records the network and its spatial tangents at `points`.
pub fn record_network<'a>(tape: &mut Tape<'a>, params: &NetworkParams, points: &[Vec2]) -> RecordedNetwork {
    let layers = params.arch.layers();
    let mut leaves = Vec::with_capacity(layers.len());
    for l in &layers {
        let w = tape.parameter(Matrix { rows: l.rows, cols: l.cols, data: params.weight(l).to_vec() });
        let b = tape.parameter(Matrix { rows: 1, cols: l.rows, data: params.bias(l).to_vec() });
        leaves.push((w, b));
    }
    let n = points.len();
    let x = tape.constant(Matrix { rows: n, cols: 2, data: points.iter().flat_map(|p| [p.x1, p.x2]).collect() });
    let mut unit = [Matrix::zeros(n, 2), Matrix::zeros(n, 2)];
    for (k, e) in unit.iter_mut().enumerate() {
        for p in 0..n {
            e.data[2 * p + k] = 1.0;
        }
    }
    let [e1, e2] = unit;
    let e = [tape.constant(e1), tape.constant(e2)];

    let (w0, b0) = leaves[0];
    let z = tape.affine(x, w0, Some(b0));
    let mut a = tape.tanh(z);
    let s = tape.one_minus_sq(a);
    let mut da = [0, 1].map(|k| {
        let dz = tape.affine(e[k], w0, None);
        tape.mul(s, dz)
    });
    for blk in 0..params.arch.blocks {
        let (w1, b1) = leaves[1 + 2 * blk];
        let (w2, b2) = leaves[2 + 2 * blk];
        let z1 = tape.affine(a, w1, Some(b1));
        let h = tape.tanh(z1);
        let s1 = tape.one_minus_sq(h);
        let dh = [0, 1].map(|k| {
            let dz1 = tape.affine(da[k], w1, None);
            tape.mul(s1, dz1)
        });
        let z2 = tape.affine(h, w2, Some(b2));
        let g = tape.tanh(z2);
        let s2 = tape.one_minus_sq(g);
        let next = tape.add(a, g);
        da = [0, 1].map(|k| {
            let dz2 = tape.affine(dh[k], w2, None);
            let dg = tape.mul(s2, dz2);
            tape.add(da[k], dg)
        });
        a = next;
    }
    let (wf, bf) = *leaves.last().expect("head layer");
    let value = tape.affine(a, wf, Some(bf));
    let tangents = [0, 1].map(|k| tape.affine(da[k], wf, None));
    RecordedNetwork { value, tangents, params: leaves }
}

/// Value and parameter gradient of a scalar loss built on the network
/// streams at `points`.
pub fn loss_gradient<'a, F>(params: &NetworkParams, points: &[Vec2], build: F) -> Result<(f64, Vec<f64>), AutodiffError>
where
    F: FnOnce(&mut Tape<'a>, &RecordedNetwork) -> Var,
{
    let mut tape = Tape::new();
    let net = record_network(&mut tape, params, points);
    let loss = build(&mut tape, &net);
    let grads = tape.backward(loss)?;
    Ok((tape.scalar(loss), net.gradient(params, &grads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Architecture;
    use rand::{Rng, SeedableRng};

    fn pts() -> Vec<Vec2> {
        vec![Vec2::new(0.1, 0.2), Vec2::new(-0.7, 0.4), Vec2::new(1.2, -0.9)]
    }

    #[test]
    fn recorded_streams_match_dual_evaluation() {
        let p = NetworkParams::init_xavier(Architecture::new(7, 2), 5);
        let mut tape = Tape::new();
        let net = record_network(&mut tape, &p, &pts());
        for (i, x) in pts().iter().enumerate() {
            let (v, jac) = p.forward_with_spatial_grad(*x);
            for k in 0..2 {
                let rv = tape.value(net.value).data[2 * i + k];
                assert!((rv - v[k]).abs() < 1e-14);
                for j in 0..2 {
                    let rt = tape.value(net.tangents[j]).data[2 * i + k];
                    assert!((rt - jac[k][j]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_network_has_zero_head_bias_gradient() {
        let p = NetworkParams::zeros(Architecture::new(5, 1));
        let slots: Vec<Slot> = vec![Slot { point: 0, terms: vec![(0, 0, 1.0)] }];
        let m = Matrix { rows: 1, cols: 1, data: vec![1.0] };
        let t = [0.0];
        let w = [1.0];
        let (l, g) = loss_gradient(&p, &[Vec2::new(0.3, 0.3)], |tape, net| {
            let u = tape.combine(net.streams(), &slots);
            let r = tape.matvec(&m, u);
            tape.weighted_sum_squares(r, &t, &w)
        })
        .unwrap();
        assert_eq!(l, 0.0);
        let head = *p.arch.layers().last().unwrap();
        assert_eq!(g[head.bias], 0.0);
    }

    #[test]
    fn value_only_loss_has_zero_gradient_wrt_nothing_else() {
        // loss on the tangent streams does not depend on the head bias
        let p = NetworkParams::init_xavier(Architecture::new(5, 1), 3);
        let slots = vec![Slot { point: 1, terms: vec![(1, 0, 1.0), (2, 0, -0.5)] }];
        let m = Matrix { rows: 1, cols: 1, data: vec![1.0] };
        let (t, w) = ([0.2], [1.0]);
        let (_, g) = loss_gradient(&p, &pts(), |tape, net| {
            let u = tape.combine(net.streams(), &slots);
            let r = tape.matvec(&m, u);
            tape.weighted_sum_squares(r, &t, &w)
        })
        .unwrap();
        let head = *p.arch.layers().last().unwrap();
        assert_eq!(g[head.bias], 0.0);
        assert!(g[head.weight..head.bias].iter().any(|v| *v != 0.0));
    }

    fn random_problem(rng: &mut impl Rng, n_pts: usize, n_u: usize) -> (Vec<Slot>, Matrix, Vec<f64>, Vec<f64>) {
        let slots: Vec<Slot> = (0..2 * n_pts)
            .map(|s| Slot {
                point: s % n_pts,
                terms: (0..3).map(|_| (rng.gen_range(0..3u8), rng.gen_range(0..n_u as u8), rng.gen_range(-1.0..1.0))).collect(),
            })
            .collect();
        let rows = 4;
        let m = Matrix { rows, cols: slots.len(), data: (0..rows * slots.len()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let t = (0..rows).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let w = (0..rows).map(|_| rng.gen_range(0.1..1.0)).collect();
        (slots, m, t, w)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for case in 0..5 {
            let n_u = 1 + case % 2;
            let p = NetworkParams::init_xavier(Architecture::new(6, n_u), case as u64);
            let (slots, m, t, w) = random_problem(&mut rng, 3, n_u);
            let loss = |q: &NetworkParams| {
                loss_gradient(q, &pts(), |tape, net| {
                    let u = tape.combine(net.streams(), &slots);
                    let r = tape.matvec(&m, u);
                    tape.weighted_sum_squares(r, &t, &w)
                })
                .unwrap()
            };
            let (_, g) = loss(&p);
            for _ in 0..10 {
                let i = rng.gen_range(0..p.values.len());
                let h = 1e-5;
                let mut a = p.clone();
                a.values[i] += h;
                let mut b = p.clone();
                b.values[i] -= h;
                let fd = (loss(&a).0 - loss(&b).0) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * fd.abs().max(1e-3), "{i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn non_finite_values_are_reported_with_op() {
        let mut tape = Tape::new();
        let a = tape.parameter(Matrix { rows: 1, cols: 1, data: vec![f64::MAX] });
        let b = tape.mul(a, a);
        let err = tape.backward(b).unwrap_err();
        assert_eq!(err, AutodiffError::NonFinite { op: "mul", node: 1 });
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut tape = Tape::new();
        let a = tape.parameter(Matrix::zeros(2, 3));
        let b = tape.parameter(Matrix::zeros(2, 2));
        let c = tape.add(a, b);
        assert!(matches!(tape.backward(c), Err(AutodiffError::Shape { op: "add", .. })));
    }
}
