use alloc::vec;
use alloc::vec::Vec;

use super::{AutodiffError, Tensor};
use crate::linalg::gemm;
use crate::math;

type Result<T> = core::result::Result<T, AutodiffError>;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MatMul(Var, Var),
    Transpose(Var),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize },
    Reshape(Var),
    SumAll(Var),
    SumAxis { input: Var, axis: usize },
    AddRow(Var, Var),
    MulRow(Var, Var),
    AddCol(Var, Var),
    MulCol(Var, Var),
    GatherRows { input: Var, indices: Vec<usize> },
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    Square(Var),
    Sqrt(Var),
    Clamp { input: Var, lo: f64, hi: f64 },
    Softmax { input: Var, axis: usize },
    CosineRows(Var, Var),
    LayerNormRows(Var),
    EigenReconstruct { vectors: Var, values: Var },
    BasisConv { hidden: Var, x: Var, weight: Var, bias: Var },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    /// Forward by-products reused by the backward rule.
    aux: Vec<f64>,
    grad: Option<Vec<f64>>,
}

/// A single-owner computation record.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backpropagated: bool,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::Shape {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
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

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad, Vec::new())
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass with respect to `v`, if `v` is
    /// differentiable and reachable from the loss.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Forget all gradients so that `backward` may run again.
    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.backpropagated = false;
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool, aux: Vec<f64>) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            aux,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn dims2(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        self.value(v).dims2(op)
    }

    // ---- elementwise ----

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(name, va, vb));
        }
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(out, op, rg, Vec::new()))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let va = self.value(a);
        let out = Tensor::from_parts(va.shape().to_vec(), va.data().iter().map(|&x| f(x)).collect());
        let rg = self.any_grad(&[a]);
        self.push(out, op, rg, Vec::new())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("div", a, b, |x, y| x / y, Op::Div(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x + c, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, math::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, math::sigmoid, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, math::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, math::ln, Op::Log(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, math::sqrt, Op::Sqrt(a))
    }

    /// Gradient passes only strictly inside `(lo, hi)`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, |x| x.clamp(lo, hi), Op::Clamp { input: a, lo, hi })
    }

    // ---- shape ----

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims2(a, "matmul")?;
        let (k2, n) = self.dims2(b, "matmul")?;
        if k != k2 {
            return Err(shape_err("matmul", self.value(a), self.value(b)));
        }
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            1.0,
            (self.value(a).data(), k as isize, 1),
            (self.value(b).data(), n as isize, 1),
            0.0,
            &mut out,
        );
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), rg, Vec::new()))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims2(a, "transpose")?;
        let src = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(Tensor::from_parts(vec![c, r], out), Op::Transpose(a), rg, Vec::new()))
    }

    /// Join rank-2 tensors along `axis` (0 stacks rows, 1 stacks columns).
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = *inputs.first().ok_or(AutodiffError::Empty("concat"))?;
        let (r0, c0) = self.dims2(first, "concat")?;
        if axis > 1 {
            return Err(AutodiffError::Axis {
                op: "concat",
                axis,
                shape: self.shape(first).to_vec(),
            });
        }
        let mut total = 0;
        for &v in inputs {
            let (r, c) = self.dims2(v, "concat")?;
            let ok = if axis == 0 { c == c0 } else { r == r0 };
            if !ok {
                return Err(shape_err("concat", self.value(first), self.value(v)));
            }
            total += if axis == 0 { r } else { c };
        }
        let (rows, cols) = if axis == 0 { (total, c0) } else { (r0, total) };
        let mut out = Vec::with_capacity(rows * cols);
        if axis == 0 {
            for &v in inputs {
                out.extend_from_slice(self.value(v).data());
            }
        } else {
            for i in 0..r0 {
                for &v in inputs {
                    let t = self.value(v);
                    let c = t.shape()[1];
                    out.extend_from_slice(&t.data()[i * c..(i + 1) * c]);
                }
            }
        }
        let rg = self.any_grad(inputs);
        Ok(self.push(
            Tensor::from_parts(vec![rows, cols], out),
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            rg,
            Vec::new(),
        ))
    }

    /// `len` consecutive rows (`axis` 0) or columns (`axis` 1) from `start`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.dims2(a, "slice")?;
        let extent = match axis {
            0 => r,
            1 => c,
            _ => {
                return Err(AutodiffError::Axis {
                    op: "slice",
                    axis,
                    shape: self.shape(a).to_vec(),
                })
            }
        };
        if start + len > extent {
            return Err(AutodiffError::Range {
                op: "slice",
                start,
                end: start + len,
                extent,
            });
        }
        let src = self.value(a).data();
        let (shape, out) = if axis == 0 {
            (vec![len, c], src[start * c..(start + len) * c].to_vec())
        } else {
            let mut out = Vec::with_capacity(r * len);
            for i in 0..r {
                out.extend_from_slice(&src[i * c + start..i * c + start + len]);
            }
            (vec![r, len], out)
        };
        let rg = self.any_grad(&[a]);
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Slice { input: a, axis, start },
            rg,
            Vec::new(),
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let n: usize = shape.iter().product();
        if n != self.value(a).numel() {
            return Err(AutodiffError::Shape {
                op: "reshape",
                left: self.shape(a).to_vec(),
                right: shape.to_vec(),
            });
        }
        let out = Tensor::from_parts(shape.to_vec(), self.value(a).data().to_vec());
        let rg = self.any_grad(&[a]);
        Ok(self.push(out, Op::Reshape(a), rg, Vec::new()))
    }

    /// Sum of every element as a `1 × 1` tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let rg = self.any_grad(&[a]);
        self.push(Tensor::scalar(s), Op::SumAll(a), rg, Vec::new())
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).numel();
        if n == 0 {
            return Err(AutodiffError::Empty("mean"));
        }
        let s = self.sum(a);
        Ok(self.scale(s, 1.0 / n as f64))
    }

    /// Axis 0 sums each column into `1 × c`; axis 1 sums each row into `r × 1`.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let (r, c) = self.dims2(a, "sum_axis")?;
        let src = self.value(a).data();
        let (shape, out) = match axis {
            0 => {
                let mut out = vec![0.0; c];
                for i in 0..r {
                    for (o, &x) in out.iter_mut().zip(&src[i * c..(i + 1) * c]) {
                        *o += x;
                    }
                }
                (vec![1, c], out)
            }
            1 => (vec![r, 1], src.chunks(c.max(1)).map(|row| row.iter().sum()).take(r).collect()),
            _ => {
                return Err(AutodiffError::Axis {
                    op: "sum_axis",
                    axis,
                    shape: self.shape(a).to_vec(),
                })
            }
        };
        let rg = self.any_grad(&[a]);
        Ok(self.push(Tensor::from_parts(shape, out), Op::SumAxis { input: a, axis }, rg, Vec::new()))
    }

    pub fn mean_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let (r, c) = self.dims2(a, "mean_axis")?;
        let n = if axis == 0 { r } else { c };
        if n == 0 {
            return Err(AutodiffError::Empty("mean_axis"));
        }
        let s = self.sum_axis(a, axis)?;
        Ok(self.scale(s, 1.0 / n as f64))
    }

    fn broadcast(
        &mut self,
        name: &'static str,
        a: Var,
        other: Var,
        by_row: bool,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (r, c) = self.dims2(a, name)?;
        let (orr, oc) = self.dims2(other, name)?;
        let ok = if by_row { orr == 1 && oc == c } else { orr == r && oc == 1 };
        if !ok {
            return Err(shape_err(name, self.value(a), self.value(other)));
        }
        let src = self.value(a).data();
        let o = self.value(other).data();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let y = if by_row { o[j] } else { o[i] };
                out.push(f(src[i * c + j], y));
            }
        }
        let rg = self.any_grad(&[a, other]);
        Ok(self.push(Tensor::from_parts(vec![r, c], out), op, rg, Vec::new()))
    }

    /// `a` (`r × c`) plus a `1 × c` row added to every row.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.broadcast("add_row", a, row, true, |x, y| x + y, Op::AddRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.broadcast("mul_row", a, row, true, |x, y| x * y, Op::MulRow(a, row))
    }

    /// `a` (`r × c`) plus an `r × 1` column added to every column.
    pub fn add_col(&mut self, a: Var, col: Var) -> Result<Var> {
        self.broadcast("add_col", a, col, false, |x, y| x + y, Op::AddCol(a, col))
    }

    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        self.broadcast("mul_col", a, col, false, |x, y| x * y, Op::MulCol(a, col))
    }

    /// Rows of `a` in the order of `indices` (repeats allowed).
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let (r, c) = self.dims2(a, "gather_rows")?;
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            if i >= r {
                return Err(AutodiffError::Index {
                    op: "gather_rows",
                    index: i,
                    extent: r,
                });
            }
            out.extend_from_slice(&src[i * c..(i + 1) * c]);
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(
            Tensor::from_parts(vec![indices.len(), c], out),
            Op::GatherRows {
                input: a,
                indices: indices.to_vec(),
            },
            rg,
            Vec::new(),
        ))
    }

    // ---- reductions with structure ----

    /// Softmax over `axis` (1: within each row, 0: within each column).
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let (r, c) = self.dims2(a, "softmax")?;
        if axis > 1 {
            return Err(AutodiffError::Axis {
                op: "softmax",
                axis,
                shape: self.shape(a).to_vec(),
            });
        }
        let mut out = self.value(a).data().to_vec();
        for_each_lane(r, c, axis, |idx| {
            let max = idx.clone().map(|k| out[k]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in idx.clone() {
                out[k] = math::exp(out[k] - max);
                total += out[k];
            }
            for k in idx {
                out[k] /= total;
            }
        });
        let rg = self.any_grad(&[a]);
        Ok(self.push(Tensor::from_parts(vec![r, c], out), Op::Softmax { input: a, axis }, rg, Vec::new()))
    }

    /// Row-wise cosine similarity of two `r × c` tensors, as `r × 1`.
    pub fn cosine_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (r, c) = self.dims2(a, "cosine_rows")?;
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("cosine_rows", self.value(a), self.value(b)));
        }
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(r);
        let mut norms = Vec::with_capacity(2 * r);
        for i in 0..r {
            let x = &va[i * c..(i + 1) * c];
            let y = &vb[i * c..(i + 1) * c];
            let (nx, ny) = (crate::linalg::norm2(x), crate::linalg::norm2(y));
            if nx == 0.0 || ny == 0.0 {
                return Err(AutodiffError::ZeroVector {
                    op: "cosine_rows",
                    row: i,
                });
            }
            out.push(crate::linalg::dot(x, y) / (nx * ny));
            norms.push(nx);
            norms.push(ny);
        }
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::from_parts(vec![r, 1], out), Op::CosineRows(a, b), rg, norms))
    }

    /// Normalize each row to zero mean and unit (population) variance.
    pub fn layer_norm_rows(&mut self, a: Var, eps: f64) -> Result<Var> {
        let (r, c) = self.dims2(a, "layer_norm_rows")?;
        if c == 0 {
            return Err(AutodiffError::Empty("layer_norm_rows"));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(r * c);
        let mut inv_std = Vec::with_capacity(r);
        for row in src.chunks(c) {
            let (mean, var) = math::mean_var(row);
            let s = 1.0 / math::sqrt(var + eps);
            out.extend(row.iter().map(|&x| (x - mean) * s));
            inv_std.push(s);
        }
        let rg = self.any_grad(&[a]);
        Ok(self.push(Tensor::from_parts(vec![r, c], out), Op::LayerNormRows(a), rg, inv_std))
    }

    // ---- fused spectral kernels ----

    /// For eigenvectors `vectors` (`N × K`) and one filtered spectrum per row
    /// of `values` (`M × K`), returns `M × N²` whose row `m` is the row-major
    /// flattening of `U diag(values_m) Uᵀ`.
    pub fn eigen_reconstruct(&mut self, vectors: Var, values: Var) -> Result<Var> {
        let (n, k) = self.dims2(vectors, "eigen_reconstruct")?;
        let (m, k2) = self.dims2(values, "eigen_reconstruct")?;
        if k != k2 {
            return Err(shape_err("eigen_reconstruct", self.value(vectors), self.value(values)));
        }
        let u = self.value(vectors).data();
        let lam = self.value(values).data();
        let mut out = vec![0.0; m * n * n];
        let mut scaled = vec![0.0; n * k];
        for h in 0..m {
            for i in 0..n {
                for j in 0..k {
                    scaled[i * k + j] = u[i * k + j] * lam[h * k + j];
                }
            }
            gemm(
                n,
                k,
                n,
                1.0,
                (&scaled, k as isize, 1),
                (u, 1, k as isize),
                0.0,
                &mut out[h * n * n..(h + 1) * n * n],
            );
        }
        let rg = self.any_grad(&[vectors, values]);
        Ok(self.push(
            Tensor::from_parts(vec![m, n * n], out),
            Op::EigenReconstruct { vectors, values },
            rg,
            Vec::new(),
        ))
    }

    /// Graph convolution with entrywise-FFN bases, without forming them.
    ///
    /// `hidden` is `H × N²` (row `h` is a flattened `N × N` matrix `A_h`),
    /// `x` is `N × C`, `weight` is `H × C` and `bias` is `1 × C`. Column `c`
    /// of the result is `(Σ_h weight[h,c] A_h + bias[c] 𝟙𝟙ᵀ) x[:,c]`.
    pub fn basis_conv(&mut self, hidden: Var, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let (hc, nn) = self.dims2(hidden, "basis_conv")?;
        let (n, c) = self.dims2(x, "basis_conv")?;
        if nn != n * n {
            return Err(shape_err("basis_conv", self.value(hidden), self.value(x)));
        }
        if self.shape(weight) != [hc, c] {
            return Err(shape_err("basis_conv", self.value(weight), self.value(x)));
        }
        if self.shape(bias) != [1, c] {
            return Err(shape_err("basis_conv", self.value(bias), self.value(x)));
        }
        let hv = self.value(hidden).data();
        let xv = self.value(x).data();
        let w = self.value(weight).data();
        let b = self.value(bias).data();
        // aux = [P_0 | … | P_{H−1} | colsum(x)], P_h = A_h x.
        let mut aux = vec![0.0; hc * n * c + c];
        for h in 0..hc {
            gemm(
                n,
                n,
                c,
                1.0,
                (&hv[h * nn..(h + 1) * nn], n as isize, 1),
                (xv, c as isize, 1),
                0.0,
                &mut aux[h * n * c..(h + 1) * n * c],
            );
        }
        let (ps, colsum) = aux.split_at_mut(hc * n * c);
        for i in 0..n {
            for j in 0..c {
                colsum[j] += xv[i * c + j];
            }
        }
        let mut out = vec![0.0; n * c];
        for (i, o) in out.chunks_mut(c).enumerate() {
            for j in 0..c {
                let mut s = b[j] * colsum[j];
                for h in 0..hc {
                    s += w[h * c + j] * ps[h * n * c + i * c + j];
                }
                o[j] = s;
            }
        }
        let rg = self.any_grad(&[hidden, x, weight, bias]);
        Ok(self.push(
            Tensor::from_parts(vec![n, c], out),
            Op::BasisConv {
                hidden,
                x,
                weight,
                bias,
            },
            rg,
            aux,
        ))
    }

    // ---- backward ----

    /// Reverse sweep from a one-element `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backpropagated {
            return Err(AutodiffError::AlreadyBackpropagated);
        }
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(AutodiffError::NotScalar {
                shape: lv.shape().to_vec(),
            });
        }
        self.backpropagated = true;
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let nodes = &self.nodes;
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if nodes[i].requires_grad {
                backprop_node(nodes, i, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        for (node, g) in self.nodes.iter_mut().zip(grads) {
            if node.requires_grad {
                node.grad = g;
            }
        }
        Ok(())
    }
}

/// Visit each softmax lane of an `r × c` array as an index iterator.
fn for_each_lane(
    r: usize,
    c: usize,
    axis: usize,
    mut f: impl FnMut(core::iter::StepBy<core::ops::Range<usize>>),
) {
    if axis == 1 {
        for i in 0..r {
            f((i * c..(i + 1) * c).step_by(1));
        }
    } else {
        for j in 0..c {
            f((j..r * c).step_by(c.max(1)));
        }
    }
}

fn slot<'g>(nodes: &[Node], grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
    if !nodes[v.0].requires_grad {
        return None;
    }
    let n = nodes[v.0].value.numel();
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; n]))
}

fn acc_map(
    nodes: &[Node],
    grads: &mut [Option<Vec<f64>>],
    v: Var,
    g: &[f64],
    f: impl Fn(usize, f64) -> f64,
) {
    if let Some(s) = slot(nodes, grads, v) {
        for (k, (d, &gk)) in s.iter_mut().zip(g).enumerate() {
            *d += f(k, gk);
        }
    }
}

fn backprop_node(nodes: &[Node], i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    let node = &nodes[i];
    let y = node.value.data();
    let val = |v: Var| nodes[v.0].value.data();
    match &node.op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            acc_map(nodes, grads, *a, g, |_, gk| gk);
            acc_map(nodes, grads, *b, g, |_, gk| gk);
        }
        Op::Sub(a, b) => {
            acc_map(nodes, grads, *a, g, |_, gk| gk);
            acc_map(nodes, grads, *b, g, |_, gk| -gk);
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            acc_map(nodes, grads, *a, g, |k, gk| gk * vb[k]);
            acc_map(nodes, grads, *b, g, |k, gk| gk * va[k]);
        }
        Op::Div(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            acc_map(nodes, grads, *a, g, |k, gk| gk / vb[k]);
            acc_map(nodes, grads, *b, g, |k, gk| -gk * va[k] / (vb[k] * vb[k]));
        }
        Op::Scale(a, c) => acc_map(nodes, grads, *a, g, |_, gk| c * gk),
        Op::AddScalar(a) | Op::Reshape(a) => acc_map(nodes, grads, *a, g, |_, gk| gk),
        Op::Relu(a) => {
            let x = val(*a);
            acc_map(nodes, grads, *a, g, |k, gk| if x[k] > 0.0 { gk } else { 0.0 });
        }
        Op::Tanh(a) => acc_map(nodes, grads, *a, g, |k, gk| gk * (1.0 - y[k] * y[k])),
        Op::Sigmoid(a) => acc_map(nodes, grads, *a, g, |k, gk| gk * y[k] * (1.0 - y[k])),
        Op::Exp(a) => acc_map(nodes, grads, *a, g, |k, gk| gk * y[k]),
        Op::Log(a) => {
            let x = val(*a);
            acc_map(nodes, grads, *a, g, |k, gk| gk / x[k]);
        }
        Op::Square(a) => {
            let x = val(*a);
            acc_map(nodes, grads, *a, g, |k, gk| 2.0 * x[k] * gk);
        }
        Op::Sqrt(a) => acc_map(nodes, grads, *a, g, |k, gk| gk / (2.0 * y[k])),
        Op::Clamp { input, lo, hi } => {
            let x = val(*input);
            acc_map(nodes, grads, *input, g, |k, gk| {
                if x[k] > *lo && x[k] < *hi {
                    gk
                } else {
                    0.0
                }
            });
        }
        Op::MatMul(a, b) => {
            let sa = nodes[a.0].value.shape();
            let (m, k) = (sa[0], sa[1]);
            let n = nodes[b.0].value.shape()[1];
            let (va, vb) = (val(*a), val(*b));
            if let Some(s) = slot(nodes, grads, *a) {
                // dA = G Bᵀ
                gemm(m, n, k, 1.0, (g, n as isize, 1), (vb, 1, n as isize), 1.0, s);
            }
            if let Some(s) = slot(nodes, grads, *b) {
                // dB = Aᵀ G
                gemm(k, m, n, 1.0, (va, 1, k as isize), (g, n as isize, 1), 1.0, s);
            }
        }
        Op::Transpose(a) => {
            let s = node.value.shape();
            let (c, r) = (s[0], s[1]);
            if let Some(d) = slot(nodes, grads, *a) {
                for i in 0..r {
                    for j in 0..c {
                        d[i * c + j] += g[j * r + i];
                    }
                }
            }
        }
        Op::Concat { inputs, axis } => {
            let cols = node.value.shape()[1];
            let mut offset = 0;
            for &v in inputs {
                let s = nodes[v.0].value.shape();
                let (r, c) = (s[0], s[1]);
                if let Some(d) = slot(nodes, grads, v) {
                    if *axis == 0 {
                        for (dk, gk) in d.iter_mut().zip(&g[offset * cols..(offset + r) * cols]) {
                            *dk += gk;
                        }
                    } else {
                        for i in 0..r {
                            for j in 0..c {
                                d[i * c + j] += g[i * cols + offset + j];
                            }
                        }
                    }
                }
                offset += if *axis == 0 { r } else { c };
            }
        }
        Op::Slice { input, axis, start } => {
            let c = nodes[input.0].value.shape()[1];
            let s = node.value.shape();
            let (r, len) = (s[0], s[1]);
            if let Some(d) = slot(nodes, grads, *input) {
                if *axis == 0 {
                    for (dk, gk) in d[start * c..].iter_mut().zip(g) {
                        *dk += gk;
                    }
                } else {
                    for i in 0..r {
                        for j in 0..len {
                            d[i * c + start + j] += g[i * len + j];
                        }
                    }
                }
            }
        }
        Op::SumAll(a) => acc_map(nodes, grads, *a, &vec![g[0]; nodes[a.0].value.numel()], |_, gk| gk),
        Op::SumAxis { input, axis } => {
            let c = nodes[input.0].value.shape()[1];
            if let Some(d) = slot(nodes, grads, *input) {
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk += if *axis == 0 { g[k % c] } else { g[k / c] };
                }
            }
        }
        Op::AddRow(a, row) | Op::AddCol(a, row) => {
            let by_row = matches!(node.op, Op::AddRow(..));
            let c = node.value.shape()[1];
            acc_map(nodes, grads, *a, g, |_, gk| gk);
            if let Some(d) = slot(nodes, grads, *row) {
                for (k, gk) in g.iter().enumerate() {
                    d[if by_row { k % c } else { k / c }] += gk;
                }
            }
        }
        Op::MulRow(a, other) | Op::MulCol(a, other) => {
            let by_row = matches!(node.op, Op::MulRow(..));
            let c = node.value.shape()[1];
            let (va, vo) = (val(*a), val(*other));
            let pick = |k: usize| if by_row { k % c } else { k / c };
            acc_map(nodes, grads, *a, g, |k, gk| gk * vo[pick(k)]);
            if let Some(d) = slot(nodes, grads, *other) {
                for (k, gk) in g.iter().enumerate() {
                    d[pick(k)] += gk * va[k];
                }
            }
        }
        Op::GatherRows { input, indices } => {
            let c = node.value.shape()[1];
            if let Some(d) = slot(nodes, grads, *input) {
                for (r, &src) in indices.iter().enumerate() {
                    for j in 0..c {
                        d[src * c + j] += g[r * c + j];
                    }
                }
            }
        }
        Op::Softmax { input, axis } => {
            let s = node.value.shape();
            let (r, c) = (s[0], s[1]);
            if let Some(d) = slot(nodes, grads, *input) {
                for_each_lane(r, c, *axis, |idx| {
                    let inner: f64 = idx.clone().map(|k| g[k] * y[k]).sum();
                    for k in idx {
                        d[k] += y[k] * (g[k] - inner);
                    }
                });
            }
        }
        Op::CosineRows(a, b) => {
            let c = nodes[a.0].value.shape()[1];
            let (va, vb) = (val(*a), val(*b));
            let norms = &node.aux;
            for (target, this, other, which) in [(*a, va, vb, 0), (*b, vb, va, 1)] {
                if let Some(d) = slot(nodes, grads, target) {
                    for (row, gk) in g.iter().enumerate() {
                        let (nt, no) = (norms[2 * row + which], norms[2 * row + 1 - which]);
                        let cos = y[row];
                        for j in 0..c {
                            let k = row * c + j;
                            d[k] += gk * (other[k] / (nt * no) - cos * this[k] / (nt * nt));
                        }
                    }
                }
            }
        }
        Op::LayerNormRows(a) => {
            let c = node.value.shape()[1];
            if let Some(d) = slot(nodes, grads, *a) {
                for (row, &s) in node.aux.iter().enumerate() {
                    let gr = &g[row * c..(row + 1) * c];
                    let yr = &y[row * c..(row + 1) * c];
                    let mg = gr.iter().sum::<f64>() / c as f64;
                    let mgy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / c as f64;
                    for j in 0..c {
                        d[row * c + j] += s * (gr[j] - mg - yr[j] * mgy);
                    }
                }
            }
        }
        Op::EigenReconstruct { vectors, values } => {
            let s = nodes[vectors.0].value.shape();
            let (n, k) = (s[0], s[1]);
            let m = nodes[values.0].value.shape()[0];
            let u = val(*vectors);
            let lam = val(*values);
            let want_u = nodes[vectors.0].requires_grad;
            let mut gu = vec![0.0; n * k];
            let mut gtu = vec![0.0; n * k];
            for h in 0..m {
                let gm = &g[h * n * n..(h + 1) * n * n];
                gemm(n, n, k, 1.0, (gm, n as isize, 1), (u, k as isize, 1), 0.0, &mut gu);
                if let Some(d) = slot(nodes, grads, *values) {
                    for j in 0..k {
                        let mut acc = 0.0;
                        for r in 0..n {
                            acc += u[r * k + j] * gu[r * k + j];
                        }
                        d[h * k + j] += acc;
                    }
                }
                if want_u {
                    gemm(n, n, k, 1.0, (gm, 1, n as isize), (u, k as isize, 1), 0.0, &mut gtu);
                    if let Some(d) = slot(nodes, grads, *vectors) {
                        for r in 0..n {
                            for j in 0..k {
                                d[r * k + j] += (gu[r * k + j] + gtu[r * k + j]) * lam[h * k + j];
                            }
                        }
                    }
                }
            }
        }
        Op::BasisConv {
            hidden,
            x,
            weight,
            bias,
        } => {
            let hs = nodes[hidden.0].value.shape();
            let (hc, nn) = (hs[0], hs[1]);
            let xs = nodes[x.0].value.shape();
            let (n, c) = (xs[0], xs[1]);
            let (hv, xv, w, b) = (val(*hidden), val(*x), val(*weight), val(*bias));
            let (ps, colsum) = node.aux.split_at(hc * n * c);
            let mut gsum = vec![0.0; c];
            for row in g.chunks(c) {
                for (s, gk) in gsum.iter_mut().zip(row) {
                    *s += gk;
                }
            }
            if let Some(d) = slot(nodes, grads, *weight) {
                for h in 0..hc {
                    for (k, gk) in g.iter().enumerate() {
                        d[h * c + k % c] += gk * ps[h * n * c + k];
                    }
                }
            }
            if let Some(d) = slot(nodes, grads, *bias) {
                for j in 0..c {
                    d[j] += colsum[j] * gsum[j];
                }
            }
            let want_x = nodes[x.0].requires_grad;
            let want_h = nodes[hidden.0].requires_grad;
            if want_x || want_h {
                let mut q = vec![0.0; n * c];
                for h in 0..hc {
                    for (k, qk) in q.iter_mut().enumerate() {
                        *qk = g[k] * w[h * c + k % c];
                    }
                    if let Some(d) = slot(nodes, grads, *x) {
                        // dX += A_hᵀ Q
                        gemm(n, n, c, 1.0, (&hv[h * nn..(h + 1) * nn], 1, n as isize), (&q, c as isize, 1), 1.0, d);
                    }
                    if let Some(d) = slot(nodes, grads, *hidden) {
                        // dA_h += Q Xᵀ
                        gemm(n, c, n, 1.0, (&q, c as isize, 1), (xv, 1, c as isize), 1.0, &mut d[h * nn..(h + 1) * nn]);
                    }
                }
                if let Some(d) = slot(nodes, grads, *x) {
                    for (k, dk) in d.iter_mut().enumerate() {
                        *dk += b[k % c] * gsum[k % c];
                    }
                }
            }
        }
    }
}
