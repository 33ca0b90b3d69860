//! Reverse-mode differentiation over whole matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! borrowed, not copied; [`Tape::backward`] walks the record in reverse and
//! returns the gradient of a scalar output for every registered parameter.

use std::borrow::Cow;
use std::collections::BTreeMap;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Index of a parameter matrix inside its owning bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Backward rule of a fused op: (upstream gradient, parent values) to one
/// optional gradient per parent.
pub type FusedBackward<'a> = Box<dyn Fn(&Matrix, &[&Matrix]) -> Vec<Option<Matrix>> + 'a>;

enum Op<'a> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Matrix,
        inv_std: Vec<f64>,
    },
    Normalize {
        x: Var,
        gamma: Var,
        beta: Var,
        inv_std: Vec<f64>,
        xhat: Matrix,
    },
    SumSquares(Var),
    RowNormalize {
        x: Var,
        norms: Vec<f64>,
    },
    WeightedSum(Vec<(Var, f64)>),
    VStack(Vec<Var>),
    Fused {
        parents: Vec<Var>,
        backward: FusedBackward<'a>,
    },
}

struct Node<'a> {
    value: Cow<'a, Matrix>,
    op: Op<'a>,
}

/// Per-column statistics of one train-mode batch-norm application.
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Rows with L2 norm at or below this are treated as zero vectors.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Cow<'a, Matrix>, op: Op<'a>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(Cow::Owned(m), Op::Constant)
    }

    pub fn constant_ref(&mut self, m: &'a Matrix) -> Var {
        self.push(Cow::Borrowed(m), Op::Constant)
    }

    pub fn param(&mut self, id: ParamId, m: &'a Matrix) -> Var {
        self.push(Cow::Borrowed(m), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Cow::Owned(v), Op::MatMul(a, b)))
    }

    /// `a * b^T`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul_nt(self.value(b))?;
        Ok(self.push(Cow::Owned(v), Op::MatMulNT(a, b)))
    }

    /// Adds a 1 x cols row vector to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (xm, rm) = (self.value(x), self.value(row));
        if rm.rows() != 1 || rm.cols() != xm.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + {:?}", xm.shape(), rm.shape()),
            ));
        }
        let mut out = xm.clone();
        let r = rm.data().to_vec();
        for i in 0..out.rows() {
            for (o, b) in out.row_mut(i).iter_mut().zip(&r) {
                *o += b;
            }
        }
        Ok(self.push(Cow::Owned(out), Op::AddRow(x, row)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(Cow::Owned(v), Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(Cow::Owned(v), Op::Sub(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).scale(s);
        self.push(Cow::Owned(v), Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(Cow::Owned(v), Op::Relu(a))
    }

    /// Train-mode batch normalization using the batch's own (biased)
    /// statistics. A single-row batch has zero variance, so its output is
    /// `beta` (the variance floor is `eps`).
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let xm = self.value(x);
        let (n, d) = xm.shape();
        if n == 0 {
            return Err(Error::shape("batch_norm", "empty batch"));
        }
        let mean: Vec<f64> = xm.col_sums().data().iter().map(|s| s / n as f64).collect();
        let mut var = vec![0.0; d];
        for r in xm.row_iter() {
            for j in 0..d {
                let c = r[j] - mean[j];
                var[j] += c * c;
            }
        }
        var.iter_mut().for_each(|v| *v /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let xhat = Matrix::from_fn(n, d, |i, j| (xm.get(i, j) - mean[j]) * inv_std[j]);
        let out = self.affine_cols(&xhat, gamma, beta)?;
        let stats = BatchStats { mean, var };
        let v = self.push(
            Cow::Owned(out),
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        );
        Ok((v, stats))
    }

    /// Eval-mode batch normalization with frozen statistics; an affine map
    /// of each column, no coupling between rows.
    pub fn normalize_frozen(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let xm = self.value(x);
        let (n, d) = xm.shape();
        if mean.len() != d || var.len() != d {
            return Err(Error::shape("normalize_frozen", "stat length"));
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let xhat = Matrix::from_fn(n, d, |i, j| (xm.get(i, j) - mean[j]) * inv_std[j]);
        let out = self.affine_cols(&xhat, gamma, beta)?;
        Ok(self.push(
            Cow::Owned(out),
            Op::Normalize {
                x,
                gamma,
                beta,
                inv_std,
                xhat,
            },
        ))
    }

    fn affine_cols(&self, xhat: &Matrix, gamma: Var, beta: Var) -> Result<Matrix> {
        let (g, b) = (self.value(gamma), self.value(beta));
        if g.shape() != (1, xhat.cols()) || b.shape() != (1, xhat.cols()) {
            return Err(Error::shape("batch_norm", "gamma/beta shape"));
        }
        let (g, b) = (g.data(), b.data());
        Ok(Matrix::from_fn(xhat.rows(), xhat.cols(), |i, j| {
            xhat.get(i, j) * g[j] + b[j]
        }))
    }

    /// Scalar sum of squared entries.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let v = self.value(a).frobenius_sq();
        self.push(Cow::Owned(Matrix::scalar(v)), Op::SumSquares(a))
    }

    /// Scales each row to unit L2 norm; rows with norm <= [`ZERO_NORM`]
    /// become zero rows and pass no gradient.
    pub fn row_normalize(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let norms: Vec<f64> = m
            .row_iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let out = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            if norms[i] > ZERO_NORM {
                m.get(i, j) / norms[i]
            } else {
                0.0
            }
        });
        self.push(Cow::Owned(out), Op::RowNormalize { x: a, norms })
    }

    /// Weighted sum of scalar vars.
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let mut total = 0.0;
        for &(v, w) in terms {
            let m = self.value(v);
            if m.len() != 1 {
                return Err(Error::shape("weighted_sum", "term is not scalar"));
            }
            total += w * m.item();
        }
        Ok(self.push(
            Cow::Owned(Matrix::scalar(total)),
            Op::WeightedSum(terms.to_vec()),
        ))
    }

    /// Row-concatenation of matrices with equal column counts.
    pub fn vstack(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Matrix::vstack(&mats)?;
        Ok(self.push(Cow::Owned(v), Op::VStack(parts.to_vec())))
    }

    /// Records an op whose value was computed by the caller together with
    /// its backward rule.
    pub fn fused(&mut self, value: Matrix, parents: Vec<Var>, backward: FusedBackward<'a>) -> Var {
        self.push(Cow::Owned(value), Op::Fused { parents, backward })
    }

    /// Gradient of the scalar `output` with respect to every parameter
    /// registered on this tape.
    pub fn backward(&self, output: Var) -> Result<BTreeMap<ParamId, Matrix>> {
        if output.0 >= self.nodes.len() {
            return Err(Error::Invalid("backward: no recorded forward pass".into()));
        }
        if self.value(output).len() != 1 {
            return Err(Error::shape("backward", "output is not a scalar"));
        }
        let mut grads: Vec<Option<Matrix>> = (0..=output.0).map(|_| None).collect();
        grads[output.0] = Some(Matrix::scalar(1.0));
        let mut params = BTreeMap::new();

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let acc = |v: Var, d: Matrix, grads: &mut Vec<Option<Matrix>>| {
                match &mut grads[v.0] {
                    Some(existing) => existing
                        .data_mut()
                        .iter_mut()
                        .zip(d.data())
                        .for_each(|(e, x)| *e += x),
                    slot @ None => *slot = Some(d),
                }
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    match params.get_mut(id) {
                        Some(existing) => {
                            let existing: &mut Matrix = existing;
                            existing.axpy(1.0, &g)?;
                        }
                        None => {
                            params.insert(*id, g);
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    acc(*a, g.matmul_nt(self.value(*b))?, &mut grads);
                    acc(*b, self.value(*a).matmul_tn(&g)?, &mut grads);
                }
                Op::MatMulNT(a, b) => {
                    // y = a b^T: da = g b, db = g^T a
                    acc(*a, g.matmul(self.value(*b))?, &mut grads);
                    acc(*b, g.matmul_tn(self.value(*a))?, &mut grads);
                }
                Op::AddRow(x, row) => {
                    acc(*row, g.col_sums(), &mut grads);
                    acc(*x, g, &mut grads);
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g, &mut grads);
                }
                Op::Sub(a, b) => {
                    acc(*b, g.scale(-1.0), &mut grads);
                    acc(*a, g, &mut grads);
                }
                Op::Scale(a, s) => acc(*a, g.scale(*s), &mut grads),
                Op::Relu(a) => {
                    let d = g.zip_map(self.value(*a), |gi, x| if x > 0.0 { gi } else { 0.0 })?;
                    acc(*a, d, &mut grads);
                }
                Op::BatchNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let (n, d) = xhat.shape();
                    let gam = self.value(*gamma).data();
                    let mut dgamma = vec![0.0; d];
                    let mut dbeta = vec![0.0; d];
                    for i in 0..n {
                        for j in 0..d {
                            dgamma[j] += g.get(i, j) * xhat.get(i, j);
                            dbeta[j] += g.get(i, j);
                        }
                    }
                    let nf = n as f64;
                    let dx = Matrix::from_fn(n, d, |i, j| {
                        gam[j] * inv_std[j] / nf
                            * (nf * g.get(i, j) - dbeta[j] - xhat.get(i, j) * dgamma[j])
                    });
                    acc(*x, dx, &mut grads);
                    acc(*gamma, Matrix::row_vector(dgamma), &mut grads);
                    acc(*beta, Matrix::row_vector(dbeta), &mut grads);
                }
                Op::Normalize {
                    x,
                    gamma,
                    beta,
                    inv_std,
                    xhat,
                } => {
                    let (n, d) = xhat.shape();
                    let gam = self.value(*gamma).data();
                    let mut dgamma = vec![0.0; d];
                    let mut dbeta = vec![0.0; d];
                    for i in 0..n {
                        for j in 0..d {
                            dgamma[j] += g.get(i, j) * xhat.get(i, j);
                            dbeta[j] += g.get(i, j);
                        }
                    }
                    let dx = Matrix::from_fn(n, d, |i, j| g.get(i, j) * gam[j] * inv_std[j]);
                    acc(*x, dx, &mut grads);
                    acc(*gamma, Matrix::row_vector(dgamma), &mut grads);
                    acc(*beta, Matrix::row_vector(dbeta), &mut grads);
                }
                Op::SumSquares(a) => {
                    let s = 2.0 * g.item();
                    acc(*a, self.value(*a).scale(s), &mut grads);
                }
                Op::RowNormalize { x, norms } => {
                    // y = x/|x|, dx = (g - y (g.y)) / |x|
                    let y = &node.value;
                    let (n, d) = y.shape();
                    let mut dx = Matrix::zeros(n, d);
                    for i in 0..n {
                        if norms[i] <= ZERO_NORM {
                            continue;
                        }
                        let gy: f64 = g.row(i).iter().zip(y.row(i)).map(|(a, b)| a * b).sum();
                        for j in 0..d {
                            dx.set(i, j, (g.get(i, j) - y.get(i, j) * gy) / norms[i]);
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::WeightedSum(terms) => {
                    let gs = g.item();
                    for &(v, w) in terms {
                        acc(v, Matrix::scalar(gs * w), &mut grads);
                    }
                }
                Op::VStack(parts) => {
                    let cols = g.cols();
                    let mut start = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        let slice = g.data()[start * cols..(start + rows) * cols].to_vec();
                        acc(p, Matrix::new(rows, cols, slice)?, &mut grads);
                        start += rows;
                    }
                }
                Op::Fused { parents, backward } => {
                    let values: Vec<&Matrix> = parents.iter().map(|p| self.value(*p)).collect();
                    let pg = backward(&g, &values);
                    debug_assert_eq!(pg.len(), parents.len());
                    for (p, d) in parents.iter().zip(pg) {
                        if let Some(d) = d {
                            acc(*p, d, &mut grads);
                        }
                    }
                }
            }
        }
        Ok(params)
    }
}
