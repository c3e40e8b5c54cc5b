//! Matricization, Khatri-Rao products and the reference MTTKRP.
//!
//! Column ordering convention for the mode-n unfolding: the remaining modes
//! are swept with the lowest-numbered mode varying fastest. `khatri_rao`
//! puts its right operand's row index fastest, so the Khatri-Rao product of
//! the non-target factors taken in descending mode order lines up with the
//! unfolding's columns.

use super::dense::DenseTensor;
use super::matrix::Matrix;
use super::sparse::SparseTensor;
use crate::error::{Error, Result};

/// A tensor in either storage form.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Dense(DenseTensor),
    Sparse(SparseTensor),
}

impl Tensor {
    pub fn shape(&self) -> &[usize] {
        match self {
            Tensor::Dense(t) => t.shape(),
            Tensor::Sparse(t) => t.shape(),
        }
    }

    pub fn ndim(&self) -> usize {
        self.shape().len()
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Tensor::Dense(t) => t.frobenius_norm(),
            Tensor::Sparse(t) => t.frobenius_norm(),
        }
    }

    pub fn to_dense(&self) -> DenseTensor {
        match self {
            Tensor::Dense(t) => t.clone(),
            Tensor::Sparse(t) => t.to_dense(),
        }
    }
}

impl From<DenseTensor> for Tensor {
    fn from(t: DenseTensor) -> Self {
        Tensor::Dense(t)
    }
}

impl From<SparseTensor> for Tensor {
    fn from(t: SparseTensor) -> Self {
        Tensor::Sparse(t)
    }
}

/// Mode-n unfolding of a dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Matricization {
    pub mode: usize,
    pub shape: Vec<usize>,
    pub matrix: Matrix,
}

/// Column strides of the mode-`mode` unfolding, indexed by tensor mode
/// (the entry for `mode` itself is 0).
pub fn unfolding_strides(shape: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0usize; shape.len()];
    let mut acc = 1usize;
    for (m, &d) in shape.iter().enumerate() {
        if m != mode {
            strides[m] = acc;
            acc *= d;
        }
    }
    strides
}

fn check_mode(shape: &[usize], mode: usize) -> Result<()> {
    if mode >= shape.len() {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for a {}-mode tensor",
            shape.len()
        )));
    }
    Ok(())
}

pub fn matricize(tensor: &DenseTensor, mode: usize) -> Result<Matricization> {
    let shape = tensor.shape();
    check_mode(shape, mode)?;
    let rows = shape[mode];
    let cols = tensor.len() / rows;
    let strides = unfolding_strides(shape, mode);
    let mut m = Matrix::zeros(rows, cols);
    tensor.for_each_indexed(|idx, v| {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        m.set(idx[mode], col, v);
    });
    Ok(Matricization {
        mode,
        shape: shape.to_vec(),
        matrix: m,
    })
}

/// Inverse of [`matricize`].
pub fn tensorize(unfolded: &Matricization) -> Result<DenseTensor> {
    let shape = &unfolded.shape;
    check_mode(shape, unfolded.mode)?;
    let total: usize = shape.iter().product();
    let m = &unfolded.matrix;
    if m.rows() != shape[unfolded.mode] || m.rows() * m.cols() != total {
        return Err(Error::invalid(format!(
            "{}x{} matrix is not a mode-{} unfolding of {shape:?}",
            m.rows(),
            m.cols(),
            unfolded.mode
        )));
    }
    let strides = unfolding_strides(shape, unfolded.mode);
    DenseTensor::from_fn(shape.clone(), |idx| {
        let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        m.get(idx[unfolded.mode], col)
    })
}

/// Column-wise Kronecker product; output row `l * right.rows() + r`.
pub fn khatri_rao(left: &Matrix, right: &Matrix) -> Result<Matrix> {
    if left.cols() != right.cols() {
        return Err(Error::invalid(format!(
            "khatri_rao rank mismatch: {} vs {}",
            left.cols(),
            right.cols()
        )));
    }
    let rank = left.cols();
    let mut out = Matrix::zeros(left.rows() * right.rows(), rank);
    for l in 0..left.rows() {
        for r in 0..right.rows() {
            let dst = out.row_mut(l * right.rows() + r);
            for ((d, a), b) in dst.iter_mut().zip(left.row(l)).zip(right.row(r)) {
                *d = a * b;
            }
        }
    }
    Ok(out)
}

/// Validates factor shapes for an MTTKRP along `mode` and returns the rank.
pub(crate) fn check_factors(shape: &[usize], factors: &[Matrix], mode: usize) -> Result<usize> {
    check_mode(shape, mode)?;
    if factors.len() != shape.len() {
        return Err(Error::invalid(format!(
            "expected {} factor matrices, got {}",
            shape.len(),
            factors.len()
        )));
    }
    let rank = factors
        .iter()
        .enumerate()
        .find(|(m, _)| *m != mode)
        .map_or(factors[mode].cols(), |(_, f)| f.cols());
    if rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    for (m, f) in factors.iter().enumerate() {
        if m == mode {
            continue;
        }
        if f.rows() != shape[m] {
            return Err(Error::invalid(format!(
                "factor {m} has {} rows, mode size is {}",
                f.rows(),
                shape[m]
            )));
        }
        if f.cols() != rank {
            return Err(Error::invalid(format!(
                "factor {m} has rank {}, expected {rank}",
                f.cols()
            )));
        }
    }
    Ok(rank)
}

/// Khatri-Rao product of every factor except `mode`, in descending mode order,
/// so its rows follow the mode-`mode` unfolding's columns.
pub fn khatri_rao_except(factors: &[Matrix], mode: usize, rank: usize) -> Result<Matrix> {
    let mut acc: Option<Matrix> = None;
    for (m, f) in factors.iter().enumerate() {
        if m == mode {
            continue;
        }
        acc = Some(match acc {
            None => f.clone(),
            Some(a) => khatri_rao(f, &a)?,
        });
    }
    Ok(acc.unwrap_or_else(|| Matrix::filled(1, rank, 1.0)))
}

/// Reference MTTKRP: `X_(mode) · KR(other factors)`.
///
/// `factors` holds one matrix per mode; the entry at `mode` is ignored.
/// Sparse input is accumulated in the same order as the dense product, so the
/// two paths agree bit for bit.
pub fn mttkrp_reference(tensor: &Tensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    let shape = tensor.shape();
    let rank = check_factors(shape, factors, mode)?;
    match tensor {
        Tensor::Dense(t) => {
            let unfolded = matricize(t, mode)?;
            let kr = khatri_rao_except(factors, mode, rank)?;
            unfolded.matrix.matmul(&kr)
        }
        Tensor::Sparse(t) => Ok(sparse_mttkrp(t, factors, mode, rank)),
    }
}

fn sparse_mttkrp(t: &SparseTensor, factors: &[Matrix], mode: usize, rank: usize) -> Matrix {
    let strides = unfolding_strides(t.shape(), mode);
    let mut order: Vec<(usize, usize, &[usize], f64)> = t
        .entries()
        .map(|(c, v)| {
            let col: usize = c.iter().zip(&strides).map(|(i, s)| i * s).sum();
            (c[mode], col, c, v)
        })
        .collect();
    order.sort_by_key(|&(row, col, _, _)| (row, col));

    let mut out = Matrix::zeros(t.shape()[mode], rank);
    let mut kr = vec![0.0; rank];
    for (row, _, coord, v) in order {
        // Same association order as khatri_rao_except: lowest mode first,
        // each higher mode multiplied on the left.
        let mut first = true;
        for (m, f) in factors.iter().enumerate() {
            if m == mode {
                continue;
            }
            let frow = f.row(coord[m]);
            if first {
                kr.copy_from_slice(frow);
                first = false;
            } else {
                for (k, a) in kr.iter_mut().zip(frow) {
                    *k *= a;
                }
            }
        }
        if first {
            kr.fill(1.0);
        }
        for (d, k) in out.row_mut(row).iter_mut().zip(&kr) {
            *d += v * k;
        }
    }
    out
}
