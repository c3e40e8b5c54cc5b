//! CP models and the alternating least squares driver.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::DenseTensor;
use super::matrix::Matrix;
use super::ops::{check_factors, mttkrp_reference, Tensor};
use crate::error::{Error, Result};

/// Weighted Kruskal model `sum_r w_r * f0[:, r] o f1[:, r] o ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    pub factors: Vec<Matrix>,
    pub weights: Vec<f64>,
}

impl CpModel {
    pub fn new(factors: Vec<Matrix>, weights: Vec<f64>) -> Result<Self> {
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::invalid("CP rank must be at least 1"));
        }
        if factors.is_empty() {
            return Err(Error::invalid("CP model needs at least one factor"));
        }
        if let Some(m) = factors.iter().position(|f| f.cols() != rank) {
            return Err(Error::invalid(format!(
                "factor {m} has rank {}, weights have {rank}",
                factors[m].cols()
            )));
        }
        Ok(Self { factors, weights })
    }

    /// Unit weights.
    pub fn from_factors(factors: Vec<Matrix>) -> Result<Self> {
        let rank = factors.first().map_or(0, Matrix::cols);
        Self::new(factors, vec![1.0; rank])
    }

    /// Factors drawn uniformly from [0, 1) in mode order, row-major.
    pub fn random(shape: &[usize], rank: usize, rng: &mut impl Rng) -> Result<Self> {
        let factors = shape
            .iter()
            .map(|&rows| Matrix::from_fn(rows, rank, |_, _| rng.random::<f64>()))
            .collect();
        Self::from_factors(factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Dense tensor with entry `sum_r w_r prod_n f_n(i_n, r)`.
    pub fn reconstruct(&self) -> DenseTensor {
        let rank = self.rank();
        let mut scratch = vec![0.0; rank];
        DenseTensor::from_fn(self.shape(), |idx| {
            scratch.copy_from_slice(&self.weights);
            for (f, &i) in self.factors.iter().zip(idx) {
                for (s, v) in scratch.iter_mut().zip(f.row(i)) {
                    *s *= v;
                }
            }
            scratch.iter().sum()
        })
        .expect("factor row counts are positive")
    }

    /// Scales every factor column to unit 2-norm and folds the norms into the
    /// weights. A zero column zeroes its component's weight and is replaced
    /// by a fresh unit-norm column drawn from `rng`.
    pub fn normalize(&mut self, rng: &mut impl Rng) {
        for r in 0..self.rank() {
            let mut dead = false;
            for f in &mut self.factors {
                let norm = f.column_norm(r);
                if norm > 0.0 && norm.is_finite() {
                    f.divide_column(r, norm);
                    self.weights[r] *= norm;
                } else {
                    dead = true;
                    reseed_column(f, r, rng);
                }
            }
            if dead {
                self.weights[r] = 0.0;
            }
        }
    }

    /// True when every column has unit norm within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.factors
            .iter()
            .all(|f| (0..f.cols()).all(|r| (f.column_norm(r) - 1.0).abs() <= tol))
    }
}

fn reseed_column(f: &mut Matrix, r: usize, rng: &mut impl Rng) {
    loop {
        for i in 0..f.rows() {
            f.set(i, r, rng.random::<f64>());
        }
        let norm = f.column_norm(r);
        if norm > 0.0 {
            f.divide_column(r, norm);
            return;
        }
    }
}

/// `‖X - model‖_F`.
pub fn residual_norm(tensor: &Tensor, model: &CpModel) -> Result<f64> {
    if tensor.shape() != model.shape().as_slice() {
        return Err(Error::invalid(format!(
            "model shape {:?} does not match tensor shape {:?}",
            model.shape(),
            tensor.shape()
        )));
    }
    match tensor {
        Tensor::Dense(t) => {
            let recon = model.reconstruct();
            Ok(t.values()
                .iter()
                .zip(recon.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt())
        }
        Tensor::Sparse(t) => {
            // ‖X‖² - 2<X, M> + ‖M‖², with <X, M> over the nonzeros only.
            let rank = model.rank();
            let mut inner = 0.0;
            for (c, v) in t.entries() {
                let mut acc = 0.0;
                for r in 0..rank {
                    let mut p = model.weights[r];
                    for (f, &i) in model.factors.iter().zip(c) {
                        p *= f.get(i, r);
                    }
                    acc += p;
                }
                inner += v * acc;
            }
            let mut gram = Matrix::filled(rank, rank, 1.0);
            for f in &model.factors {
                gram.hadamard_assign(&f.gram())?;
            }
            let mut model_sq = 0.0;
            for a in 0..rank {
                for b in 0..rank {
                    model_sq += model.weights[a] * model.weights[b] * gram.get(a, b);
                }
            }
            let x = t.frobenius_norm();
            Ok((x * x - 2.0 * inner + model_sq).max(0.0).sqrt())
        }
    }
}

/// `1 - ‖X - model‖ / ‖X‖`, or 1 for an all-zero tensor.
pub fn fit(tensor: &Tensor, model: &CpModel) -> Result<f64> {
    let residual = residual_norm(tensor, model)?;
    let norm = tensor.frobenius_norm();
    if norm == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - residual / norm)
}

/// Computes `X_(mode) · KR(other factors)`; the ALS driver is generic over it
/// so the same loop can run on the reference path or on the simulated array.
pub trait MttkrpKernel {
    fn mttkrp(&mut self, tensor: &Tensor, factors: &[Matrix], mode: usize) -> Result<Matrix>;
}

/// Exact reference kernel.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReferenceKernel;

impl MttkrpKernel for ReferenceKernel {
    fn mttkrp(&mut self, tensor: &Tensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
        mttkrp_reference(tensor, factors, mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpAlsOptions {
    pub rank: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CpAlsOptions {
    fn default() -> Self {
        Self {
            rank: 1,
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub fit: f64,
    pub residual: f64,
    pub fit_change: f64,
}

#[derive(Debug, Clone)]
pub struct CpAlsResult {
    pub model: CpModel,
    pub fit: f64,
    pub trace: Vec<SweepRecord>,
    pub converged: bool,
}

/// Ridge added to the Gram product's diagonal, relative to its trace, when
/// the plain Cholesky factorization fails.
pub const RIDGE_FACTOR: f64 = 1e-12;

/// Solves `F · V = M` for `F` with `V` symmetric positive semidefinite.
pub fn solve_normal_equations(m: &Matrix, v: &Matrix) -> Result<Matrix> {
    let r = v.rows();
    if v.cols() != r || m.cols() != r {
        return Err(Error::invalid("normal equations shape mismatch"));
    }
    let vm = DMatrix::from_row_slice(r, r, v.as_slice());
    // Columns of rhs are rows of M.
    let rhs = DMatrix::from_column_slice(r, m.rows(), m.as_slice());

    let solved = match vm.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let trace = vm.trace();
            let ridged = &vm + DMatrix::<f64>::identity(r, r) * (RIDGE_FACTOR * trace);
            match ridged.cholesky() {
                Some(ch) if trace > 0.0 => ch.solve(&rhs),
                _ => {
                    let pinv = vm
                        .pseudo_inverse(f64::EPSILON * r as f64)
                        .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?;
                    pinv * rhs
                }
            }
        }
    };
    Matrix::from_vec(m.rows(), r, solved.as_slice().to_vec())
}

/// CP-ALS: per sweep, each factor is replaced by the least-squares solution
/// against the MTTKRP and the Hadamard product of the other factors' Gram
/// matrices; factors are normalized at the end of every sweep. Stops when the
/// fit changes by less than `tol` (the fit before the first sweep counts as 0)
/// or after `max_iters` sweeps.
pub fn cp_als(
    tensor: &Tensor,
    opts: &CpAlsOptions,
    kernel: &mut dyn MttkrpKernel,
) -> Result<CpAlsResult> {
    if opts.rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if opts.max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::invalid("tol must be non-negative"));
    }
    let shape = tensor.shape().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut model = CpModel::random(&shape, opts.rank, &mut rng)?;
    check_factors(&shape, &model.factors, 0)?;

    let mut trace = Vec::new();
    let mut prev_fit = 0.0;
    let mut converged = false;
    let mut current_fit = 0.0;
    for sweep in 1..=opts.max_iters {
        for mode in 0..shape.len() {
            let m = kernel.mttkrp(tensor, &model.factors, mode)?;
            let mut v = Matrix::filled(opts.rank, opts.rank, 1.0);
            for (other, f) in model.factors.iter().enumerate() {
                if other != mode {
                    v.hadamard_assign(&f.gram())?;
                }
            }
            model.factors[mode] = solve_normal_equations(&m, &v)?;
            // The updated factor absorbs the previous component weights.
            model.weights.fill(1.0);
        }
        model.normalize(&mut rng);

        let residual = residual_norm(tensor, &model)?;
        let norm = tensor.frobenius_norm();
        current_fit = if norm == 0.0 {
            1.0
        } else {
            1.0 - residual / norm
        };
        let change = (current_fit - prev_fit).abs();
        trace.push(SweepRecord {
            sweep,
            fit: current_fit,
            residual,
            fit_change: change,
        });
        if change < opts.tol {
            converged = true;
            break;
        }
        prev_fit = current_fit;
    }
    Ok(CpAlsResult {
        model,
        fit: current_fit,
        trace,
        converged,
    })
}
