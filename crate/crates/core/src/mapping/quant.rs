use crate::error::{Error, Result};
use crate::tensor::{mttkrp_reference, DenseTensor, Matrix, Tensor};

/// Row-major matrix of signed integer codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl CodeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} codes cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged code rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Real matrix holding `code * scale`.
    pub fn to_matrix(&self, scale: f64) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) as f64 * scale)
    }

    pub fn max_abs_diff(&self, other: &CodeMatrix) -> Result<i64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::invalid("code matrix shape mismatch"));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0))
    }
}

/// Symmetric step for `bits`-bit magnitudes: `max_abs / (2^bits - 1)`, or 1
/// for an all-zero operand.
pub fn quantization_scale(max_abs: f64, bits: u32) -> f64 {
    if max_abs > 0.0 {
        max_abs / ((1u64 << bits) - 1) as f64
    } else {
        1.0
    }
}

fn quantize_value(v: f64, scale: f64, top: i64) -> i64 {
    ((v / scale).round() as i64).clamp(-top, top)
}

/// Sign-magnitude fixed point: `codes * scale` approximates `m`, with
/// `|code| < 2^bits`.
pub fn quantize_matrix(m: &Matrix, bits: u32) -> (CodeMatrix, f64) {
    let top = (1i64 << bits) - 1;
    let scale = quantization_scale(m.max_abs(), bits);
    let data = m
        .as_slice()
        .iter()
        .map(|&v| quantize_value(v, scale, top))
        .collect();
    (
        CodeMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data,
        },
        scale,
    )
}

/// Same scheme as [`quantize_matrix`]; codes are returned as an
/// integer-valued tensor.
pub fn quantize_tensor(t: &DenseTensor, bits: u32) -> (DenseTensor, f64) {
    let top = (1i64 << bits) - 1;
    let max_abs = t.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = quantization_scale(max_abs, bits);
    (t.map(|v| quantize_value(v, scale, top) as f64), scale)
}

/// Reference MTTKRP on the quantized operands, as integer codes plus the
/// scale that maps them back to real values.
pub fn quantized_reference(
    tensor: &DenseTensor,
    factors: &[Matrix],
    mode: usize,
    bits: u32,
) -> Result<(CodeMatrix, f64)> {
    let (tq, mut scale) = quantize_tensor(tensor, bits);
    let mut qf = Vec::with_capacity(factors.len());
    for (m, f) in factors.iter().enumerate() {
        let (codes, s) = quantize_matrix(f, bits);
        if m != mode {
            scale *= s;
        }
        qf.push(codes.to_matrix(1.0));
    }
    let out = mttkrp_reference(&Tensor::Dense(tq), &qf, mode)?;
    let data = out.as_slice().iter().map(|&v| v as i64).collect();
    Ok((CodeMatrix::from_vec(out.rows(), out.cols(), data)?, scale))
}
