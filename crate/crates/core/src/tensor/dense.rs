use crate::error::{Error, Result};

/// Dense N-mode tensor stored row-major: mode 0 varies slowest, mode N-1 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::invalid("tensor shape must have at least one mode"));
    }
    if let Some(m) = shape.iter().position(|&d| d == 0) {
        return Err(Error::invalid(format!("mode {m} has size 0")));
    }
    Ok(())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::invalid(format!(
                "tensor of shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![value; n])
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_shape(&shape)?;
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            values.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let li = self.linear_index(idx);
        self.values[li] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Visits every element with its multi-index, in storage order.
    pub fn for_each_indexed(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.shape.len()];
        for &v in &self.values {
            f(&idx, v);
            increment(&mut idx, &self.shape);
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for m in (0..shape.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * shape[m + 1];
    }
    s
}

/// Row-major odometer increment (last mode fastest).
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for m in (0..shape.len()).rev() {
        idx[m] += 1;
        if idx[m] < shape[m] {
            return;
        }
        idx[m] = 0;
    }
}
