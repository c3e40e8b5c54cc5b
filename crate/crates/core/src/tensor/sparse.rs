use std::collections::HashSet;

use super::dense::{check_shape, DenseTensor};
use crate::error::{Error, Result};

/// Coordinate-list sparse tensor. Coordinates are 0-based and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    shape: Vec<usize>,
    coords: Vec<Vec<usize>>,
    values: Vec<f64>,
}

impl SparseTensor {
    pub fn new(shape: Vec<usize>, entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        check_shape(&shape)?;
        let mut seen = HashSet::with_capacity(entries.len());
        let mut coords = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            if c.len() != shape.len() {
                return Err(Error::invalid(format!(
                    "coordinate {c:?} has {} modes, tensor has {}",
                    c.len(),
                    shape.len()
                )));
            }
            if let Some(m) = c.iter().zip(&shape).position(|(i, d)| i >= d) {
                return Err(Error::invalid(format!(
                    "coordinate {c:?} out of range in mode {m} (size {})",
                    shape[m]
                )));
            }
            if !seen.insert(c.clone()) {
                return Err(Error::invalid(format!("duplicate coordinate {c:?}")));
            }
            coords.push(c);
            values.push(v);
        }
        Ok(Self {
            shape,
            coords,
            values,
        })
    }

    /// Keeps every nonzero of `dense`.
    pub fn from_dense(dense: &DenseTensor) -> Self {
        let mut coords = Vec::new();
        let mut values = Vec::new();
        dense.for_each_indexed(|idx, v| {
            if v != 0.0 {
                coords.push(idx.to_vec());
                values.push(v);
            }
        });
        Self {
            shape: dense.shape().to_vec(),
            coords,
            values,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.coords
            .iter()
            .map(Vec::as_slice)
            .zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut d =
            DenseTensor::zeros(self.shape.clone()).expect("shape validated at construction");
        for (c, v) in self.entries() {
            d.set(c, v);
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
