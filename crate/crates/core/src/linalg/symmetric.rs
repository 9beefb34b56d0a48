use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::complex::ComplexMatrix;
use crate::linalg::eigen::jacobi_eigenvalues;

/// Real symmetric matrix stored densely in row-major order.
///
/// Every constructor writes both triangles from a single value, so
/// `get(i, j) == get(j, i)` holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from an upper-triangle callback `f(i, j)`, `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a full row-major matrix; rejects anything not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::dim("symmetric matrix row", dim, row.len()));
            }
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(Error::Contract(format!(
                        "matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self::from_upper_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `(i, j)` and `(j, i)` together.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dim("symmetric matrix", self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// `self + f·I`.
    pub fn shifted(&self, f: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            let d = out.get(i, i);
            out.set(i, i, d + f);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Smallest and largest eigenvalue.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        if self.dim == 0 {
            return (0.0, 0.0);
        }
        let (values, _) = jacobi_eigenvalues(self.data.clone(), self.dim);
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Operator 2-norm, `max |λ|`.
    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalue_range();
        lo.abs().max(hi.abs())
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(
            self.dim,
            self.dim,
            self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
        .expect("square storage")
    }
}
