use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigen::jacobi_eigenvalues;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex column vector (state amplitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    entries: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a vector from separate real and imaginary parts.
    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::dim("amplitude parts", re.len(), im.len()));
        }
        Ok(Self::new(
            re.iter()
                .zip(im)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        ))
    }

    /// Standard basis vector `e_index` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut entries = vec![ZERO; dim];
        entries[index] = ONE;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// Squared magnitudes, i.e. measurement probabilities for a normalized state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.im).collect()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

/// `⟨bra|ket⟩`, conjugate-linear in `bra`.
pub fn inner_product(bra: &ComplexVector, ket: &ComplexVector) -> Result<Complex64> {
    if bra.dim() != ket.dim() {
        return Err(Error::dim("inner product", bra.dim(), ket.dim()));
    }
    Ok(bra
        .entries
        .iter()
        .zip(&ket.entries)
        .fold(ZERO, |acc, (b, k)| acc + b.conj() * k))
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("complex matrix entries", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim("matrix product", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::dim("matrix-vector product", self.cols, v.dim()));
        }
        Ok(ComplexVector::new(
            self.data
                .chunks_exact(self.cols)
                .map(|row| row.iter().zip(v.entries()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::dim(
                "matrix difference",
                self.rows * self.cols,
                other.rows * other.cols,
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_norm(U U† − I) ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        match self.matmul(&self.adjoint()) {
            Ok(p) => p
                .sub(&Self::identity(self.rows))
                .map(|d| max_norm(&d) <= tol)
                .unwrap_or(false),
            Err(_) => false,
        }
    }
}

/// Induced 2-norm (largest singular value).
///
/// Computed as `sqrt(λ_max(A†A))`, with the Hermitian Gram matrix diagonalized
/// through its real symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn max_norm(a: &ComplexMatrix) -> f64 {
    let n = a.cols;
    if n == 0 || a.rows == 0 {
        return 0.0;
    }
    let gram = match a.adjoint().matmul(a) {
        Ok(g) => g,
        Err(_) => unreachable!("A†A is always conformable"),
    };
    let real = gram.data.iter().all(|z| z.im == 0.0);
    let (dim, embedded) = if real {
        (n, gram.data.iter().map(|z| z.re).collect::<Vec<_>>())
    } else {
        let m = 2 * n;
        let mut e = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = gram.get(i, j);
                e[i * m + j] = z.re;
                e[(i + n) * m + (j + n)] = z.re;
                e[i * m + (j + n)] = -z.im;
                e[(i + n) * m + j] = z.im;
            }
        }
        (m, e)
    };
    let (values, _) = jacobi_eigenvalues(embedded, dim);
    values.into_iter().fold(0.0, f64::max).max(0.0).sqrt()
}
