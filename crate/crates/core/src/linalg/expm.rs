//! Unitary evolution operators `e^{-itH}` for real symmetric `H` (ħ = 1).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::complex::ComplexMatrix;
use crate::linalg::eigen::{symmetric_eigendecompose, EigenDecomposition};
use crate::linalg::symmetric::SymmetricMatrix;

pub const DEFAULT_TAYLOR_TERMS: usize = 30;

impl EigenDecomposition {
    /// `U · diag(e^{-itλ_k}) · Uᵀ`.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        let n = self.dim();
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -t * l))
            .collect();
        let mut out = ComplexMatrix::zeros(n, n);
        // U·diag is formed row by row, then contracted against Uᵀ.
        let mut scaled = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for k in 0..n {
                scaled[k] = phases[k] * self.vector_entry(i, k);
            }
            for j in i..n {
                let mut z = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    z += scaled[k] * self.vector_entry(j, k);
                }
                out.set(i, j, z);
                out.set(j, i, z);
            }
        }
        out
    }
}

/// Evolution operator via eigendecomposition.
pub fn expm_unitary(h: &SymmetricMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(symmetric_eigendecompose(h)?.evolution(t))
}

/// Raw partial sum `Σ_{k<terms} (-itH)^k / k!`.
///
/// Only accurate when `‖tH‖` is small; see [`expm_taylor_scaled`].
pub fn expm_taylor(h: &SymmetricMatrix, t: f64, terms: usize) -> Result<ComplexMatrix> {
    if terms == 0 {
        return Err(Error::Contract("Taylor series needs at least one term".into()));
    }
    let n = h.dim();
    let generator = h.to_complex().scale(Complex64::new(0.0, -t));
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..terms {
        term = term
            .matmul(&generator)?
            .scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = ComplexMatrix::from_row_major(
            n,
            n,
            sum.as_slice().iter().zip(term.as_slice()).map(|(a, b)| a + b).collect(),
        )?;
    }
    if !sum.is_finite() {
        return Err(Error::Numeric("Taylor series overflowed".into()));
    }
    Ok(sum)
}

/// Taylor series with scaling and squaring: `t` is divided by `2^k` until
/// `‖tH‖_∞ ≤ 1/2`, and the result is squared `k` times.
pub fn expm_taylor_scaled(h: &SymmetricMatrix, t: f64, terms: usize) -> Result<ComplexMatrix> {
    let n = h.dim();
    let row_sum = (0..n)
        .map(|i| (0..n).map(|j| h.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let norm = row_sum * t.abs();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let mut u = expm_taylor(h, t / 2f64.powi(squarings as i32), terms)?;
    for _ in 0..squarings {
        u = u.matmul(&u)?;
    }
    if !u.is_finite() {
        return Err(Error::Numeric("scaled Taylor exponential overflowed".into()));
    }
    Ok(u)
}
