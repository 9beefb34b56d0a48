//! Cyclic Jacobi eigensolver for real symmetric matrices.

use crate::error::{Error, Result};
use crate::linalg::symmetric::SymmetricMatrix;

pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix.
///
/// `eigenvectors` is row-major; column `k` pairs with `eigenvalues[k]`.
/// Eigenvalues are ascending. Within a degenerate eigenspace any orthonormal
/// basis may be returned, and columns carry no sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.eigenvectors[row * self.dim() + k]
    }

    /// Column `k` as an owned vector.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.vector_entry(i, k)).collect()
    }

    /// `U · diag(λ) · Uᵀ` with arbitrary replacement eigenvalues.
    pub fn reconstruct_with(&self, values: &[f64]) -> SymmetricMatrix {
        let n = self.dim();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vector_entry(i, k) * values[k] * self.vector_entry(j, k))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(&self.eigenvalues)
    }

    /// Largest `|Uᵀ U − I|` entry.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| self.vector_entry(i, a) * self.vector_entry(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

pub(crate) struct JacobiOutcome {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += 2.0 * a[p * n + q] * a[p * n + q];
        }
    }
    s.sqrt()
}

/// Runs cyclic sweeps until every off-diagonal entry is exactly zero.
///
/// Entries that can no longer change either adjacent diagonal entry are
/// zeroed after the fourth sweep, so the iteration reaches a fixed point
/// instead of stalling at rounding level.
pub(crate) fn jacobi(mut a: Vec<f64>, n: usize, with_vectors: bool) -> JacobiOutcome {
    let mut v = with_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        let sum_off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .sum();
        if sum_off == 0.0 {
            converged = true;
            break;
        }
        sweeps += 1;
        let threshold = if sweeps < 4 {
            0.2 * sum_off / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }

                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - s * (arq + arp * tau);
                    let new_rq = arq + s * (arp - arq * tau);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }

                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = vrp - s * (vrq + vrp * tau);
                        v[r * n + q] = vrq + s * (vrp - vrq * tau);
                    }
                }
            }
        }
    }

    let residual = off_diagonal_norm(&a, n);
    JacobiOutcome {
        values: (0..n).map(|i| a[i * n + i]).collect(),
        vectors: v,
        sweeps,
        residual,
        converged,
    }
}

/// Eigenvalues only, best effort (no convergence error).
pub(crate) fn jacobi_eigenvalues(a: Vec<f64>, n: usize) -> (Vec<f64>, f64) {
    let out = jacobi(a, n, false);
    (out.values, out.residual)
}

pub fn symmetric_eigendecompose(h: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !h.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let n = h.dim();
    let out = jacobi(h.as_slice().to_vec(), n, true);
    if !out.converged && out.residual > 1e-12 * (1.0 + h.frobenius()) {
        return Err(Error::EigenNotConverged {
            sweeps: out.sweeps,
            residual: out.residual,
        });
    }
    let vectors = out.vectors.expect("requested eigenvectors");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| out.values[x].total_cmp(&out.values[y]));

    let eigenvalues = order.iter().map(|&k| out.values[k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + new_k] = vectors[i * n + old_k];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hyperfine() -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 2.0, 0.0],
            vec![0.0, 2.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn max_abs_diff(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn already_diagonal() {
        let d = symmetric_eigendecompose(&SymmetricMatrix::from_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 3.0]);
        // columns are a permutation of the identity
        assert_eq!(d.eigenvector(0), vec![0.0, 1.0]);
        assert_eq!(d.eigenvector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn exchange_matrix() {
        let x = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = symmetric_eigendecompose(&x).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-15);
        let v0 = d.eigenvector(0);
        let v1 = d.eigenvector(1);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // up to column sign
        assert_abs_diff_eq!((v0[0] * r - v0[1] * r).abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!((v1[0] * r + v1[1] * r).abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hyperfine_spectrum() {
        // inner block [[-1,2],[2,-1]] has characteristic polynomial (λ+1)^2 - 4
        let d = symmetric_eigendecompose(&hyperfine()).unwrap();
        let expected = [-3.0, 1.0, 1.0, 1.0];
        for (got, want) in d.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert!(max_abs_diff(&d.reconstruct(), &hyperfine()) < 1e-14);
    }

    #[test]
    fn random_round_trip_up_to_thirty() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=30 {
            let h = SymmetricMatrix::from_upper_fn(n, |_, _| rng.random_range(-2.0..=2.0));
            let d = symmetric_eigendecompose(&h).unwrap();
            assert!(d.orthogonality_defect() <= 1e-10, "n={n}");
            assert!(max_abs_diff(&d.reconstruct(), &h) <= 1e-9 * (1.0 + h.max_abs()), "n={n}");
            assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = SymmetricMatrix::from_upper_fn(7, |_, _| rng.random_range(-1.0..=1.0));
        assert_eq!(symmetric_eigendecompose(&h).unwrap(), symmetric_eigendecompose(&h).unwrap());
    }

    #[test]
    fn rejects_non_finite() {
        let h = SymmetricMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(symmetric_eigendecompose(&h), Err(Error::Numeric(_))));
    }

    #[test]
    fn one_by_one_and_empty() {
        let d = symmetric_eigendecompose(&SymmetricMatrix::from_diagonal(&[4.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![4.0]);
        let d = symmetric_eigendecompose(&SymmetricMatrix::zeros(0)).unwrap();
        assert!(d.eigenvalues.is_empty());
    }
}
