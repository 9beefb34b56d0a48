//! Representatives for symmetries the data cannot see.
//!
//! Beyond the `H + f·I` family, two more symmetries leave every fidelity
//! unchanged in common situations:
//!
//! * When all pairs share one time `t`, only `e^{-itH}` is observed, so each
//!   eigenvalue is fixed only modulo `2π/t`. [`fold_spectrum`] picks the
//!   alias whose eigenvalues have the smallest spread (variance).
//! * When every prepared and observed vector is real, `|⟨φ|e^{-itH}|ψ⟩|` is
//!   invariant under `H → −H` (complex conjugation). [`needs_sign_flip`]
//!   picks the representative whose dominant off-diagonal weight is positive.

use std::f64::consts::TAU;

use crate::error::Result;
use crate::hamiltonian::{weight_position, HamiltonianParam};
use crate::linalg::{symmetric_eigendecompose, SymmetricMatrix};

fn variance(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64
}

/// Returns the minimum-variance spectral alias of `h` for evolution time
/// `t`, or `None` when `h` already is one (ties keep `h`).
///
/// Each eigenvalue moves by an integer multiple of `2π/t`; eigenvectors are
/// untouched, so `e^{-itH}` is preserved up to rounding.
pub fn fold_spectrum(h: &SymmetricMatrix, t: f64) -> Result<Option<SymmetricMatrix>> {
    let n = h.dim();
    if n < 2 || t == 0.0 || !t.is_finite() {
        return Ok(None);
    }
    let period = TAU / t.abs();
    let eig = symmetric_eigendecompose(h)?;
    let lambda = &eig.eigenvalues;

    let phase: Vec<f64> = lambda.iter().map(|l| l.rem_euclid(period)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phase[a].total_cmp(&phase[b]));

    // every cyclic cut of the phase circle is a candidate branch
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cut in 0..n {
        let mut unwrapped = vec![0.0; n];
        for (pos, &k) in order.iter().enumerate() {
            unwrapped[k] = if pos >= cut { phase[k] } else { phase[k] + period };
        }
        let v = variance(&unwrapped);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, unwrapped));
        }
    }
    let (best_var, unwrapped) = best.expect("n >= 2");
    let current_var = variance(lambda);
    if best_var >= current_var * (1.0 - 1e-9) - 1e-12 {
        return Ok(None);
    }

    let mut shifts: Vec<f64> = unwrapped
        .iter()
        .zip(lambda)
        .map(|(u, l)| ((u - l) / period).round())
        .collect();
    let drift = shifts.iter().sum::<f64>() / n as f64;
    let offset = drift.round();
    for s in shifts.iter_mut() {
        *s -= offset;
    }
    if shifts.iter().all(|&s| s == 0.0) {
        return Ok(None);
    }
    let folded: Vec<f64> = lambda
        .iter()
        .zip(&shifts)
        .map(|(l, s)| l + s * period)
        .collect();
    Ok(Some(eig.reconstruct_with(&folded)))
}

/// True when `p` should be replaced by `−p` to become the canonical
/// representative under `H → −H`.
///
/// The deciding weight is the largest-magnitude off-diagonal weight (first
/// in packed order on ties); for diagonal matrices it is the largest
/// deviation of a diagonal weight from the diagonal mean.
pub fn needs_sign_flip(p: &HamiltonianParam) -> bool {
    let n = p.dim();
    let mut pick: Option<f64> = None;
    for (k, &w) in p.weights().iter().enumerate() {
        let (i, j) = weight_position(n, k);
        if i != j && w != 0.0 && pick.is_none_or(|b| w.abs() > b.abs()) {
            pick = Some(w);
        }
    }
    if pick.is_none() {
        let diag: Vec<f64> = (0..n).map(|i| p.get(i, i)).collect();
        let mean = diag.iter().sum::<f64>() / n.max(1) as f64;
        for d in diag {
            let c = d - mean;
            if c != 0.0 && pick.is_none_or(|b| c.abs() > b.abs()) {
                pick = Some(c);
            }
        }
    }
    pick.is_some_and(|w| w < 0.0)
}

/// `−p`, keeping exact zeros as `+0.0`.
pub fn negate(p: &HamiltonianParam) -> HamiltonianParam {
    let weights = p
        .weights()
        .iter()
        .map(|&w| if w == 0.0 { 0.0 } else { -w })
        .collect();
    HamiltonianParam::new(p.dim(), weights).expect("same length")
}
