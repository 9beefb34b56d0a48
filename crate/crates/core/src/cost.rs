//! Infidelity cost over data pairs and its finite-difference gradient.
//!
//! For pairs `(ψ_i, φ_i, t_i)` the per-pair term is
//! `1 − |⟨φ_i| e^{-i t_i H} |ψ_i⟩|²`. `total` is the plain sum over pairs and
//! `mean` divides by the number of pairs; the optimizer and all reported
//! costs use `mean`.

use crate::dataset::DataPair;
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianParam, StructureMask};
use crate::linalg::{inner_product, symmetric_eigendecompose, ComplexMatrix, SymmetricMatrix};
use crate::par;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Per-pair terms below this are rounding noise and reported as zero.
const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CostValue {
    pub per_pair: Vec<f64>,
    pub total: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// `∂ mean / ∂w_k` in packed weight order.
    pub partials: Vec<f64>,
    pub step: f64,
}

impl Gradient {
    pub fn max_abs(&self) -> f64 {
        self.partials.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn check_data(dim: usize, data: &[DataPair]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Contract("cost needs at least one data pair".into()));
    }
    if let Some(bad) = data.iter().find(|d| d.dim() != dim) {
        return Err(Error::dim("data pair", dim, bad.dim()));
    }
    Ok(())
}

pub fn cost(p: &HamiltonianParam, data: &[DataPair]) -> Result<CostValue> {
    cost_of_matrix(&p.to_matrix(), data)
}

pub fn cost_of_matrix(h: &SymmetricMatrix, data: &[DataPair]) -> Result<CostValue> {
    check_data(h.dim(), data)?;
    let eig = symmetric_eigendecompose(h)?;

    // one evolution operator per distinct time
    let mut times: Vec<f64> = Vec::new();
    let mut evolutions: Vec<ComplexMatrix> = Vec::new();
    let mut per_pair = Vec::with_capacity(data.len());
    for (i, pair) in data.iter().enumerate() {
        let slot = match times.iter().position(|t| t.to_bits() == pair.t.to_bits()) {
            Some(s) => s,
            None => {
                times.push(pair.t);
                evolutions.push(eig.evolution(pair.t));
                times.len() - 1
            }
        };
        let evolved = evolutions[slot].apply(&pair.psi)?;
        let fidelity = inner_product(&pair.phi, &evolved)?.norm_sqr();
        let term = 1.0 - fidelity;
        if term < -NEGATIVE_SLACK || !term.is_finite() {
            return Err(Error::Numeric(format!(
                "pair {} has fidelity {fidelity} outside [0, 1]",
                i + 1
            )));
        }
        per_pair.push(term.clamp(0.0, 1.0));
    }
    let total = par::pairwise_sum(&per_pair);
    Ok(CostValue {
        mean: total / data.len() as f64,
        total,
        per_pair,
    })
}

pub fn gradient_fd(p: &HamiltonianParam, data: &[DataPair], h: f64) -> Result<Gradient> {
    gradient_fd_masked(p, data, h, None)
}

/// Central differences `(C(w + h e_k) − C(w − h e_k)) / 2h` on the mean cost.
/// Masked-out partials are exactly zero and never evaluated.
pub fn gradient_fd_masked(
    p: &HamiltonianParam,
    data: &[DataPair],
    h: f64,
    mask: Option<&StructureMask>,
) -> Result<Gradient> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Contract(format!("finite-difference step must be > 0, got {h}")));
    }
    check_data(p.dim(), data)?;
    let flags = match mask {
        Some(m) if m.dim() != p.dim() => return Err(Error::dim("mask", p.dim(), m.dim())),
        Some(m) => m.weight_flags(),
        None => vec![true; p.weights().len()],
    };

    let partials = par::try_map_indexed(p.weights().len(), |k| -> Result<f64> {
        if !flags[k] {
            return Ok(0.0);
        }
        let mut probe = p.clone();
        let w = p.weights()[k];
        probe.weights_mut()[k] = w + h;
        let plus = cost(&probe, data)?.mean;
        probe.weights_mut()[k] = w - h;
        let minus = cost(&probe, data)?.mean;
        Ok((plus - minus) / (2.0 * h))
    })?;
    Ok(Gradient { partials, step: h })
}
