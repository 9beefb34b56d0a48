//! The weight-vector parameterization of real symmetric Hamiltonians.
//!
//! Weights are stored in row-major upper-triangular order:
//! `w₁₁, w₁₂, …, w₁ₙ, w₂₂, …, wₙₙ`. Gradients, masks and the JSON file
//! format all index by this ordering.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// `n(n+1)/2`.
pub const fn num_weights(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Position of `(i, j)`, `i <= j`, in the packed weight vector (0-based).
pub const fn weight_index(dim: usize, i: usize, j: usize) -> usize {
    i * dim - i * (i + 1) / 2 + j
}

/// Inverse of [`weight_index`].
pub fn weight_position(dim: usize, k: usize) -> (usize, usize) {
    let mut start = 0;
    for i in 0..dim {
        let len = dim - i;
        if k < start + len {
            return (i, i + (k - start));
        }
        start += len;
    }
    panic!("weight index {k} out of range for dim {dim}");
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParam {
    dim: usize,
    weights: Vec<f64>,
}

impl HamiltonianParam {
    pub fn new(dim: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != num_weights(dim) {
            return Err(Error::dim("weight vector", num_weights(dim), weights.len()));
        }
        Ok(Self { dim, weights })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            weights: vec![0.0; num_weights(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Weight `w_ij` (0-based, any order of `i`, `j`).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.weights[weight_index(self.dim, a, b)]
    }

    pub fn to_matrix(&self) -> SymmetricMatrix {
        weights_to_matrix(self)
    }

    pub fn from_matrix(m: &SymmetricMatrix) -> Self {
        matrix_to_weights(m)
    }
}

pub fn weights_to_matrix(p: &HamiltonianParam) -> SymmetricMatrix {
    let mut k = 0;
    SymmetricMatrix::from_upper_fn(p.dim, |_, _| {
        let w = p.weights[k];
        k += 1;
        w
    })
}

pub fn matrix_to_weights(m: &SymmetricMatrix) -> HamiltonianParam {
    let n = m.dim();
    let weights = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j))
        .collect();
    HamiltonianParam { dim: n, weights }
}

/// Sparsity pattern over the weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMask {
    dim: usize,
    allowed: BTreeSet<(usize, usize)>,
}

impl StructureMask {
    /// Every weight free.
    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            allowed: (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            allowed: BTreeSet::new(),
        }
    }

    /// Builds a mask from 0-based pairs; `(j, i)` is normalized to `(i, j)`.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut allowed = BTreeSet::new();
        for (i, j) in pairs {
            if i >= dim || j >= dim {
                return Err(Error::Contract(format!(
                    "mask entry ({}, {}) outside a {dim}x{dim} matrix",
                    i + 1,
                    j + 1
                )));
            }
            allowed.insert((i.min(j), i.max(j)));
        }
        Ok(Self { dim, allowed })
    }

    /// Same as [`Self::from_pairs`] with 1-based labels, as used in files.
    pub fn from_one_based(dim: usize, pairs: &[[usize; 2]]) -> Result<Self> {
        if let Some(bad) = pairs.iter().find(|p| p[0] == 0 || p[1] == 0) {
            return Err(Error::Contract(format!(
                "mask entry [{}, {}] is not 1-based",
                bad[0], bad[1]
            )));
        }
        Self::from_pairs(dim, pairs.iter().map(|p| (p[0] - 1, p[1] - 1)))
    }

    /// Block form forced by total-spin conservation in the 4-level
    /// hyperfine problem: diagonal plus the (2,3) coupling.
    pub fn hyperfine() -> Self {
        Self::from_pairs(4, [(0, 0), (1, 1), (1, 2), (2, 2), (3, 3)]).expect("valid pairs")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed.contains(&(i.min(j), i.max(j)))
    }

    pub fn allowed_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.allowed.iter().copied()
    }

    pub fn to_one_based(&self) -> Vec<[usize; 2]> {
        self.allowed.iter().map(|&(i, j)| [i + 1, j + 1]).collect()
    }

    /// Per-weight flags in packed order.
    pub fn weight_flags(&self) -> Vec<bool> {
        (0..num_weights(self.dim))
            .map(|k| {
                let (i, j) = weight_position(self.dim, k);
                self.allows(i, j)
            })
            .collect()
    }
}

pub fn apply_mask(p: &HamiltonianParam, mask: &StructureMask) -> Result<HamiltonianParam> {
    if p.dim != mask.dim {
        return Err(Error::dim("mask", p.dim, mask.dim));
    }
    let weights = p
        .weights
        .iter()
        .zip(mask.weight_flags())
        .map(|(&w, keep)| if keep { w } else { 0.0 })
        .collect();
    Ok(HamiltonianParam { dim: p.dim, weights })
}

/// Weights drawn i.i.d. uniform in `[-scale, scale]`.
pub fn random_weights<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> HamiltonianParam {
    let weights = (0..num_weights(dim))
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    HamiltonianParam { dim, weights }
}

pub fn random_hamiltonian(dim: usize, scale: f64, seed: u64) -> Result<HamiltonianParam> {
    if dim == 0 || !(scale > 0.0) {
        return Err(Error::Contract(format!(
            "random Hamiltonian needs dim >= 1 and scale > 0 (got {dim}, {scale})"
        )));
    }
    Ok(random_weights(dim, scale, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Result of aligning two Hamiltonians modulo `f·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftAlignment {
    /// `‖A − B‖₂`.
    pub raw: f64,
    /// `min_f ‖A − B − f·I‖₂`.
    pub aligned: f64,
    /// The minimizing `f`.
    pub shift: f64,
}

const GOLDEN_TOL: f64 = 1e-12;

/// Golden-section search for the shift minimizing `‖A − B − f·I‖₂`.
///
/// The objective is convex in `f` and its minimizer lies inside the
/// spectrum of `A − B`, so the Gershgorin interval is a valid bracket.
pub fn shift_alignment(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<ShiftAlignment> {
    let d = a.sub(b)?;
    let n = d.dim();
    let objective = |f: f64| d.shifted(-f).spectral_norm();
    let raw = d.spectral_norm();
    if n == 0 {
        return Ok(ShiftAlignment {
            raw,
            aligned: 0.0,
            shift: 0.0,
        });
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| d.get(i, j).abs()).sum();
        lo = lo.min(d.get(i, i) - radius);
        hi = hi.max(d.get(i, i) + radius);
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > GOLDEN_TOL * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let (shift, aligned) = [(x1, f1), (x2, f2), (mid, objective(mid))]
        .into_iter()
        .fold((mid, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
    Ok(ShiftAlignment {
        raw,
        aligned,
        shift,
    })
}

pub fn shift_aligned_error(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<f64> {
    Ok(shift_alignment(a, b)?.aligned)
}

/// On-disk Hamiltonian: `{ "dim": n, "weights": [...], "mask": [[i, j], ...] }`
/// with 1-based mask labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianFile {
    pub dim: usize,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<[usize; 2]>>,
}

impl HamiltonianFile {
    pub fn new(param: &HamiltonianParam, mask: Option<&StructureMask>) -> Self {
        Self {
            dim: param.dim,
            weights: param.weights.clone(),
            mask: mask.map(StructureMask::to_one_based),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("Hamiltonian file, line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn param(&self) -> Result<HamiltonianParam> {
        HamiltonianParam::new(self.dim, self.weights.clone())
    }

    pub fn structure_mask(&self) -> Result<Option<StructureMask>> {
        self.mask
            .as_deref()
            .map(|m| StructureMask::from_one_based(self.dim, m))
            .transpose()
    }
}
