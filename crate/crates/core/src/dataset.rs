//! Data pairs and the simulated experiments that produce them.

mod table;

pub use table::{Amplitudes, CountRow, CountTable, PreparedState};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{expm_unitary, ComplexMatrix, ComplexVector, SymmetricMatrix};
use crate::par;

pub const NORM_TOL: f64 = 1e-9;

/// Nominal shot count used to encode exact probabilities as counts.
pub const EXACT_SHOTS: u64 = 1_000_000;

/// Depolarizing strength matching the 5% noise level of the hyperfine data.
pub const DEFAULT_NOISE: f64 = 0.05;

/// Evolution time of the hyperfine worked example.
pub const DEFAULT_T: f64 = 0.785;

/// Prepared state `psi` and the output `phi` observed after time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPair {
    pub psi: ComplexVector,
    pub phi: ComplexVector,
    pub t: f64,
}

impl DataPair {
    pub fn new(psi: ComplexVector, phi: ComplexVector, t: f64) -> Result<Self> {
        if psi.dim() != phi.dim() {
            return Err(Error::dim("data pair", psi.dim(), phi.dim()));
        }
        if !psi.is_normalized(NORM_TOL) || !phi.is_normalized(NORM_TOL) {
            return Err(Error::Contract(format!(
                "data pair states must be normalized (|psi| = {}, |phi| = {})",
                psi.norm(),
                phi.norm()
            )));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Contract(format!("evolution time must be finite and >= 0, got {t}")));
        }
        Ok(Self { psi, phi, t })
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    pub fn is_real(&self) -> bool {
        self.psi.is_real() && self.phi.is_real()
    }
}

/// Prepared-state labels for the `1 + n + C(n,2)` design: uniform
/// superposition, each basis state, then `(e_i + e_j)/√2` for `i < j`.
pub fn standard_prepared(n: usize) -> Vec<PreparedState> {
    std::iter::once(PreparedState::Uniform)
        .chain((1..=n).map(|index| PreparedState::Basis { index }))
        .chain((1..=n).flat_map(|i| ((i + 1)..=n).map(move |j| PreparedState::Pair { i, j })))
        .collect()
}

/// The basis states followed by the uniform superposition, the row layout of
/// the hyperfine count table.
pub fn basis_and_uniform_prepared(n: usize) -> Vec<PreparedState> {
    (1..=n)
        .map(|index| PreparedState::Basis { index })
        .chain(std::iter::once(PreparedState::Uniform))
        .collect()
}

pub fn standard_input_states(n: usize) -> Vec<ComplexVector> {
    standard_prepared(n)
        .iter()
        .map(|p| p.state(n).expect("standard states are valid"))
        .collect()
}

/// `√(counts[k] / shots)` entry-wise.
pub fn counts_to_amplitudes(counts: &[u64], shots: u64) -> Result<ComplexVector> {
    let total: u64 = counts.iter().sum();
    if shots == 0 {
        return Err(Error::Contract("shots must be positive".into()));
    }
    if total != shots {
        return Err(Error::Contract(format!("counts sum to {total} but shots is {shots}")));
    }
    let s = shots as f64;
    Ok(ComplexVector::new(
        counts
            .iter()
            .map(|&c| Complex64::new((c as f64 / s).sqrt(), 0.0))
            .collect(),
    ))
}

/// `e^{-itH} ψ`.
pub fn exact_output(h: &SymmetricMatrix, psi: &ComplexVector, t: f64) -> Result<ComplexVector> {
    if h.dim() != psi.dim() {
        return Err(Error::dim("exact output", h.dim(), psi.dim()));
    }
    expm_unitary(h, t)?.apply(psi)
}

/// Noise-free data pairs whose outputs keep their phases.
pub fn exact_pairs(h: &SymmetricMatrix, inputs: &[ComplexVector], t: f64) -> Result<Vec<DataPair>> {
    let u = expm_unitary(h, t)?;
    inputs
        .iter()
        .map(|psi| DataPair::new(psi.clone(), u.apply(psi)?, t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Encode the true probabilities instead of sampling.
    Exact,
    Finite(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub t: f64,
    pub shots: Shots,
    /// Depolarizing strength ε: `p ← (1 − ε)p + ε/n`.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            t: DEFAULT_T,
            shots: Shots::Exact,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Runs the black-box experiment for each prepared state.
///
/// Row `r` samples from its own stream `(seed, r)`, so the table does not
/// depend on scheduling. In exact mode without noise the rows also carry the
/// complex output amplitudes.
pub fn simulate_counts(
    h: &SymmetricMatrix,
    inputs: &[PreparedState],
    opts: &SimulationOptions,
) -> Result<CountTable> {
    let n = h.dim();
    if !(0.0..=1.0).contains(&opts.noise) {
        return Err(Error::Contract(format!("noise must lie in [0, 1], got {}", opts.noise)));
    }
    if let Shots::Finite(0) = opts.shots {
        return Err(Error::Contract("shots must be positive".into()));
    }
    let u = expm_unitary(h, opts.t)?;
    let rows = par::try_map_indexed(inputs.len(), |r| simulate_row(&u, n, &inputs[r], r, opts))?;
    Ok(CountTable { dim: n, rows })
}

fn simulate_row(
    u: &ComplexMatrix,
    n: usize,
    prepared: &PreparedState,
    row: usize,
    opts: &SimulationOptions,
) -> Result<CountRow> {
    let psi = prepared.state(n)?;
    let out = u.apply(&psi)?;
    let mut probs = out.probabilities();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p = (1.0 - opts.noise) * (*p / total) + opts.noise / n as f64;
    }

    let (counts, shots, output) = match opts.shots {
        Shots::Exact => {
            let output = (opts.noise == 0.0).then(|| Amplitudes::from(&out));
            (largest_remainder(&probs, EXACT_SHOTS), EXACT_SHOTS, output)
        }
        Shots::Finite(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(row as u64);
            (multinomial(&probs, shots, &mut rng)?, shots, None)
        }
    };
    Ok(CountRow {
        prepared: prepared.clone(),
        counts,
        shots,
        t: opts.t,
        output,
    })
}

/// Integer counts summing to `total` whose ratios are closest to `probs`.
fn largest_remainder(probs: &[f64], total: u64) -> Vec<u64> {
    let scaled: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[k] += 1;
    }
    counts
}

/// One multinomial draw as a chain of conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::Numeric(format!("binomial({remaining}, {q}): {e}")))?
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

/// Converts each table row into a data pair.
pub fn pairs_from_table(table: &CountTable) -> Result<Vec<DataPair>> {
    table.validate()?;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let wrap = |e: Error| Error::InvalidRow {
                row: r + 1,
                message: e.to_string(),
            };
            let psi = row.prepared.state(table.dim).map_err(wrap)?;
            let phi = match &row.output {
                Some(amp) => amp.to_vector().map_err(wrap)?,
                None => counts_to_amplitudes(&row.counts, row.shots).map_err(wrap)?,
            };
            DataPair::new(psi, phi, row.t).map_err(wrap)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::random_hamiltonian;
    use approx::assert_abs_diff_eq;

    pub(crate) fn hyperfine() -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 2.0, 0.0],
            vec![0.0, 2.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn standard_state_counts() {
        assert_eq!(standard_input_states(2).len(), 4);
        assert_eq!(standard_input_states(4).len(), 11);
        assert_eq!(standard_input_states(8).len(), 37);
        for n in 2..10 {
            assert!(standard_input_states(n).iter().all(|v| v.is_normalized(1e-15)));
        }
    }

    #[test]
    fn standard_states_for_two_levels() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let states = standard_input_states(2);
        let close = |a: &ComplexVector, b: &ComplexVector| {
            a.entries().iter().zip(b.entries()).all(|(x, y)| (x - y).norm() < 1e-15)
        };
        assert!(close(&states[0], &ComplexVector::from_real(&[r, r])));
        assert_eq!(states[1], ComplexVector::basis(2, 0));
        assert_eq!(states[2], ComplexVector::basis(2, 1));
        assert!(close(&states[3], &ComplexVector::from_real(&[r, r])));
    }

    #[test]
    fn count_conversion() {
        let v = counts_to_amplitudes(&[993, 12, 8, 11], 1024).unwrap();
        let want = [993.0f64, 12.0, 8.0, 11.0].map(|c| (c / 1024.0).sqrt());
        assert_eq!(v.re(), want.to_vec());
        assert_eq!(counts_to_amplitudes(&[1024, 0, 0, 0], 1024).unwrap(), ComplexVector::basis(4, 0));
        assert_eq!(
            counts_to_amplitudes(&[256; 4], 1024).unwrap(),
            ComplexVector::from_real(&[0.5; 4])
        );
        assert!(counts_to_amplitudes(&[10, 34, 47, 933], 981).is_err());
        assert!(counts_to_amplitudes(&[], 0).is_err());
    }

    #[test]
    fn zero_hamiltonian_leaves_state_alone() {
        let psi = standard_input_states(3)[0].clone();
        let out = exact_output(&SymmetricMatrix::zeros(3), &psi, 4.0).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn hyperfine_outputs() {
        let h = hyperfine();
        let p = exact_output(&h, &ComplexVector::basis(4, 1), 0.785).unwrap().probabilities();
        let want = [0.0, 0.0, 1.0, 0.0];
        for (a, b) in p.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-3);
        }
        // cos²(2t) leaks back into state 2
        assert_abs_diff_eq!(p[1], (2.0f64 * 0.785).cos().powi(2), epsilon = 1e-14);

        let uniform = ComplexVector::from_real(&[0.5; 4]);
        let p = exact_output(&h, &uniform, 0.785).unwrap().probabilities();
        for a in p {
            assert_abs_diff_eq!(a, 0.25, epsilon = 1e-3);
        }
    }

    #[test]
    fn exact_output_preserves_norm() {
        for seed in 0..20 {
            let h = random_hamiltonian(5, 2.0, seed).unwrap().to_matrix();
            for psi in standard_input_states(5) {
                let out = exact_output(&h, &psi, 0.3 * seed as f64).unwrap();
                assert!(out.is_normalized(1e-9));
            }
        }
    }

    #[test]
    fn zero_hamiltonian_counts_stay_put() {
        let opts = SimulationOptions {
            shots: Shots::Finite(500),
            seed: 3,
            ..Default::default()
        };
        let table = simulate_counts(&SymmetricMatrix::zeros(3), &[PreparedState::Basis { index: 1 }], &opts)
            .unwrap();
        assert_eq!(table.rows[0].counts, vec![500, 0, 0]);
    }

    #[test]
    fn exact_mode_counts_sum_and_carry_phases() {
        let h = random_hamiltonian(4, 1.0, 8).unwrap().to_matrix();
        let table = simulate_counts(&h, &standard_prepared(4), &SimulationOptions::default()).unwrap();
        table.validate().unwrap();
        let pairs = pairs_from_table(&table).unwrap();
        for (pair, psi) in pairs.iter().zip(standard_input_states(4)) {
            let exact = exact_output(&h, &psi, DEFAULT_T).unwrap();
            for (a, b) in pair.phi.probabilities().iter().zip(exact.probabilities()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
        for row in &table.rows {
            assert_eq!(row.counts.iter().sum::<u64>(), EXACT_SHOTS);
        }
    }

    #[test]
    fn finite_shots_are_seeded() {
        let h = hyperfine();
        let opts = SimulationOptions {
            shots: Shots::Finite(1024),
            noise: DEFAULT_NOISE,
            seed: 17,
            ..Default::default()
        };
        let a = simulate_counts(&h, &basis_and_uniform_prepared(4), &opts).unwrap();
        let b = simulate_counts(&h, &basis_and_uniform_prepared(4), &opts).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let c = simulate_counts(&h, &basis_and_uniform_prepared(4), &SimulationOptions { seed: 18, ..opts })
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn largest_remainder_hits_total() {
        let c = largest_remainder(&[1.0 / 3.0; 3], 100);
        assert_eq!(c, vec![34, 33, 33]);
        assert_eq!(largest_remainder(&[0.5, 0.5], 7).iter().sum::<u64>(), 7);
    }

    #[test]
    fn pairs_from_tables() {
        let table = CountTable {
            dim: 4,
            rows: vec![CountRow {
                prepared: PreparedState::Basis { index: 1 },
                counts: vec![1024, 0, 0, 0],
                shots: 1024,
                t: 0.0,
                output: None,
            }],
        };
        let pairs = pairs_from_table(&table).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].psi, ComplexVector::basis(4, 0));
        assert_eq!(pairs[0].phi, ComplexVector::basis(4, 0));
        assert_eq!(pairs[0].t, 0.0);

        let empty = CountTable { dim: 4, rows: vec![] };
        assert!(pairs_from_table(&empty).unwrap().is_empty());
    }

    #[test]
    fn data_pair_validation() {
        let e = ComplexVector::basis(2, 0);
        assert!(DataPair::new(e.clone(), ComplexVector::from_real(&[1.0, 1.0]), 0.1).is_err());
        assert!(DataPair::new(e.clone(), e.clone(), -1.0).is_err());
        assert!(DataPair::new(e.clone(), ComplexVector::basis(3, 0), 0.1).is_err());
        assert!(DataPair::new(e.clone(), e, 0.1).unwrap().is_real());
    }
}
