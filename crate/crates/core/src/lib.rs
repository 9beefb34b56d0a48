//! Learning real symmetric Hamiltonians from measured transition data.
//!
//! A Hamiltonian `H` of dimension `n` is stored as its upper triangle
//! (`n(n+1)/2` weights). Data pairs `(ψ, φ, t)` record an input state and the
//! output observed after evolving for time `t`; the cost of a candidate is the
//! mean infidelity `1 − |⟨φ|e^{−itH}|ψ⟩|²` over pairs, minimized by momentum
//! gradient descent with finite-difference gradients.
//!
//! ```
//! use hamlearn::{dataset, hamiltonian::random_hamiltonian, optimizer};
//!
//! let truth = random_hamiltonian(2, 1.0, 7).unwrap();
//! let data = dataset::exact_pairs(&truth.to_matrix(), &dataset::standard_input_states(2), 0.785).unwrap();
//! let report = optimizer::fit(&data, 2, &optimizer::OptimizerConfig::default()).unwrap();
//! assert!(report.final_cost < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod gauge;
pub mod hamiltonian;
pub mod linalg;
pub mod optimizer;
pub mod par;

pub use cost::{cost, cost_of_matrix, gradient_fd, gradient_fd_masked, CostValue, Gradient};
pub use dataset::{CountTable, DataPair, PreparedState};
pub use error::{Error, Result};
pub use hamiltonian::{shift_aligned_error, HamiltonianParam, StructureMask};
pub use linalg::{ComplexMatrix, ComplexVector, SymmetricMatrix};
pub use optimizer::{fit, FitReport, OptimizerConfig};
