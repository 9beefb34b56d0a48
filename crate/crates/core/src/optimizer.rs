//! Full-batch momentum gradient descent on the weight vector:
//!
//! ```text
//! V_t = β·V_{t−1} + α·∇C(W_{t−1})
//! W_t = W_{t−1} − V_t
//! ```
//!
//! With `β = 0` this is plain gradient descent.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{cost, gradient_fd_masked, Gradient, DEFAULT_FD_STEP};
use crate::dataset::DataPair;
use crate::error::{Error, Result};
use crate::gauge::{fold_spectrum, needs_sign_flip, negate};
use crate::hamiltonian::{
    apply_mask, matrix_to_weights, random_weights, shift_alignment, HamiltonianParam, StructureMask,
};
use crate::linalg::SymmetricMatrix;

/// Checkpoint spacing in the per-run trace.
pub const TRACE_EVERY: usize = 10;

/// A run is abandoned once its cost exceeds this multiple of its start.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub cost_tol: f64,
    pub grad_tol: f64,
    pub fd_step: f64,
    pub init_scale: f64,
    pub restarts: usize,
    pub seed: u64,
    pub mask: Option<StructureMask>,
    pub warm_start: Option<HamiltonianParam>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.9,
            max_iters: 20_000,
            cost_tol: 1e-10,
            grad_tol: 1e-8,
            fd_step: DEFAULT_FD_STEP,
            init_scale: 1.0,
            restarts: 4,
            seed: 0,
            mask: None,
            warm_start: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Contract(msg));
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.cost_tol >= 0.0) || !(self.grad_tol >= 0.0) {
            return bad("tolerances must be >= 0".into());
        }
        if !(self.fd_step > 0.0) {
            return bad(format!("fd_step must be > 0, got {}", self.fd_step));
        }
        if !(self.init_scale > 0.0) {
            return bad(format!("init_scale must be > 0, got {}", self.init_scale));
        }
        if let Some(mask) = &self.mask {
            if mask.dim() != dim {
                return Err(Error::dim("mask", dim, mask.dim()));
            }
        }
        if let Some(w) = &self.warm_start {
            if w.dim() != dim {
                return Err(Error::dim("warm start", dim, w.dim()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub cost: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub weights: HamiltonianParam,
    pub velocity: Vec<f64>,
    pub iter: usize,
    pub best_cost: f64,
    pub trace: Vec<TracePoint>,
}

impl OptimizerState {
    pub fn new(weights: HamiltonianParam) -> Self {
        let len = weights.weights().len();
        Self {
            weights,
            velocity: vec![0.0; len],
            iter: 0,
            best_cost: f64::INFINITY,
            trace: Vec::new(),
        }
    }
}

/// Applies one momentum update with a precomputed gradient.
pub fn apply_update(state: &mut OptimizerState, gradient: &Gradient, cfg: &OptimizerConfig) -> Result<()> {
    if gradient.partials.len() != state.velocity.len() {
        return Err(Error::dim("gradient", state.velocity.len(), gradient.partials.len()));
    }
    for ((v, w), g) in state
        .velocity
        .iter_mut()
        .zip(state.weights.weights_mut())
        .zip(&gradient.partials)
    {
        *v = cfg.beta * *v + cfg.alpha * g;
        *w -= *v;
    }
    if let Some(mask) = &cfg.mask {
        state.weights = apply_mask(&state.weights, mask)?;
    }
    if let Some((index, &value)) = state
        .weights
        .weights()
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite())
    {
        return Err(Error::NonFiniteWeight { index, value });
    }
    state.iter += 1;
    Ok(())
}

/// One descent step: finite-difference gradient at the current weights,
/// then the momentum update.
pub fn step(state: &OptimizerState, data: &[DataPair], cfg: &OptimizerConfig) -> Result<OptimizerState> {
    let gradient = gradient_fd_masked(&state.weights, data, cfg.fd_step, cfg.mask.as_ref())?;
    let mut next = state.clone();
    apply_update(&mut next, &gradient, cfg)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CostTolerance,
    GradientTolerance,
    MaxIterations,
    Diverged,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::CostTolerance | StopReason::GradientTolerance)
    }
}

/// Outcome of a single descent from one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub stop: StopReason,
    pub detail: Option<String>,
    pub iterations: usize,
    pub initial_cost: f64,
    /// Lowest cost seen, attained by `weights`.
    pub best_cost: f64,
    pub weights: HamiltonianParam,
    pub trace: Vec<TracePoint>,
}

fn initial_weights(dim: usize, run: usize, cfg: &OptimizerConfig) -> Result<HamiltonianParam> {
    let start = match (&cfg.warm_start, run) {
        (Some(w), 0) => w.clone(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(run as u64);
            random_weights(dim, cfg.init_scale, &mut rng)
        }
    };
    match &cfg.mask {
        Some(mask) => apply_mask(&start, mask),
        None => Ok(start),
    }
}

/// Runs descent number `run` (its seed stream is `(cfg.seed, run)`).
pub fn run_descent(data: &[DataPair], dim: usize, run: usize, cfg: &OptimizerConfig) -> Result<RunOutcome> {
    let mut state = OptimizerState::new(initial_weights(dim, run, cfg)?);
    let mut best_weights = state.weights.clone();
    let initial_cost = cost(&state.weights, data)?.mean;

    let finish = |state: OptimizerState, best_weights, stop, detail| RunOutcome {
        run,
        stop,
        detail,
        iterations: state.iter,
        initial_cost,
        best_cost: state.best_cost,
        weights: best_weights,
        trace: state.trace,
    };

    loop {
        let c = if state.iter == 0 {
            initial_cost
        } else {
            cost(&state.weights, data)?.mean
        };
        if !c.is_finite() || c > DIVERGENCE_FACTOR * initial_cost {
            let detail = format!("cost {c:e} at iteration {} (started at {initial_cost:e})", state.iter);
            return Ok(finish(state, best_weights, StopReason::Diverged, Some(detail)));
        }
        if c < state.best_cost {
            state.best_cost = c;
            best_weights = state.weights.clone();
        }
        let checkpoint = TracePoint {
            iter: state.iter,
            cost: c,
            best: state.best_cost,
        };
        if state.iter.is_multiple_of(TRACE_EVERY) {
            state.trace.push(checkpoint);
        }

        let stop = if c <= cfg.cost_tol {
            Some(StopReason::CostTolerance)
        } else if state.iter >= cfg.max_iters {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        let gradient = match stop {
            Some(_) => None,
            None => {
                let g = gradient_fd_masked(&state.weights, data, cfg.fd_step, cfg.mask.as_ref())?;
                (g.max_abs() > cfg.grad_tol).then_some(g)
            }
        };
        let Some(gradient) = gradient else {
            let reason = stop.unwrap_or(StopReason::GradientTolerance);
            if state.trace.last() != Some(&checkpoint) {
                state.trace.push(checkpoint);
            }
            return Ok(finish(state, best_weights, reason, None));
        };

        if let Err(e) = apply_update(&mut state, &gradient, cfg) {
            return match e {
                Error::NonFiniteWeight { .. } => {
                    Ok(finish(state, best_weights, StopReason::Diverged, Some(e.to_string())))
                }
                other => Err(other),
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub stop: StopReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub iterations: usize,
    pub initial_cost: f64,
    pub best_cost: f64,
}

impl From<&RunOutcome> for RunSummary {
    fn from(r: &RunOutcome) -> Self {
        Self {
            run: r.run,
            stop: r.stop,
            detail: r.detail.clone(),
            iterations: r.iterations,
            initial_cost: r.initial_cost,
            best_cost: r.best_cost,
        }
    }
}

/// Which data-invisible symmetries were resolved on the winning weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GaugeFix {
    pub spectrum_folded: bool,
    pub sign_flipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Mean per-pair infidelity of `learned`.
    pub final_cost: f64,
    /// Sum of per-pair infidelities.
    pub final_cost_total: f64,
    pub iterations: usize,
    pub learned: SymmetricMatrix,
    pub learned_weights: HamiltonianParam,
    /// `min_f ‖reference − learned − f·I‖₂`, when a reference was given.
    pub reference_error: Option<f64>,
    /// `‖reference − learned‖₂` without alignment.
    pub raw_reference_error: Option<f64>,
    pub reference_shift: Option<f64>,
    pub wall_time: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub best_run: usize,
    pub runs: Vec<RunSummary>,
    pub gauge: GaugeFix,
    pub trace: Vec<TracePoint>,
}

impl FitReport {
    pub fn attach_reference(&mut self, reference: &SymmetricMatrix) -> Result<()> {
        let al = shift_alignment(reference, &self.learned)?;
        self.reference_error = Some(al.aligned);
        self.raw_reference_error = Some(al.raw);
        self.reference_shift = Some(al.shift);
        Ok(())
    }
}

fn check_fit_inputs(data: &[DataPair], dim: usize, cfg: &OptimizerConfig) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Contract("fit needs at least one data pair".into()));
    }
    if let Some(bad) = data.iter().find(|d| d.dim() != dim) {
        return Err(Error::dim("data pair", dim, bad.dim()));
    }
    cfg.validate(dim)
}

/// Moves the winning weights to the canonical representative of their
/// symmetry class. A fold that raises the cost is discarded.
fn fix_gauge(
    weights: HamiltonianParam,
    best_cost: f64,
    data: &[DataPair],
    cfg: &OptimizerConfig,
) -> Result<(HamiltonianParam, GaugeFix)> {
    let mut fix = GaugeFix::default();
    let mut current = weights;

    let t0 = data[0].t;
    if data.iter().all(|d| d.t.to_bits() == t0.to_bits()) {
        if let Some(folded) = fold_spectrum(&current.to_matrix(), t0)? {
            let mut candidate = matrix_to_weights(&folded);
            let mut fits_mask = true;
            if let Some(mask) = &cfg.mask {
                let masked = apply_mask(&candidate, mask)?;
                let scale = 1.0 + folded.max_abs();
                fits_mask = candidate
                    .weights()
                    .iter()
                    .zip(masked.weights())
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * scale);
                candidate = masked;
            }
            if fits_mask && cost(&candidate, data)?.mean <= best_cost + 1e-12 {
                current = candidate;
                fix.spectrum_folded = true;
            }
        }
    }

    if data.iter().all(DataPair::is_real) && needs_sign_flip(&current) {
        current = negate(&current);
        fix.sign_flipped = true;
    }
    Ok((current, fix))
}

/// Best of up to `restarts + 1` descents. Runs stop early once one reaches
/// `cost_tol`.
pub fn fit(data: &[DataPair], dim: usize, cfg: &OptimizerConfig) -> Result<FitReport> {
    let started = Instant::now();
    check_fit_inputs(data, dim, cfg)?;

    let mut outcomes: Vec<RunOutcome> = Vec::with_capacity(cfg.restarts + 1);
    for run in 0..=cfg.restarts {
        let outcome = run_descent(data, dim, run, cfg)?;
        let done = outcome.stop == StopReason::CostTolerance;
        outcomes.push(outcome);
        if done {
            break;
        }
    }
    let runs: Vec<RunSummary> = outcomes.iter().map(RunSummary::from).collect();

    let best = outcomes
        .iter()
        .filter(|o| o.stop != StopReason::Diverged)
        .min_by(|a, b| a.best_cost.total_cmp(&b.best_cost).then(a.run.cmp(&b.run)))
        .ok_or_else(|| Error::AllRunsDiverged {
            runs: runs.len(),
            details: runs
                .iter()
                .map(|r| format!("run {}: {}", r.run, r.detail.as_deref().unwrap_or("diverged")))
                .collect::<Vec<_>>()
                .join("; "),
        })?;

    let (learned_weights, gauge) = fix_gauge(best.weights.clone(), best.best_cost, data, cfg)?;
    let final_value = cost(&learned_weights, data)?;
    Ok(FitReport {
        final_cost: final_value.mean,
        final_cost_total: final_value.total,
        iterations: best.iterations,
        learned: learned_weights.to_matrix(),
        learned_weights,
        reference_error: None,
        raw_reference_error: None,
        reference_shift: None,
        wall_time: started.elapsed().as_secs_f64(),
        converged: best.stop.converged(),
        stop: best.stop,
        best_run: best.run,
        runs,
        gauge,
        trace: best.trace.clone(),
    })
}
