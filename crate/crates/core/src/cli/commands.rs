use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::manifest::RunManifest;
use super::{
    BenchArgs, Cli, Command, CompareArgs, DataArgs, EvalArgs, InputSet, LearnArgs, SimulateArgs, EXIT_CHECK_FAILED,
    EXIT_NOT_CONVERGED, EXIT_OK,
};
use crate::cost::cost;
use crate::dataset::{
    basis_and_uniform_prepared, pairs_from_table, simulate_counts, standard_prepared, CountTable, DataPair,
    SimulationOptions,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{random_weights, shift_alignment, HamiltonianFile, HamiltonianParam, StructureMask};
use crate::linalg::{expm_taylor_scaled, expm_unitary, max_norm, DEFAULT_TAYLOR_TERMS};
use crate::optimizer::{fit, FitReport, GaugeFix, OptimizerConfig, RunSummary, StopReason, TracePoint};

/// Agreement required between the two exponentials in `bench-expm`.
pub const BENCH_TOLERANCE: f64 = 1e-12;

pub(super) fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Learn(a) => learn(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Compare(a) => compare(cli, a),
        Command::BenchExpm(a) => bench_expm(cli, a),
    }
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(0)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes the primary output to `--out`, or stdout when absent.
fn emit(cli: &Cli, text: &str) -> Result<Option<PathBuf>> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(Some(path.clone()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(None)
        }
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn read_hamiltonian(path: &Path) -> Result<(HamiltonianParam, Option<StructureMask>)> {
    let file = HamiltonianFile::read(path)?;
    Ok((file.param()?, file.structure_mask()?))
}

fn read_data(args: &DataArgs) -> Result<(CountTable, Vec<DataPair>)> {
    let table = CountTable::read(&args.data, args.t, args.shots)?;
    let pairs = pairs_from_table(&table)?;
    if pairs.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", args.data.display())));
    }
    Ok((table, pairs))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<i32> {
    let started = Instant::now();
    let (truth, _) = read_hamiltonian(&a.truth)?;
    let n = truth.dim();
    let prepared = match a.inputs {
        InputSet::Standard => standard_prepared(n),
        InputSet::BasisUniform => basis_and_uniform_prepared(n),
    };
    let opts = SimulationOptions {
        t: a.t,
        shots: a.shots,
        noise: a.noise,
        seed: seed(cli),
    };
    let table = simulate_counts(&truth.to_matrix(), &prepared, &opts)?;
    let csv = cli.out.as_deref().is_some_and(is_csv);
    let text = if csv { table.to_csv() } else { table.to_json() };

    if let Some(out) = emit(cli, &text)? {
        let shots = match a.shots {
            crate::dataset::Shots::Exact => json!("exact"),
            crate::dataset::Shots::Finite(k) => json!(k),
        };
        let inputs = a.inputs.to_possible_value().map(|v| v.get_name().to_string());
        let config = json!({ "t": a.t, "shots": shots, "noise": a.noise, "inputs": inputs });
        let mut manifest = RunManifest::new("simulate", seed(cli), config);
        manifest.input(&a.truth)?;
        manifest.output(&out);
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        manifest.write_beside(&out)?;
        if !cli.quiet {
            eprintln!("wrote {} rows for n = {n} to {}", table.rows.len(), out.display());
        }
    }
    Ok(EXIT_OK)
}

/// Optimizer settings as stored in a `--config` file. Every field is
/// optional; missing ones keep their defaults.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub max_iters: Option<usize>,
    pub cost_tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub init_scale: Option<f64>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    /// 1-based `[i, j]` pairs that may be nonzero.
    pub mask: Option<Vec<[usize; 2]>>,
    pub warm_start: Option<HamiltonianFile>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Parse(format!(
                "{}: line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }
}

/// `{"dim": n, "allowed": [[i, j], ...]}` with 1-based labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    dim: usize,
    allowed: Vec<[usize; 2]>,
}

fn parse_mask(choice: &str, dim: usize) -> Result<StructureMask> {
    let mask = match choice {
        "hyperfine" => StructureMask::hyperfine(),
        "full" => StructureMask::full(dim),
        path => {
            let text = std::fs::read_to_string(path)?;
            let file: MaskFile = serde_json::from_str(&text).map_err(|e| {
                Error::Parse(format!("{path}: line {} column {}: {e}", e.line(), e.column()))
            })?;
            StructureMask::from_one_based(file.dim, &file.allowed)?
        }
    };
    if mask.dim() != dim {
        return Err(Error::dim("mask", dim, mask.dim()));
    }
    Ok(mask)
}

fn resolve_config(cli: &Cli, a: &LearnArgs, dim: usize) -> Result<OptimizerConfig> {
    let file = match &a.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    let flags = &a.optimizer;
    let base = OptimizerConfig::default();
    let mut cfg = OptimizerConfig {
        alpha: flags.alpha.or(file.alpha).unwrap_or(base.alpha),
        beta: flags.beta.or(file.beta).unwrap_or(base.beta),
        max_iters: flags.max_iters.or(file.max_iters).unwrap_or(base.max_iters),
        cost_tol: flags.cost_tol.or(file.cost_tol).unwrap_or(base.cost_tol),
        grad_tol: flags.grad_tol.or(file.grad_tol).unwrap_or(base.grad_tol),
        fd_step: flags.fd_step.or(file.fd_step).unwrap_or(base.fd_step),
        init_scale: flags.init_scale.or(file.init_scale).unwrap_or(base.init_scale),
        restarts: flags.restarts.or(file.restarts).unwrap_or(base.restarts),
        seed: cli.seed.or(file.seed).unwrap_or(base.seed),
        mask: None,
        warm_start: None,
    };
    cfg.mask = match (&a.mask, &file.mask) {
        (Some(choice), _) => Some(parse_mask(choice, dim)?),
        (None, Some(pairs)) => Some(StructureMask::from_one_based(dim, pairs)?),
        (None, None) => None,
    };
    cfg.warm_start = match (&a.warm_start, &file.warm_start) {
        (Some(path), _) => Some(read_hamiltonian(path)?.0),
        (None, Some(h)) => Some(h.param()?),
        (None, None) => None,
    };
    cfg.validate(dim)?;
    Ok(cfg)
}

fn config_json(cfg: &OptimizerConfig) -> serde_json::Value {
    json!({
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "max_iters": cfg.max_iters,
        "cost_tol": cfg.cost_tol,
        "grad_tol": cfg.grad_tol,
        "fd_step": cfg.fd_step,
        "init_scale": cfg.init_scale,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
        "mask": cfg.mask.as_ref().map(StructureMask::to_one_based),
        "warm_start": cfg.warm_start.as_ref().map(|w| HamiltonianFile::new(w, None)),
    })
}

#[derive(Serialize)]
struct ReferenceJson {
    aligned_error: f64,
    raw_error: f64,
    shift: f64,
}

/// On-disk form of a fit report.
#[derive(Serialize)]
struct ReportJson<'a> {
    final_cost: f64,
    final_cost_total: f64,
    iterations: usize,
    converged: bool,
    stop: StopReason,
    best_run: usize,
    wall_time_s: f64,
    learned: Vec<Vec<f64>>,
    weights: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceJson>,
    gauge: GaugeFix,
    config: serde_json::Value,
    runs: &'a [RunSummary],
    trace: &'a [TracePoint],
}

fn report_json(report: &FitReport, cfg: &OptimizerConfig) -> String {
    let reference = match (report.reference_error, report.raw_reference_error, report.reference_shift) {
        (Some(aligned_error), Some(raw_error), Some(shift)) => Some(ReferenceJson {
            aligned_error,
            raw_error,
            shift,
        }),
        _ => None,
    };
    to_pretty_json(&ReportJson {
        final_cost: report.final_cost,
        final_cost_total: report.final_cost_total,
        iterations: report.iterations,
        converged: report.converged,
        stop: report.stop,
        best_run: report.best_run,
        wall_time_s: report.wall_time,
        learned: report.learned.to_rows(),
        weights: report.learned_weights.weights(),
        reference,
        gauge: report.gauge,
        config: config_json(cfg),
        runs: &report.runs,
        trace: &report.trace,
    })
}

fn learn(cli: &Cli, a: &LearnArgs) -> Result<i32> {
    let started = Instant::now();
    let (table, data) = read_data(&a.data)?;
    let n = table.dim;
    let cfg = resolve_config(cli, a, n)?;

    let reference = match &a.reference {
        Some(path) => {
            let (h, _) = read_hamiltonian(path)?;
            if h.dim() != n {
                return Err(Error::dim("reference Hamiltonian", n, h.dim()));
            }
            Some(h.to_matrix())
        }
        None => None,
    };

    let mut report = fit(&data, n, &cfg)?;
    if let Some(h) = &reference {
        report.attach_reference(h)?;
    }

    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("learned.json"));
    let report_path = a.report.clone().unwrap_or_else(|| out.with_extension("report.json"));
    std::fs::write(&out, HamiltonianFile::new(&report.learned_weights, cfg.mask.as_ref()).to_json())?;
    std::fs::write(&report_path, report_json(&report, &cfg))?;

    let mut manifest = RunManifest::new("learn", cfg.seed, config_json(&cfg));
    manifest.input(&a.data.data)?;
    for path in [&a.config, &a.warm_start, &a.reference].into_iter().flatten() {
        manifest.input(path)?;
    }
    if let Some(choice) = &a.mask {
        if Path::new(choice).is_file() {
            manifest.input(Path::new(choice))?;
        }
    }
    manifest.output(&out);
    manifest.output(&report_path);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write_beside(&out)?;

    if !cli.quiet {
        eprintln!(
            "cost {:.10} (total {:.10}) after {} iterations of run {} of {}: {:?}",
            report.final_cost,
            report.final_cost_total,
            report.iterations,
            report.best_run,
            report.runs.len(),
            report.stop
        );
        if let Some(err) = report.reference_error {
            eprintln!("shift-aligned error vs reference: {err:e}");
        }
        eprintln!("wrote {} and {}", out.display(), report_path.display());
    }
    Ok(if report.stop == StopReason::MaxIterations {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<i32> {
    let started = Instant::now();
    let (h, _) = read_hamiltonian(&a.hamiltonian)?;
    let (table, data) = read_data(&a.data)?;
    if h.dim() != table.dim {
        return Err(Error::dim("Hamiltonian vs data", table.dim, h.dim()));
    }
    let value = cost(&h, &data)?;
    let text = to_pretty_json(&json!({
        "pairs": data.len(),
        "total": value.total,
        "mean": value.mean,
        "per_pair": value.per_pair,
    }));
    if let Some(out) = emit(cli, &text)? {
        let mut manifest = RunManifest::new("eval", seed(cli), json!({ "t": a.data.t, "shots": a.data.shots }));
        manifest.input(&a.hamiltonian)?;
        manifest.input(&a.data.data)?;
        manifest.output(&out);
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        manifest.write_beside(&out)?;
    }
    Ok(EXIT_OK)
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<i32> {
    let started = Instant::now();
    let (ha, _) = read_hamiltonian(&a.a)?;
    let (hb, _) = read_hamiltonian(&a.b)?;
    if ha.dim() != hb.dim() {
        return Err(Error::dim("compared Hamiltonians", ha.dim(), hb.dim()));
    }
    let al = shift_alignment(&ha.to_matrix(), &hb.to_matrix())?;
    let text = to_pretty_json(&json!({ "raw": al.raw, "aligned": al.aligned, "shift": al.shift }));
    if let Some(out) = emit(cli, &text)? {
        let mut manifest = RunManifest::new("compare", seed(cli), json!({}));
        manifest.input(&a.a)?;
        manifest.input(&a.b)?;
        manifest.output(&out);
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        manifest.write_beside(&out)?;
    }
    Ok(EXIT_OK)
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub method: &'static str,
    pub mean_ns: f64,
    pub stddev_ns: f64,
    pub max_norm_diff: f64,
}

/// Times both exponentials on `trials` random matrices per size. Matrix
/// `k` of size `n` comes from stream `n` of `seed`, with `t` drawn so that
/// `|t|·max|H_ij|` stays within `reach`.
pub fn bench_rows(sizes: &[usize], trials: usize, reach: f64, seed: u64) -> Result<Vec<BenchRow>> {
    if trials == 0 {
        return Err(Error::Contract("trials must be positive".into()));
    }
    if !(reach > 0.0) {
        return Err(Error::Contract(format!("reach must be > 0, got {reach}")));
    }
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(Error::Contract("sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let mut eigen_ns = Vec::with_capacity(trials);
        let mut taylor_ns = Vec::with_capacity(trials);
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let h = random_weights(n, 1.0, &mut rng).to_matrix();
            let t = reach * rng.random_range(0.05..=1.0) / h.max_abs().max(1e-300);

            let clock = Instant::now();
            let u = expm_unitary(&h, t)?;
            eigen_ns.push(clock.elapsed().as_nanos() as f64);

            let clock = Instant::now();
            let v = expm_taylor_scaled(&h, t, DEFAULT_TAYLOR_TERMS)?;
            taylor_ns.push(clock.elapsed().as_nanos() as f64);

            worst = worst.max(max_norm(&u.sub(&v)?));
        }
        for (method, samples) in [("eigen", &eigen_ns), ("taylor_scaled", &taylor_ns)] {
            let (mean_ns, stddev_ns) = mean_std(samples);
            rows.push(BenchRow {
                n,
                method,
                mean_ns,
                stddev_ns,
                max_norm_diff: worst,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,method,mean_ns,stddev_ns,max_norm_diff\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.1},{:.1},{:e}\n",
            r.n, r.method, r.mean_ns, r.stddev_ns, r.max_norm_diff
        ));
    }
    out
}

fn bench_expm(cli: &Cli, a: &BenchArgs) -> Result<i32> {
    let started = Instant::now();
    let rows = bench_rows(&a.sizes, a.trials, a.reach, seed(cli))?;
    if let Some(out) = emit(cli, &bench_csv(&rows))? {
        let config = json!({ "sizes": a.sizes, "trials": a.trials, "reach": a.reach });
        let mut manifest = RunManifest::new("bench-expm", seed(cli), config);
        manifest.output(&out);
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        manifest.write_beside(&out)?;
    }
    if !cli.quiet {
        for pair in rows.chunks(2) {
            eprintln!(
                "n = {:>3}: taylor/eigen time ratio {:.1}, max difference {:e}",
                pair[0].n,
                pair[1].mean_ns / pair[0].mean_ns,
                pair[0].max_norm_diff
            );
        }
    }
    let failed: Vec<usize> = rows
        .iter()
        .filter(|r| r.method == "eigen" && !(r.max_norm_diff <= BENCH_TOLERANCE))
        .map(|r| r.n)
        .collect();
    if !failed.is_empty() {
        eprintln!("error: exponentials disagree by more than {BENCH_TOLERANCE:e} for n in {failed:?}");
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}
