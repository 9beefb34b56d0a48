//! The `hamlearn` command line.
//!
//! Exit codes: 0 success, 2 input error, 3 learning stopped at `max_iters`,
//! 4 every learning run diverged, 1 when `bench-expm` finds a disagreement.

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{Shots, DEFAULT_T};
use crate::error::Error;

pub use manifest::{sha256_file, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hamlearn", version, about = "Learn real symmetric Hamiltonians from measurement counts")]
pub struct Cli {
    /// Seed for simulation noise, initializations and benchmark matrices.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Suppress progress and summaries on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    /// Primary output file; a `<stem>.manifest.json` is written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate a count table from a known Hamiltonian.
    Simulate(SimulateArgs),
    /// Fit a Hamiltonian to a count table.
    Learn(LearnArgs),
    /// Cost of a Hamiltonian on a count table.
    Eval(EvalArgs),
    /// Raw and shift-aligned distance between two Hamiltonians.
    Compare(CompareArgs),
    /// Time the eigendecomposition exponential against scaled Taylor.
    BenchExpm(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputSet {
    /// Uniform superposition, every basis state, every equal-weight pair.
    Standard,
    /// Basis states then the uniform superposition.
    BasisUniform,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Hamiltonian JSON file.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_T)]
    pub t: f64,
    /// A positive count, or `exact`.
    #[arg(long, default_value = "exact", value_parser = parse_shots)]
    pub shots: Shots,
    /// Depolarizing strength; bare `--noise` means 0.05.
    #[arg(long, num_args = 0..=1, default_value_t = 0.0, default_missing_value = "0.05")]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = InputSet::Standard)]
    pub inputs: InputSet,
}

#[derive(Args, Debug, Default)]
pub struct OptimizerFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub cost_tol: Option<f64>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Count table: JSON, or CSV shaped like the hyperfine table.
    #[arg(long)]
    pub data: PathBuf,
    /// Evolution time for CSV rows.
    #[arg(long, default_value_t = DEFAULT_T)]
    pub t: f64,
    /// Shots per CSV row (default: each row's total).
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Optimizer settings as JSON; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerFlags,
    /// `hyperfine`, `full`, or a JSON file `{"dim": n, "allowed": [[i, j], ...]}`.
    #[arg(long)]
    pub mask: Option<String>,
    /// Hamiltonian file to start the first run from.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Known Hamiltonian; the report then includes the shift-aligned error.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Fit report path (default `<stem>.report.json` beside the output).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8, 16, 32])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Largest |t|·max|H_ij| in the benchmark matrices.
    #[arg(long, default_value_t = 5.0)]
    pub reach: f64,
}

fn parse_shots(s: &str) -> Result<Shots, String> {
    if s.eq_ignore_ascii_case("exact") {
        return Ok(Shots::Exact);
    }
    match s.parse::<u64>() {
        Ok(0) => Err("shots must be positive".into()),
        Ok(n) => Ok(Shots::Finite(n)),
        Err(_) => Err(format!("expected a positive integer or `exact`, got {s:?}")),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AllRunsDiverged { .. } => EXIT_DIVERGED,
        _ => EXIT_INPUT,
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_INPUT;
        }
        if let Err(msg) = crate::par::init_thread_pool(threads) {
            eprintln!("warning: {msg}");
        }
    }
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DEFAULT_NOISE;

    #[test]
    fn shots_parsing() {
        assert_eq!(parse_shots("exact"), Ok(Shots::Exact));
        assert_eq!(parse_shots("1024"), Ok(Shots::Finite(1024)));
        assert!(parse_shots("0").is_err());
        assert!(parse_shots("-3").is_err());
    }

    #[test]
    fn noise_flag_forms() {
        let parse = |extra: &[&str]| {
            let mut argv = vec!["hamlearn", "simulate", "--truth", "h.json"];
            argv.extend_from_slice(extra);
            match Cli::try_parse_from(argv).unwrap().command {
                Command::Simulate(s) => s.noise,
                _ => unreachable!(),
            }
        };
        assert_eq!(parse(&[]), 0.0);
        assert_eq!(parse(&["--noise"]), DEFAULT_NOISE);
        assert_eq!(parse(&["--noise", "0.2"]), 0.2);
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "hamlearn", "learn", "--data", "d.csv", "--seed", "7", "--threads", "2", "--out", "o.json",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(7));
        assert_eq!(cli.threads, Some(2));
        assert_eq!(cli.out.as_deref(), Some(std::path::Path::new("o.json")));
    }

    #[test]
    fn sizes_are_comma_separated() {
        let cli = Cli::try_parse_from(["hamlearn", "bench-expm", "--sizes", "1,4", "--trials", "3"]).unwrap();
        match cli.command {
            Command::BenchExpm(b) => assert_eq!(b.sizes, vec![1, 4]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exit_codes() {
        let diverged = Error::AllRunsDiverged { runs: 1, details: String::new() };
        assert_eq!(exit_code(&diverged), EXIT_DIVERGED);
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_INPUT);
    }
}
