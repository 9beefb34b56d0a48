//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! to stdout (outside the test harness capture) before asserting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hamlearn::cost::{cost, cost_of_matrix, gradient_fd};
use hamlearn::dataset::{exact_pairs, pairs_from_table, standard_input_states, CountTable, DataPair};
use hamlearn::hamiltonian::{random_hamiltonian, shift_aligned_error, HamiltonianFile, StructureMask};
use hamlearn::linalg::{expm_taylor_scaled, expm_unitary, max_norm, ComplexVector, DEFAULT_TAYLOR_TERMS};
use hamlearn::optimizer::{fit, OptimizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_COST: f64 = 0.044891608584168144;
const T: f64 = 0.785;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn hyperfine_counts() -> Vec<DataPair> {
    let table = CountTable::read(&data_dir().join("hyperfine_counts.csv"), T, Some(1024)).unwrap();
    pairs_from_table(&table).unwrap()
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    let re: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let im: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = re.iter().chain(&im).map(|x| x * x).sum::<f64>().sqrt();
    let re: Vec<f64> = re.iter().map(|x| x / norm).collect();
    let im: Vec<f64> = im.iter().map(|x| x / norm).collect();
    ComplexVector::from_parts(&re, &im).unwrap()
}

#[test]
fn criterion_1_golden_hyperfine_cost() {
    let started = Instant::now();
    let h = HamiltonianFile::read(&data_dir().join("hyperfine_real.json")).unwrap().param().unwrap();
    let value = cost(&h, &hyperfine_counts()).unwrap();
    let elapsed = started.elapsed();
    let delta = (value.mean - GOLDEN_COST).abs();
    let pass = delta <= 1e-6 && elapsed < Duration::from_secs(1);
    verdict(
        "1 (golden hyperfine cost)",
        pass,
        &format!("cost {:.15} vs {GOLDEN_COST}, |diff| {delta:.2e}, {elapsed:?}", value.mean),
    );
    assert!(pass);
}

#[test]
fn criterion_2_hyperfine_recovery() {
    let started = Instant::now();
    let data = hyperfine_counts();
    let masked = fit(
        &data,
        4,
        &OptimizerConfig { restarts: 19, mask: Some(StructureMask::hyperfine()), ..Default::default() },
    )
    .unwrap();
    let w23 = masked.learned.get(1, 2);
    let free = fit(&data, 4, &OptimizerConfig { restarts: 19, ..Default::default() }).unwrap();
    let elapsed = started.elapsed();

    let pass = masked.final_cost <= 0.045
        && (w23 - 2.0).abs() <= 0.1
        && free.final_cost <= 0.05
        && elapsed < Duration::from_secs(120);
    verdict(
        "2 (hyperfine recovery)",
        pass,
        &format!(
            "masked cost {:.7} w23 {w23:.5} ({} iterations); unmasked best of {} cost {:.7}; {elapsed:?}",
            masked.final_cost,
            masked.iterations,
            free.runs.len(),
            free.final_cost
        ),
    );
    assert!(pass);
}

struct Recovery {
    cost: f64,
    error: f64,
}

fn recover(n: usize, instance: u64) -> Recovery {
    let truth = random_hamiltonian(n, 1.0, 1000 + instance).unwrap().to_matrix();
    let data = exact_pairs(&truth, &standard_input_states(n), T).unwrap();
    let cfg = OptimizerConfig { seed: instance, ..Default::default() };
    let mut report = fit(&data, n, &cfg).unwrap();
    report.attach_reference(&truth).unwrap();
    Recovery {
        cost: report.final_cost,
        error: report.reference_error.unwrap(),
    }
}

fn success_rate(results: &[Recovery]) -> f64 {
    let ok = results.iter().filter(|r| r.cost <= 1e-9 && r.error <= 1e-4).count();
    ok as f64 / results.len() as f64
}

#[test]
fn criterion_3_random_recovery() {
    let started = Instant::now();
    let small: Vec<Recovery> = (0..20).map(|k| recover(4, k)).collect();
    let large: Vec<Recovery> = (0..10).map(|k| recover(8, k)).collect();
    let elapsed = started.elapsed();
    let mean_err = |rs: &[Recovery]| rs.iter().map(|r| r.error).sum::<f64>() / rs.len() as f64;

    let (rate4, rate8) = (success_rate(&small), success_rate(&large));
    let pass = rate4 >= 0.9 && rate8 >= 0.9 && elapsed < Duration::from_secs(600);
    verdict(
        "3 (random 4x4 and 8x8 recovery)",
        pass,
        &format!(
            "4x4 {:.0}% ok (mean error {:.2e}), 8x8 {:.0}% ok (mean error {:.2e}); {elapsed:?}",
            100.0 * rate4,
            mean_err(&small),
            100.0 * rate8,
            mean_err(&large)
        ),
    );
    assert!(pass);
}

#[test]
#[ignore = "slow: a single 30x30 fit takes hours"]
fn criterion_3_optional_thirty() {
    let n = 30;
    let truth = random_hamiltonian(n, 0.4, 3000).unwrap().to_matrix();
    let data = exact_pairs(&truth, &standard_input_states(n), T).unwrap();
    let mut report = fit(&data, n, &OptimizerConfig { restarts: 0, ..Default::default() }).unwrap();
    report.attach_reference(&truth).unwrap();
    let err = report.reference_error.unwrap();
    let pass = report.final_cost <= 1e-9 && err <= 1e-4;
    verdict(
        "3-optional (30x30)",
        pass,
        &format!("cost {:.2e}, error {err:.2e}, {} iterations", report.final_cost, report.iterations),
    );
    assert!(pass);
}

#[test]
fn criterion_4_expm_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for k in 0..200u64 {
        let n = [2, 4, 8][(k % 3) as usize];
        let h = random_hamiltonian(n, rng.random_range(0.1..3.0), 40_000 + k).unwrap().to_matrix();
        let reach = rng.random_range(0.0..=5.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let t = sign * reach / h.max_abs();
        let diff = max_norm(
            &expm_unitary(&h, t)
                .unwrap()
                .sub(&expm_taylor_scaled(&h, t, DEFAULT_TAYLOR_TERMS).unwrap())
                .unwrap(),
        );
        worst = worst.max(diff);
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(30);
    verdict(
        "4 (expm vs scaled Taylor)",
        pass,
        &format!("200 matrices, worst max-norm difference {worst:.2e}; {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_shift_invariance() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_cost, mut worst_align) = (0.0_f64, 0.0_f64);
    for k in 0..200u64 {
        let n = rng.random_range(2..=8);
        let h = random_hamiltonian(n, 1.0, 50_000 + k).unwrap().to_matrix();
        let f = rng.random_range(-10.0..10.0);
        let data: Vec<DataPair> = (0..rng.random_range(1..=6))
            .map(|_| {
                let t = rng.random_range(0.05..2.0);
                DataPair::new(random_state(n, &mut rng), random_state(n, &mut rng), t).unwrap()
            })
            .collect();
        let shifted = h.shifted(f);
        let a = cost_of_matrix(&h, &data).unwrap().mean;
        let b = cost_of_matrix(&shifted, &data).unwrap().mean;
        worst_cost = worst_cost.max((a - b).abs());
        worst_align = worst_align.max(shift_aligned_error(&h, &shifted).unwrap());
    }
    let elapsed = started.elapsed();
    let pass = worst_cost <= 1e-10 && worst_align <= 1e-10 && elapsed < Duration::from_secs(30);
    verdict(
        "5 (shift invariance)",
        pass,
        &format!("worst |cost diff| {worst_cost:.2e}, worst aligned error {worst_align:.2e}; {elapsed:?}"),
    );
    assert!(pass);
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn criterion_6_gradient_correctness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-3;
    let (mut worst_rel, mut worst_order_dev) = (0.0_f64, 0.0_f64);
    for k in 0..50u64 {
        let n = rng.random_range(2..=5);
        let truth = random_hamiltonian(n, 1.0, 60_000 + k).unwrap();
        let point = random_hamiltonian(n, 1.0, 61_000 + k).unwrap();
        let data = exact_pairs(&truth.to_matrix(), &standard_input_states(n), T).unwrap();

        let g1 = gradient_fd(&point, &data, h).unwrap().partials;
        let g2 = gradient_fd(&point, &data, h / 2.0).unwrap().partials;
        let g4 = gradient_fd(&point, &data, h / 4.0).unwrap().partials;
        let extrapolated: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let disagreement: Vec<f64> = g2.iter().zip(&extrapolated).map(|(a, b)| a - b).collect();
        let rel = max_abs(&disagreement) / max_abs(&extrapolated).max(1e-8);
        worst_rel = worst_rel.max(rel);

        // halving h should cut the central-difference error by about four
        let d12: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let d24: Vec<f64> = g2.iter().zip(&g4).map(|(a, b)| a - b).collect();
        let order = (max_abs(&d12) / max_abs(&d24)).log2();
        worst_order_dev = worst_order_dev.max((order - 2.0).abs());
    }

    let mut worst_min_grad = 0.0_f64;
    for k in 0..20u64 {
        let n = [2, 3, 4, 6][(k % 4) as usize];
        let truth = random_hamiltonian(n, 1.0, 62_000 + k).unwrap();
        let data = exact_pairs(&truth.to_matrix(), &standard_input_states(n), T).unwrap();
        let g = gradient_fd(&truth, &data, hamlearn::cost::DEFAULT_FD_STEP).unwrap();
        worst_min_grad = worst_min_grad.max(g.max_abs());
    }
    let elapsed = started.elapsed();

    let pass = worst_rel <= 1e-5
        && worst_order_dev <= 0.2
        && worst_min_grad <= 1e-6
        && elapsed < Duration::from_secs(60);
    verdict(
        "6 (gradient correctness)",
        pass,
        &format!(
            "worst relative Richardson disagreement {worst_rel:.2e}, worst |order - 2| {worst_order_dev:.3}, \
             worst gradient at minima {worst_min_grad:.2e}; {elapsed:?}"
        ),
    );
    assert!(pass);
}

fn hamlearn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hamlearn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn learn_bytes(dir: &Path, name: &str, threads: &str, extra: &[&str]) -> Vec<u8> {
    let out = dir.join(name);
    let mut args = vec!["--quiet", "--threads", threads, "--seed", "11", "learn", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let status = hamlearn(&args);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_7_thread_count_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let table = data_dir().join("hyperfine_counts.csv");
    let table = table.to_str().unwrap();

    let truth = dir.path().join("truth.json");
    let truth_param = random_hamiltonian(4, 1.0, 77).unwrap();
    std::fs::write(&truth, HamiltonianFile::new(&truth_param, None).to_json()).unwrap();
    let simulated: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("sim{threads}.json"));
            let run = hamlearn(&[
                "--threads", threads, "--seed", "3", "simulate", "--truth", truth.to_str().unwrap(),
                "--shots", "exact", "--out", out.to_str().unwrap(),
            ]);
            assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
            std::fs::read(out).unwrap()
        })
        .collect();
    let sim = dir.path().join("sim1.json");
    let sim = sim.to_str().unwrap();

    let cases: [(&str, Vec<&str>); 3] = [
        ("hyperfine-masked", vec!["--data", table, "--mask", "hyperfine", "--restarts", "5"]),
        ("hyperfine-free", vec!["--data", table, "--restarts", "3"]),
        ("random-4x4", vec!["--data", sim]),
    ];
    let mut mismatches = Vec::new();
    for (label, extra) in &cases {
        let one = learn_bytes(dir.path(), &format!("{label}-1.json"), "1", extra);
        let again = learn_bytes(dir.path(), &format!("{label}-1b.json"), "1", extra);
        let many = learn_bytes(dir.path(), &format!("{label}-4.json"), "4", extra);
        if one != again || one != many {
            mismatches.push(*label);
        }
    }
    let pass = mismatches.is_empty() && simulated[0] == simulated[1];
    verdict(
        "7 (determinism across thread counts)",
        pass,
        &format!(
            "{} learn cases compared at 1 and 4 threads, mismatches {mismatches:?}; simulate identical: {}",
            cases.len(),
            simulated[0] == simulated[1]
        ),
    );
    assert!(pass);
}
