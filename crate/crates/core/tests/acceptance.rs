//! One test per acceptance criterion; each prints a `[PASS]` / `[FAIL]` line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them all.

use std::process::Command as Process;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ergodic_wigner::moment_oracle::{
    expected_trace_moment, expected_trace_moment_with, map_trials, mc_trace_moment,
    mean_stderr, fluctuation_scan, wick_product_expectation, EntryCovariance, EntryLabel,
};
use ergodic_wigner::partitions::*;
use ergodic_wigner::spectra::semicircle_moment;
use ergodic_wigner::{build_matrix, eigenvalues, CovarianceModel, EnsembleConfig, ProcessSpec};

fn report(id: u32, ok: bool, detail: String) {
    println!("[{}] criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn pp(s: &str) -> PairPartition {
    s.parse::<Partition>().unwrap().try_into().unwrap()
}

#[test]
fn criterion_01_catalan_counts() {
    let start = Instant::now();
    let expected = [1u64, 2, 5, 14, 42];
    let got: Vec<u64> = [2usize, 4, 6, 8, 10].iter().map(|&k| count_ncpp(k).unwrap()).collect();
    let moments: Vec<f64> = [2u32, 4, 6, 8, 10].iter().map(|&k| semicircle_moment(k)).collect();
    let ok = got == expected
        && got.iter().zip(&moments).all(|(&c, &m)| c as f64 == m)
        && start.elapsed() < Duration::from_secs(1);
    report(1, ok, format!("#NPP(k) = {got:?}, semicircle moments = {moments:?}"));
}

#[test]
fn criterion_02_noncrossing_star_ratio() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for pi in ["1.2|3.4", "1.4|2.3"] {
        let r50 = star_ratio(50, &pp(pi)).unwrap();
        let r20 = star_ratio(20, &pp(pi)).unwrap();
        ok &= (r50 - 1.0).abs() <= 0.15 && (r50 - 1.0).abs() < (r20 - 1.0).abs();
        detail.push(format!("{pi}: ratio(20) = {r20}, ratio(50) = {r50}"));
    }
    ok &= start.elapsed() < Duration::from_secs(30);
    report(2, ok, detail.join("; "));
}

#[test]
fn criterion_03_crossing_count_bound() {
    let start = Instant::now();
    let pi = pp("1.3|2.4");
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [10usize, 20, 40] {
        let count = count_s(n, pi.partition()).unwrap();
        let bound = (2 * (n as u64).pow(3)).div_ceil(3);
        ok &= count >= bound;
        detail.push(format!("n={n}: count_S = {count} vs bound {bound}"));
    }
    ok &= start.elapsed() < Duration::from_secs(60);
    report(3, ok, detail.join("; "));
}

#[test]
fn criterion_04_star_sequences_have_unit_expectation() {
    let start = Instant::now();
    let model = CovarianceModel::new(ProcessSpec::iid_gaussian());
    let cov = EntryCovariance::new(&model);
    let mut checked = 0usize;
    let mut ok = true;
    for pi in enumerate_pair_partitions(4).unwrap().into_iter().filter(|p| !p.is_crossing()) {
        for seq in enumerate_consistent(8, 4).unwrap() {
            if partition_of_sequence(&seq) != *pi.partition() {
                continue;
            }
            let pairs: Vec<(usize, usize)> = seq.pairs().collect();
            let star = pi.pairs().all(|(i, j)| {
                let (a, b) = (pairs[i - 1], pairs[j - 1]);
                a.1 as i64 - a.0 as i64 == b.0 as i64 - b.1 as i64
            });
            if !star {
                continue;
            }
            let labels: Vec<EntryLabel> = pairs.iter().map(|&(p, q)| EntryLabel::new(p, q)).collect();
            ok &= wick_product_expectation(&labels, &cov).unwrap() == 1.0;
            checked += 1;
        }
    }
    ok &= checked > 0 && start.elapsed() < Duration::from_secs(10);
    report(4, ok, format!("{checked} star-consistent sequences, all expectations exactly 1"));
}

#[test]
fn criterion_05_oracle_matches_monte_carlo() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for spec in [
        ProcessSpec::iid_gaussian(),
        ProcessSpec::ar1(0.5).unwrap(),
        ProcessSpec::equicorrelated(0.5).unwrap(),
    ] {
        let exact = expected_trace_moment(16, 4, spec).unwrap();
        let mc = mc_trace_moment(16, 4, spec, 5000, 505).unwrap();
        let z = (exact - mc.mc_mean).abs() / mc.mc_stderr;
        ok &= z <= 3.0;
        detail.push(format!("{spec}: exact {exact:.6}, mc {:.6} ({z:.2} se)", mc.mc_mean));
    }
    ok &= start.elapsed() < Duration::from_secs(300);
    report(5, ok, detail.join("; "));
}

struct Batch {
    m1: Vec<f64>,
    m3: Vec<f64>,
    m4: Vec<f64>,
    ks: Vec<f64>,
}

fn batch(spec: ProcessSpec) -> Batch {
    let rows = map_trials(1024, &CovarianceModel::new(spec), 20, 2024, |_, esd| {
        [esd.moment(1), esd.moment(3), esd.moment(4), esd.ks_distance()]
    })
    .unwrap();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Batch { m1: col(0), m3: col(1), m4: col(2), ks: col(3) }
}

fn ar1_batch() -> &'static Batch {
    static CELL: OnceLock<Batch> = OnceLock::new();
    CELL.get_or_init(|| batch(ProcessSpec::ar1(0.5).unwrap()))
}

#[test]
fn criterion_06_mixing_limit_is_semicircle() {
    let start = Instant::now();
    let b = ar1_batch();
    let (m1, _) = mean_stderr(&b.m1);
    let (m3, _) = mean_stderr(&b.m3);
    let (m4, _) = mean_stderr(&b.m4);
    let (ks, _) = mean_stderr(&b.ks);
    let ok = (m4 - 2.0).abs() <= 0.15
        && ks <= 0.05
        && m1.abs() <= 0.1
        && m3.abs() <= 0.1
        && start.elapsed() < Duration::from_secs(300);
    report(6, ok, format!("AR1(0.5) n=1024: m4 = {m4:.4}, KS = {ks:.4}, m1 = {m1:.2e}, m3 = {m3:.2e}"));
}

#[test]
fn criterion_07_equicorrelated_limit_differs() {
    let start = Instant::now();
    let threshold = 2.05;
    let calibration = expected_trace_moment_with(
        64,
        4,
        &CovarianceModel::new(ProcessSpec::equicorrelated(0.5).unwrap()),
        64u128.pow(4),
    )
    .unwrap();
    let equi = batch(ProcessSpec::equicorrelated(0.5).unwrap());
    let (e4, e_se) = mean_stderr(&equi.m4);
    let (a4, a_se) = mean_stderr(&ar1_batch().m4);
    let pooled = (e_se * e_se + a_se * a_se).sqrt();
    let separation = (e4 - a4) / pooled;
    let ok = calibration >= threshold
        && e4 >= threshold
        && separation >= 5.0
        && start.elapsed() < Duration::from_secs(300);
    report(
        7,
        ok,
        format!(
            "exact m4(n=64) = {calibration:.5}; Equi(0.5) m4 = {e4:.4} vs AR1(0.5) {a4:.4}, \
             separation {separation:.2} pooled se"
        ),
    );
}

#[test]
fn criterion_08_fourth_moment_growth() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for spec in [ProcessSpec::iid_gaussian(), ProcessSpec::ar1(0.5).unwrap()] {
        for k in [2u32, 4] {
            let r = fluctuation_scan(spec, k, &[64, 128, 256, 512], 400, 7).unwrap();
            let slope = r.slope.unwrap_or(f64::INFINITY);
            ok &= slope <= 2.3;
            detail.push(format!("{spec} k={k}: slope {slope:.3}"));
        }
    }
    ok &= start.elapsed() < Duration::from_secs(900);
    report(8, ok, detail.join("; "));
}

#[test]
fn criterion_09_trace_identities() {
    let start = Instant::now();
    let n = 256;
    let gallery = ProcessSpec::mixing_gallery();
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let spec = gallery[i as usize % gallery.len()];
        let m = build_matrix(&EnsembleConfig::new(n, spec, 9000 + i)).unwrap();
        let ev = eigenvalues(&m).unwrap();
        let s1: f64 = ev.eigenvalues().iter().sum();
        let s2: f64 = ev.eigenvalues().iter().map(|x| x * x).sum();
        worst = worst.max((s1 - m.trace()).abs()).max((s2 - m.frobenius_sq()).abs());
    }
    let tol = 1e-8 * n as f64;
    let ok = worst <= tol && start.elapsed() < Duration::from_secs(60);
    report(9, ok, format!("max trace-identity error {worst:.3e} (tolerance {tol:.1e})"));
}

#[test]
fn criterion_10_simulate_is_deterministic() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let output = Process::new(env!("CARGO_BIN_EXE_ewig"))
            .args(["simulate", "--spec", "ar1", "--param", "0.5", "--n", "128", "--trials", "3"])
            .args(["--seed", "42", "--out"])
            .arg(&out)
            .env_remove("EW_SEED")
            .output()
            .unwrap();
        assert!(output.status.success());
        ["simulate.csv", "histogram.csv"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    let ok = a == b && start.elapsed() < Duration::from_secs(60);
    report(10, ok, format!("two simulate runs byte-identical: {}", a == b));
}
