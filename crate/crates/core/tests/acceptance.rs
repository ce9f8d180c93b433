//! Acceptance suite. Runs every criterion, prints one line per criterion
//! and exits non-zero when a criterion fails unexpectedly.
//!
//! Criteria listed in `INFEASIBLE` are reported as FAIL but do not fail the
//! run; each carries the reason it cannot hold, and the run still checks
//! that the observed numbers agree with an independent oracle.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsource::aep::{self, AepParams, TypicalSplit};
use qsource::certify;
use qsource::entropy::{self, block_entropy_sequence, check_subadditivity, klein_gap};
use qsource::ergodicity::{self, Cylinder, TimeAverageProbe};
use qsource::linalg::{sigma1, sigma3, HermitianMatrix};
use qsource::measurement::{
    cylinder_measure, cylinder_measure_by_transfer, jensen_bound_check, quantum_bound_check, sample_messages,
    transfer_prefix,
};
use qsource::random;
use qsource::sources::{verify_consistency, ShiftedObservable};
use qsource::{ComplexMatrix, DensityMatrix, Execution, Pom, SourceFamily};

/// Criterion 10 asks for an atypical mass below 0.25 at n = 16, δ = 0.1.
/// The band `|f_16 − S| ≤ 0.1` admits only k ∈ {3, 4, 5} rare symbols,
/// which carry 0.613 of the binomial mass, so the atypical mass is 0.387.
///
/// Criterion 11 asks for fewer than 1% of length-2000 messages outside
/// `|f_n − S| ≤ 0.02`. For i.i.d. symbols `f_n` has standard deviation
/// `σ/√n ≈ 0.0106`, so the band is about 1.9σ wide and the exact binomial
/// probability of leaving it is about 5.9%.
const INFEASIBLE: &[(usize, &str)] = &[
    (
        10,
        "at n = 16 the typical band holds k in {3, 4, 5} rare symbols only; binomial atypical mass is 0.387",
    ),
    (
        11,
        "exact probability of |f_n - S| > 0.02 at n = 2000 is ~5.9%, above the 1% target",
    ),
];

/// `S(diag(0.75, 0.25))` in nats, by direct evaluation.
fn s_oracle() -> f64 {
    -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln())
}

fn rho() -> DensityMatrix {
    DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap()
}

fn families() -> Vec<(&'static str, SourceFamily)> {
    vec![
        ("bernoulli", SourceFamily::bernoulli(rho())),
        ("commuting-r", SourceFamily::commuting_r(rho()).unwrap()),
        ("pauli-r", SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap()),
    ]
}

struct Outcome {
    passed: bool,
    /// Agreement with the independent oracle; an infeasible criterion only
    /// counts as expected when this holds.
    oracle_agrees: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            oracle_agrees: true,
            detail: detail.into(),
        }
    }

    fn with_oracle(mut self, agrees: bool) -> Self {
        self.oracle_agrees = agrees;
        self
    }
}

fn within(limit_secs: u64, elapsed: Duration) -> (bool, String) {
    (
        elapsed.as_secs_f64() < limit_secs as f64,
        format!("{:.1}s of {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn consistency() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (_, f) in families() {
        for row in verify_consistency(&f, 8).unwrap().rows {
            worst = worst.max(row.leading).max(row.trailing);
        }
    }
    let (fast, time) = within(30, start.elapsed());
    Outcome::new(worst <= 1e-10 && fast, format!("worst residual {worst:.2e}, {time}"))
}

fn positivity_and_certificate() -> Outcome {
    let start = Instant::now();
    let points = certify::grid(&[-0.3, 0.0, 0.3], &[-0.03, 0.01, 0.03], &[-0.03, 0.01, 0.03]);
    let certs = certify::certify_grid(&points, 8, Execution::default());
    let mut ok = points.len() == 27;
    let (mut min_eig, mut max_norm, mut max_err) = (f64::INFINITY, 0.0f64, 0.0f64);
    for cert in certs {
        let cert = cert.unwrap();
        ok &= cert.certified && cert.q < certify::threshold(cert.w);
        ok &= cert.min_eigenvalues.len() == 8 && cert.singular_at.is_none();
        min_eig = cert.min_eigenvalues.iter().copied().fold(min_eig, f64::min);
        max_norm = cert.a_n_norms.iter().take(6).copied().fold(max_norm, f64::max);
        max_err = cert.recursion_errors.iter().take(6).copied().fold(max_err, f64::max);
        ok &= cert.a_n_norms.len() >= 6;
    }
    let (fast, time) = within(120, start.elapsed());
    Outcome::new(
        ok && min_eig >= -1e-10 && max_norm <= 1.0 + 1e-9 && max_err <= 1e-8 && fast,
        format!("min eig {min_eig:.3e}, max |A_n| {max_norm:.6}, max recursion gap {max_err:.2e}, {time}"),
    )
}

fn bernoulli_identity() -> Outcome {
    let f = SourceFamily::bernoulli(rho());
    let report = block_entropy_sequence(&f, 8).unwrap();
    let s = s_oracle();
    let worst = (1..=8).map(|n| (report.h(n) - n as f64 * s).abs()).fold(0.0, f64::max);
    let s_ok = (s - 0.562335).abs() < 5e-7;
    Outcome::new(worst <= 1e-9 && s_ok, format!("S = {s:.6}, worst |H_n - nS| {worst:.2e}"))
}

fn commuting_entropy() -> Outcome {
    let f = SourceFamily::commuting_r(rho()).unwrap();
    let report = block_entropy_sequence(&f, 8).unwrap();
    let s = s_oracle();
    let flat = (1..=8).map(|n| (report.h(n) - s).abs()).fold(0.0, f64::max);
    let closed = entropy::commuting_r_closed_form(&f).unwrap().abs();
    // H_n/n = S/n decreases to zero and H_n − H_{n−1} vanishes from n = 2.
    let ratios_fall = (2..=8).all(|n| report.ratio(n) < report.ratio(n - 1) && (report.ratio(n) - s / n as f64).abs() <= 1e-9);
    let diff = (2..=8).map(|n| report.difference(n).abs()).fold(0.0, f64::max);
    Outcome::new(
        flat <= 1e-9 && closed <= 1e-12 && ratios_fall && diff <= 1e-9,
        format!("worst |H_n - S| {flat:.2e}, closed form {closed:.2e}, H_8/8 {:.4}", report.ratio(8)),
    )
}

fn klein() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut equal) = (f64::INFINITY, 0.0f64);
    for i in 0..100 {
        let dim = 2 + i % 15;
        let a = HermitianMatrix::new(random::psd(dim, &mut rng)).unwrap();
        let b = HermitianMatrix::new(random::psd(dim, &mut rng)).unwrap();
        worst = worst.min(klein_gap(&a, &b).unwrap());
        equal = equal.max(klein_gap(&a, &a).unwrap().abs());
    }
    Outcome::new(
        worst >= -1e-9 && equal <= 1e-9,
        format!("min gap {worst:.3e}, |gap(a, a)| {equal:.2e}"),
    )
}

fn subadditivity() -> Outcome {
    let mut worst = f64::INFINITY;
    for (_, f) in families() {
        let v = check_subadditivity(&block_entropy_sequence(&f, 8).unwrap()).unwrap();
        worst = worst.min(v.worst_margin);
    }
    Outcome::new(worst >= -1e-9, format!("min H_m + H_n - H_(m+n) {worst:.3e}"))
}

fn jensen() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for i in 0..200 {
        let d = 2 + i % 3;
        let r = DensityMatrix::new(random::density(d, &mut rng)).unwrap();
        let pom = if i % 2 == 0 {
            Pom::random_projective(d, &mut rng)
        } else {
            Pom::random_generic(d, d + 1 + i % 3, &mut rng)
        };
        worst = worst.min(jensen_bound_check(&r, &pom).unwrap());
    }
    Outcome::new(worst >= -1e-9, format!("min margin {worst:.3e}"))
}

fn measured_entropy_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    for (_, f) in families() {
        for generic in [false, true] {
            let pom = if generic {
                Pom::random_generic(2, 3, &mut rng)
            } else {
                Pom::random_projective(2, &mut rng)
            };
            for n in 1..=6 {
                worst = worst.min(quantum_bound_check(&f, &pom, n).unwrap().margin);
            }
        }
    }
    let f = SourceFamily::bernoulli(rho());
    let eig = Pom::eigenbasis(f.rho()).unwrap();
    let saturation = (1..=6)
        .map(|n| quantum_bound_check(&f, &eig, n).unwrap().margin.abs())
        .fold(0.0, f64::max);
    Outcome::new(
        worst >= -1e-9 && saturation <= 1e-9,
        format!("min margin {worst:.3e}, saturation |margin| {saturation:.2e}"),
    )
}

fn transfer_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst, mut worst_zero) = (0.0f64, 0.0f64);
    for (_, f) in families() {
        let poms = [Pom::eigenbasis(f.rho()).unwrap(), Pom::random_projective(2, &mut rng)];
        for pom in &poms {
            for n in 1..=8 {
                let exact = cylinder_measure(&f, pom, n).unwrap();
                for i in 0..exact.len() {
                    let p = exact.probs()[i];
                    let q = transfer_prefix(&f, pom, &exact.word(i)).unwrap().probability();
                    if p < 1e-14 {
                        worst_zero = worst_zero.max((p - q).abs());
                    } else {
                        worst = worst.max((p - q).abs() / p);
                    }
                }
            }
        }
    }
    let (fast, time) = within(60, start.elapsed());
    Outcome::new(
        worst <= 1e-10 && worst_zero <= 1e-14 && fast,
        format!("worst relative gap {worst:.2e}, zero-word gap {worst_zero:.1e}, {time}"),
    )
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `P(|f_n − S| > δ)` for i.i.d. symbols with `P(1) = 0.25`, summed over
/// the count `k` of the rare symbol.
fn binomial_tail(n: u64, band: f64) -> f64 {
    let s = s_oracle();
    (0..=n)
        .filter(|&k| {
            let f = (k as f64 * 4f64.ln() + (n - k) as f64 * (4.0f64 / 3.0).ln()) / n as f64;
            (f - s).abs() > band
        })
        .map(|k| (ln_binomial(n, k) + k as f64 * 0.25f64.ln() + (n - k) as f64 * 0.75f64.ln()).exp())
        .sum()
}

fn classical_aep_exact() -> Outcome {
    let f = SourceFamily::bernoulli(rho());
    let pom = Pom::eigenbasis(f.rho()).unwrap();
    let m = cylinder_measure_by_transfer(&f, &pom, 16).unwrap();
    let params = AepParams::new(16, 0.1, 0.5, s_oracle()).unwrap();
    let split = aep::typical_split(&m, &params);
    let oracle = binomial_tail(16, 0.1);
    let gap = (split.atypical_mass - oracle).abs();
    Outcome::new(
        gap <= 1e-12 && split.atypical_mass < 0.25,
        format!("atypical mass {:.12}, oracle {oracle:.12}", split.atypical_mass),
    )
    .with_oracle(gap <= 1e-12)
}

fn classical_aep_monte_carlo() -> Outcome {
    let start = Instant::now();
    let f = SourceFamily::bernoulli(rho());
    let pom = Pom::eigenbasis(f.rho()).unwrap();
    let count = 1000;
    let set = sample_messages(&f, &pom, 2000, count, 2024).unwrap();
    let outside = set
        .empirical_entropies()
        .iter()
        .filter(|&&fe| (fe - 0.562335).abs() > 0.02)
        .count() as f64
        / count as f64;
    let (fast, time) = within(30, start.elapsed());
    let oracle = binomial_tail(2000, 0.02);
    let sigma = (oracle * (1.0 - oracle) / count as f64).sqrt();
    let agrees = (outside - oracle).abs() <= 3.0 * sigma;
    Outcome::new(
        outside < 0.01 && fast,
        format!("outside fraction {outside:.3}, exact {oracle:.4} (within 3 sigma: {agrees}), {time}"),
    )
    .with_oracle(agrees)
}

fn typical_subspace() -> Outcome {
    let start = Instant::now();
    let f = SourceFamily::bernoulli(rho());
    let pom = Pom::eigenbasis(f.rho()).unwrap();
    let n = 12;
    let m = cylinder_measure_by_transfer(&f, &pom, n).unwrap();
    let probe = AepParams::new(n, 0.1, 0.5, s_oracle()).unwrap();
    let TypicalSplit { atypical_mass, .. } = aep::typical_split(&m, &probe);
    let params = AepParams::new(n, 0.1, atypical_mass + 1e-9, s_oracle()).unwrap();
    let report = aep::run_aep(&f, &pom, &params, 50, 12).unwrap();
    let residual = report
        .projector
        .as_ref()
        .map_or(f64::INFINITY, |r| r.idempotence.max(r.hermiticity));
    let dim = &report.dimension;
    let expectation = report.expectation.as_ref().expect("dense checks run at dim 4096");
    let sandwich = dim.sandwich_lower_margin.min(dim.sandwich_upper_margin);
    let (fast, time) = within(180, start.elapsed());
    Outcome::new(
        residual <= 1e-10
            && report.rank_bounds == (1, 1)
            && sandwich >= -1e-9
            && expectation.passed
            && expectation.trials == 50
            && fast,
        format!(
            "|L| {}, dim S {}, projector residual {residual:.1e}, worst expectation margin {:.2e}, {time}",
            report.typical_count, report.subspace_dim, expectation.worst_margin
        ),
    )
}

fn ergodicity_diagnostics() -> Outcome {
    let window = 12;
    let f = SourceFamily::bernoulli(rho());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let z = sigma3();
    let id = ComplexMatrix::identity(2);
    let random_local = |rng: &mut ChaCha8Rng| random::random_unit_observable(2, rng);
    let (ra, rb, rc) = (random_local(&mut rng), random_local(&mut rng), random_local(&mut rng));
    let x = sigma1();
    let probes: [(&ComplexMatrix, usize, &ComplexMatrix, usize, &ComplexMatrix, usize); 3] = [
        (&z, 0, &id, 0, &z, 0),
        (&x, 1, &z, 0, &x, 3),
        (&ra, 0, &rb, 2, &rc, 5),
    ];
    let mut ok = true;
    let mut worst_slack = f64::INFINITY;
    for (a, ia, b, ib, c, ic) in probes {
        for shifts in [4, 8, 12] {
            let probe = TimeAverageProbe::new(
                ShiftedObservable::new(a.clone(), 2, ia, window).unwrap(),
                ShiftedObservable::new(b.clone(), 2, ib, window).unwrap(),
                ShiftedObservable::new(c.clone(), 2, ic, window).unwrap(),
                shifts.min(window - ia),
            )
            .unwrap();
            let r = ergodicity::time_average_expectation(&f, &probe).unwrap();
            worst_slack = worst_slack.min(r.bound - r.deviation);
            ok &= r.deviation <= r.bound + 1e-12;
        }
    }

    let g = SourceFamily::commuting_r(rho()).unwrap();
    let pom = Pom::eigenbasis(g.rho()).unwrap();
    let witness = ergodicity::classical_time_average_check(
        &g,
        &pom,
        &Cylinder(vec![(0, 0)]),
        &Cylinder(vec![(1, 0)]),
        50,
        0,
        1,
    )
    .unwrap();
    // Two-point oracle: every translate sees μ(x_k = 0, x_1 = 0) = μ_2(0, 0).
    let two = cylinder_measure(&g, &pom, 2).unwrap();
    let one = cylinder_measure(&g, &pom, 1).unwrap();
    let oracle = two.prob(&[0, 0]).unwrap() - one.prob(&[0]).unwrap().powi(2);
    ok &= witness.exact_deviation >= 0.05 && (witness.exact_deviation - oracle).abs() <= 1e-10;
    Outcome::new(
        ok,
        format!(
            "min bound slack {worst_slack:.3e}, witness deviation {:.6} (oracle {oracle:.6})",
            witness.exact_deviation
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
seed = 31

[[sources]]
kind = "pauli-r"
a = 0.3
b = 0.05
c = 0.05

[[sources]]
kind = "bernoulli"
rho = [[0.75, 0.0], [0.0, 0.0], [0.0, 0.0], [0.25, 0.0]]

[params]
n_max = 4
pom_trials = 20
klein_pairs = 20
aep_n = [8]
trials = 5
message_len = 200
samples = 50
"#;

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let mut ok = true;
    let mut compared = Vec::new();
    for scenario in ["bound-check", "aep"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("run{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_qsource"))
                .arg(scenario)
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            ok &= status.status.code().is_some_and(|c| c <= 1);
            outputs.push(std::fs::read(out.join(format!("{scenario}.csv"))).unwrap_or_default());
        }
        ok &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        compared.push(format!("{scenario} {} bytes", outputs[0].len()));
    }
    Outcome::new(ok, format!("identical CSV: {}", compared.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 14] = [
        (1, "consistency", consistency),
        (2, "positivity and certificate", positivity_and_certificate),
        (3, "bernoulli entropy identity", bernoulli_identity),
        (4, "commuting-r entropy", commuting_entropy),
        (5, "klein inequality", klein),
        (6, "subadditivity", subadditivity),
        (7, "jensen-type inequality", jensen),
        (8, "measured entropy bound", measured_entropy_bound),
        (9, "transfer oracle", transfer_oracle),
        (10, "classical typical set, exact", classical_aep_exact),
        (11, "classical typical set, sampled", classical_aep_monte_carlo),
        (12, "typical subspace", typical_subspace),
        (13, "time averages", ergodicity_diagnostics),
        (14, "determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    let mut passed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let outcome = run();
        let verdict = if outcome.passed { "pass" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}  {name}: {}", outcome.detail);
        if outcome.passed {
            passed += 1;
        } else if let Some((_, why)) = INFEASIBLE.iter().find(|(i, _)| *i == id && outcome.oracle_agrees) {
            println!("             expected: {why}");
        } else {
            unexpected += 1;
        }
    }
    println!("{passed} criteria passed, {unexpected} unexpected failures");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
