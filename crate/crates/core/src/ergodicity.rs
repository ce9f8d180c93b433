//! Finite-window diagnostics for ergodicity.
//!
//! Time averages `⟨A⟩_N = (1/N) Σ_{k<N} α^k(A)` are formed inside a window
//! of sites; every probe must keep its support inside the window for all
//! shifts used. Expectations are evaluated on reduced states of the union
//! of supports, so the window block itself is never multiplied.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{embed_on_sites, operator_norm, reduce_to_sites, ComplexMatrix, C64};
use crate::measurement::{sample_messages, stream_rng, Pom, TransferEngine};
use crate::par::{self, Execution};
use crate::random;
use crate::sources::{DensityMatrix, ShiftedObservable, SourceFamily, SourceKind};

/// Slack on the factorisation identity for product states.
pub const FACTORIZATION_TOL: f64 = 1e-10;

/// `τ(B† ⟨A⟩_N C)` probe.
#[derive(Clone, Debug)]
pub struct TimeAverageProbe {
    pub a: ShiftedObservable,
    pub b: ShiftedObservable,
    pub c: ShiftedObservable,
    pub shifts: usize,
}

impl TimeAverageProbe {
    pub fn new(a: ShiftedObservable, b: ShiftedObservable, c: ShiftedObservable, shifts: usize) -> Result<Self> {
        if shifts == 0 {
            return Err(Error::InvalidParameter("at least one shift is needed".into()));
        }
        let window = a.window();
        if b.window() != window || c.window() != window {
            return Err(Error::mismatch("probe windows", window, format!("{} / {}", b.window(), c.window())));
        }
        a.shifted(shifts - 1)?;
        Ok(Self { a, b, c, shifts })
    }

    pub fn window(&self) -> usize {
        self.a.window()
    }

    /// Largest shift whose copy of `A` overlaps the support of `B` or `C`;
    /// `None` when no shift does.
    pub fn overlap_horizon(&self) -> Option<usize> {
        let bc: BTreeSet<usize> = self.b.support().chain(self.c.support()).collect();
        (0..self.shifts)
            .rev()
            .find(|&k| self.a.support().any(|s| bc.contains(&(s + k))))
    }
}

/// Expectation of a product of local observables, evaluated on the reduced
/// state of the union of their supports.
fn product_expectation(pi: &DensityMatrix, d: usize, window: usize, factors: &[(&ComplexMatrix, std::ops::Range<usize>)]) -> Result<C64> {
    let union: BTreeSet<usize> = factors.iter().flat_map(|(_, s)| s.clone()).collect();
    let sites: Vec<usize> = union.into_iter().collect();
    let local_sites = sites.len();
    let mut product = ComplexMatrix::identity(d.pow(local_sites as u32));
    for (op, support) in factors {
        let positions: Vec<usize> = support
            .clone()
            .map(|s| sites.binary_search(&s).expect("site in union"))
            .collect();
        product = product.matmul(&embed_on_sites(op, d, &positions, local_sites)?);
    }
    let reduced = reduce_to_sites(pi.matrix(), d, window, &sites)?;
    Ok(product.trace_product(&reduced))
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeAverageResult {
    pub shifts: usize,
    /// `(1/N) Σ_k τ(B† α^k(A) C)`
    pub time_average: C64,
    pub tau_a: C64,
    pub tau_bc: C64,
    /// `|time_average − τ(A) τ(B†C)|`
    pub deviation: f64,
    /// `None` when no shift overlaps `B` or `C`.
    pub overlap_horizon: Option<usize>,
    /// `(n₀+1)/N ‖A‖‖B‖‖C‖`, zero without overlap.
    pub bound: f64,
}

pub fn time_average_expectation(f: &SourceFamily, probe: &TimeAverageProbe) -> Result<TimeAverageResult> {
    let window = probe.window();
    let d = f.d();
    let pi = f.block_density(window)?;
    let b_dag = probe.b.base().adjoint();
    let n = probe.shifts;
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..n {
        let ak = probe.a.shifted(k)?;
        sum += product_expectation(
            &pi,
            d,
            window,
            &[
                (&b_dag, probe.b.support()),
                (ak.base(), ak.support()),
                (probe.c.base(), probe.c.support()),
            ],
        )?;
    }
    let time_average = sum / n as f64;
    let tau_a = product_expectation(&pi, d, window, &[(probe.a.base(), probe.a.support())])?;
    let tau_bc = product_expectation(
        &pi,
        d,
        window,
        &[(&b_dag, probe.b.support()), (probe.c.base(), probe.c.support())],
    )?;
    let overlap_horizon = probe.overlap_horizon();
    let norms = operator_norm(probe.a.base()) * operator_norm(probe.b.base()) * operator_norm(probe.c.base());
    let bound = overlap_horizon.map_or(0.0, |n0| (n0 + 1) as f64 / n as f64 * norms);
    Ok(TimeAverageResult {
        shifts: n,
        time_average,
        tau_a,
        tau_bc,
        deviation: (time_average - tau_a * tau_bc).norm(),
        overlap_horizon,
        bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionCheck {
    pub average_norm: f64,
    pub norm: f64,
    pub passed: bool,
}

/// `‖⟨A⟩_N‖ ≤ ‖A‖`, with the average formed on the sites it touches.
pub fn check_contraction(a: &ShiftedObservable, shifts: usize, d: usize) -> Result<ContractionCheck> {
    if shifts == 0 {
        return Err(Error::InvalidParameter("at least one shift is needed".into()));
    }
    a.shifted(shifts - 1)?;
    let span = a.sites() + shifts - 1;
    let dim = d.pow(span as u32);
    let mut avg = ComplexMatrix::zeros(dim, dim);
    for k in 0..shifts {
        let sites: Vec<usize> = (k..k + a.sites()).collect();
        avg = &avg + &embed_on_sites(a.base(), d, &sites, span)?;
    }
    let avg = avg.scale_real(1.0 / shifts as f64);
    let average_norm = operator_norm(&avg);
    let norm = operator_norm(a.base());
    Ok(ContractionCheck {
        average_norm,
        norm,
        passed: average_norm <= norm + 1e-10,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationVerdict {
    pub trials: usize,
    pub worst_deviation: f64,
    pub passed: bool,
}

/// `τ(AB) = τ(A)τ(B)` for random local pairs with disjoint supports
/// (trial `i` draws from [`stream_rng`]`(seed, i)`).
pub fn bernoulli_factorization_check(f: &SourceFamily, trials: usize, seed: u64) -> Result<FactorizationVerdict> {
    if f.kind() != SourceKind::Bernoulli {
        return Err(Error::InvalidParameter(format!(
            "factorisation holds for Bernoulli sources, not {}",
            f.kind().name()
        )));
    }
    const WINDOW: usize = 6;
    let d = f.d();
    let pi = f.block_density(WINDOW)?;
    let deviations = (0..trials)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let (ka, kb) = (rng.random_range(1..=2usize), rng.random_range(1..=2usize));
            let oa = rng.random_range(0..=WINDOW - ka - kb);
            let ob = rng.random_range(oa + ka..=WINDOW - kb);
            let (sa, sb) = (oa..oa + ka, ob..ob + kb);
            let (a, b) = if rng.random_bool(0.5) { (sa, sb) } else { (sb, sa) };
            let oa_mat = random::hermitian(d.pow(a.len() as u32), &mut rng);
            let ob_mat = random::hermitian(d.pow(b.len() as u32), &mut rng);
            let joint = product_expectation(&pi, d, WINDOW, &[(&oa_mat, a.clone()), (&ob_mat, b.clone())])?;
            let ta = product_expectation(&pi, d, WINDOW, &[(&oa_mat, a)])?;
            let tb = product_expectation(&pi, d, WINDOW, &[(&ob_mat, b)])?;
            Ok((joint - ta * tb).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_deviation = deviations.into_iter().fold(0.0, f64::max);
    Ok(FactorizationVerdict {
        trials,
        worst_deviation,
        passed: worst_deviation <= FACTORIZATION_TOL,
    })
}

/// Cylinder set `{x : x_pos = symbol for each (pos, symbol)}`; positions and
/// symbols are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cylinder(pub Vec<(usize, usize)>);

impl Cylinder {
    pub fn shifted(&self, k: usize) -> Cylinder {
        Cylinder(self.0.iter().map(|&(p, x)| (p + k, x)).collect())
    }

    pub fn intersect(&self, other: &Cylinder) -> Cylinder {
        Cylinder(self.0.iter().chain(&other.0).copied().collect())
    }

    /// One past the last constrained position.
    pub fn span(&self) -> usize {
        self.0.iter().map(|&(p, _)| p + 1).max().unwrap_or(0)
    }

    pub fn contains(&self, word: &[usize]) -> bool {
        self.0.iter().all(|&(p, x)| word[p] == x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalTimeAverage {
    pub shifts: usize,
    pub mu_c: f64,
    pub mu_d: f64,
    /// `(1/N) Σ_k μ(σ^{-k}C ∩ D)`
    pub exact: f64,
    pub exact_deviation: f64,
    pub samples: usize,
    pub monte_carlo: Option<f64>,
    pub monte_carlo_std_error: Option<f64>,
    pub monte_carlo_deviation: Option<f64>,
}

/// `∫ ⟨χ_C⟩_N χ_D dμ` against `μ(C)μ(D)`. The exact value uses the
/// transfer recursion with identity steps on free positions; with
/// `samples > 0` a Monte-Carlo estimate over sampled messages is added.
pub fn classical_time_average_check(
    f: &SourceFamily,
    p: &Pom,
    cyl_c: &Cylinder,
    cyl_d: &Cylinder,
    shifts: usize,
    samples: usize,
    seed: u64,
) -> Result<ClassicalTimeAverage> {
    classical_time_average_check_with(f, p, cyl_c, cyl_d, shifts, samples, seed, Execution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn classical_time_average_check_with(
    f: &SourceFamily,
    p: &Pom,
    cyl_c: &Cylinder,
    cyl_d: &Cylinder,
    shifts: usize,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ClassicalTimeAverage> {
    if shifts == 0 {
        return Err(Error::InvalidParameter("at least one shift is needed".into()));
    }
    let engine = TransferEngine::new(f, p)?;
    let mu_c = engine.cylinder_probability(&cyl_c.0)?;
    let mu_d = engine.cylinder_probability(&cyl_d.0)?;
    let terms = par::map_indexed(exec, shifts, |k| engine.cylinder_probability(&cyl_c.shifted(k).intersect(cyl_d).0));
    let exact = terms.into_iter().collect::<Result<Vec<f64>>>()?.iter().sum::<f64>() / shifts as f64;

    let (mut monte_carlo, mut monte_carlo_std_error, mut monte_carlo_deviation) = (None, None, None);
    if samples > 0 {
        let len = (cyl_c.span() + shifts - 1).max(cyl_d.span()).max(1);
        let set = sample_messages(f, p, len, samples, seed)?;
        let values: Vec<f64> = set
            .messages
            .iter()
            .map(|m| {
                if !cyl_d.contains(m) {
                    return 0.0;
                }
                (0..shifts).filter(|&k| cyl_c.shifted(k).contains(m)).count() as f64 / shifts as f64
            })
            .collect();
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
        monte_carlo = Some(mean);
        monte_carlo_std_error = Some((var / count).sqrt());
        monte_carlo_deviation = Some((mean - mu_c * mu_d).abs());
    }
    Ok(ClassicalTimeAverage {
        shifts,
        mu_c,
        mu_d,
        exact,
        exact_deviation: (exact - mu_c * mu_d).abs(),
        samples,
        monte_carlo,
        monte_carlo_std_error,
        monte_carlo_deviation,
    })
}

/// One row of a deviation table.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationRow {
    pub family: String,
    pub probe: String,
    pub shifts: usize,
    pub deviation: f64,
    pub bound: Option<f64>,
}
