//! Typical sets and typical subspaces.
//!
//! Words whose empirical entropy lies within `δ` of a reference rate form
//! the typical set `L`; for a projective POM the operators
//! `A_{x_1} ⊗ … ⊗ A_{x_n}`, `x ∈ L`, sum to the projector onto the typical
//! subspace `S_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{checked_pow, kron, reduce_to_sites, sigma1, sigma2, sigma3, ComplexMatrix, C64};
use crate::measurement::{
    cylinder_measure_by_transfer, outcome_entropy, shannon_block_entropy, stream_rng, CylinderMeasure, Pom,
};
use crate::par::{self, Execution};
use crate::random;
use crate::sources::{SourceFamily, SourceKind};

/// Slack added to `ε‖C‖` in the expectation bound.
pub const EXPECTATION_SLACK: f64 = 1e-9;
/// Tolerance for `P² = P = P†`.
pub const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AepParams {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Reference entropy rate in nats.
    pub h_ref: f64,
}

impl AepParams {
    pub fn new(n: usize, delta: f64, epsilon: f64, h_ref: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !h_ref.is_finite() || h_ref < 0.0 {
            return Err(Error::InvalidParameter(format!("h_ref must be finite and >= 0, got {h_ref}")));
        }
        Ok(Self { n, delta, epsilon, h_ref })
    }
}

/// Reference rate for typicality.
///
/// Bernoulli sources give an i.i.d. measured process, so the rate is the
/// one-site outcome entropy. A commuting-R source measured with rank-one
/// projectors that commute with `ρ` gives a Markov chain, whose rate is
/// `H_2^A − H_1^A`. Anything else falls back to `H_n^A / n` at `n_est`.
pub fn reference_rate(f: &SourceFamily, p: &Pom, n_est: usize) -> Result<f64> {
    match f.kind() {
        SourceKind::Bernoulli => Ok(outcome_entropy(f.rho(), p)),
        SourceKind::CommutingR if commutes_with_rho(f, p) => {
            let h2 = shannon_block_entropy(&cylinder_measure_by_transfer(f, p, 2)?);
            let h1 = shannon_block_entropy(&cylinder_measure_by_transfer(f, p, 1)?);
            Ok(h2 - h1)
        }
        _ => {
            let n = n_est.max(1);
            Ok(shannon_block_entropy(&cylinder_measure_by_transfer(f, p, n)?) / n as f64)
        }
    }
}

fn commutes_with_rho(f: &SourceFamily, p: &Pom) -> bool {
    let rho = f.rho().matrix();
    p.is_projective()
        && p.max_rank() == 1
        && p
            .operators()
            .iter()
            .all(|a| a.matmul(rho).max_abs_diff(&rho.matmul(a)) < PROJECTOR_TOL)
}

#[derive(Clone, Debug)]
pub struct TypicalSplit {
    /// Word indices in `L`, ascending.
    pub typical: Vec<usize>,
    /// Word indices in `U`, ascending.
    pub atypical: Vec<usize>,
    pub typical_mass: f64,
    pub atypical_mass: f64,
}

/// Partitions words by `|f_n(x) − h_ref| ≤ δ`. Zero-probability words have
/// `f_n = ∞` and land in `U` with no mass.
pub fn typical_split(m: &CylinderMeasure, params: &AepParams) -> TypicalSplit {
    typical_split_with(m, params, Execution::default())
}

pub fn typical_split_with(m: &CylinderMeasure, params: &AepParams, exec: Execution) -> TypicalSplit {
    let n = m.n() as f64;
    let probs = m.probs();
    let is_typical = |p: f64| p > 0.0 && (-p.ln() / n - params.h_ref).abs() <= params.delta;
    // Per-word work is tiny, so tasks take whole chunks.
    let chunks: Vec<&[f64]> = probs.chunks(4096).collect();
    let flags: Vec<bool> = par::map_slice(exec, &chunks, |c| c.iter().map(|&p| is_typical(p)).collect::<Vec<_>>())
        .concat();
    let (mut typical, mut atypical) = (Vec::new(), Vec::new());
    let (mut typical_mass, mut atypical_mass) = (0.0, 0.0);
    for (i, (&is_typical, &p)) in flags.iter().zip(probs).enumerate() {
        if is_typical {
            typical.push(i);
            typical_mass += p;
        } else {
            atypical.push(i);
            atypical_mass += p;
        }
    }
    TypicalSplit {
        typical,
        atypical,
        typical_mass,
        atypical_mass,
    }
}

/// `P = Σ_{x∈L} A_{x_1} ⊗ … ⊗ A_{x_n}`, held as the word set plus the POM.
#[derive(Clone, Debug)]
pub struct TypicalProjector {
    pom: Pom,
    n: usize,
    words: Vec<usize>,
}

impl TypicalProjector {
    /// Requires a projective POM. `words` are indices as in
    /// [`CylinderMeasure`].
    pub fn new(pom: &Pom, n: usize, mut words: Vec<usize>) -> Result<Self> {
        if !pom.is_projective() {
            return Err(Error::NonProjectivePom);
        }
        let total = checked_pow(pom.r(), n).ok_or(Error::BudgetExceeded {
            what: "words",
            required: usize::MAX,
            limit: usize::MAX,
        })?;
        words.sort_unstable();
        words.dedup();
        if words.last().is_some_and(|&w| w >= total) {
            return Err(Error::InvalidParameter(format!("word index out of range 0..{total}")));
        }
        Ok(Self {
            pom: pom.clone(),
            n,
            words,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[usize] {
        &self.words
    }

    pub fn pom(&self) -> &Pom {
        &self.pom
    }

    /// `dim S_n = Σ_{x∈L} Π_j rank(A_{x_j})`
    pub fn rank(&self) -> usize {
        let (r, ranks) = (self.pom.r(), self.pom.ranks());
        self.words
            .iter()
            .map(|&w| {
                let mut rest = w;
                (0..self.n)
                    .map(|_| {
                        let x = rest % r;
                        rest /= r;
                        ranks[x]
                    })
                    .product::<usize>()
            })
            .sum()
    }

    /// Materialises `P`, grouping words by prefix so shared prefixes are
    /// tensored once.
    pub fn dense(&self, max_dim: usize) -> Result<ComplexMatrix> {
        let d = self.pom.d();
        let dim = checked_pow(d, self.n).filter(|&x| x <= max_dim).ok_or(Error::BudgetExceeded {
            what: "typical projector dimension",
            required: checked_pow(d, self.n).unwrap_or(usize::MAX),
            limit: max_dim,
        })?;
        if self.words.is_empty() {
            return Ok(ComplexMatrix::zeros(dim, dim));
        }
        Ok(assemble(self.pom.operators(), &self.words, self.n, d))
    }
}

fn assemble(ops: &[ComplexMatrix], words: &[usize], remaining: usize, d: usize) -> ComplexMatrix {
    let r = ops.len();
    let span = r.pow(remaining as u32);
    let dim = d.pow(remaining as u32);
    if words.len() == span {
        return ComplexMatrix::identity(dim);
    }
    let stride = span / r;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let mut start = 0;
    while start < words.len() {
        let x = words[start] / stride;
        let end = start + words[start..].partition_point(|&w| w / stride == x);
        let suffixes: Vec<usize> = words[start..end].iter().map(|&w| w % stride).collect();
        let child = assemble(ops, &suffixes, remaining - 1, d);
        out = &out + &kron(&ops[x], &child);
        start = end;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectorResiduals {
    /// `‖P² − P‖_max`
    pub idempotence: f64,
    /// `‖P − P†‖_max`
    pub hermiticity: f64,
    pub passed: bool,
}

pub fn projector_residuals(p: &ComplexMatrix) -> ProjectorResiduals {
    let idempotence = p.matmul(p).max_abs_diff(p);
    let hermiticity = p.max_asymmetry();
    ProjectorResiduals {
        idempotence,
        hermiticity,
        passed: idempotence <= PROJECTOR_TOL && hermiticity <= PROJECTOR_TOL,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionVerdict {
    /// `log dim S_n / (n log d) − h_ref / log d`
    pub middle: f64,
    /// `(log m − δ) / log d`
    pub lower: f64,
    /// `(log M + δ) / log d`
    pub upper: f64,
    pub statement_holds: bool,
    /// `log dim S_n − log(m^n |L|)`
    pub sandwich_lower_margin: f64,
    /// `log(M^n |L|) − log dim S_n`
    pub sandwich_upper_margin: f64,
    pub sandwich_holds: bool,
    /// `n(h+δ) − log |L|`, standard orientation, upper count bound.
    pub count_upper_margin: f64,
    /// `log |L| − log(1−ε) − n(h−δ)`, standard orientation, lower count bound.
    pub count_lower_margin: f64,
    pub count_standard_holds: bool,
    /// `log(1−ε) + n(h+δ) − log |L|`, displayed orientation, diagnostic.
    pub displayed_upper_margin: f64,
    /// `log |L| − n(h−δ)`, displayed orientation, diagnostic.
    pub displayed_lower_margin: f64,
    pub count_displayed_holds: bool,
}

/// Dimension bounds on the typical subspace. Margins are non-negative when
/// a bound holds.
pub fn check_dimension_bounds(
    subspace_dim: usize,
    typical_count: usize,
    rank_bounds: (usize, usize),
    params: &AepParams,
    log_d: f64,
) -> Result<DimensionVerdict> {
    if subspace_dim == 0 || typical_count == 0 {
        return Err(Error::InvalidParameter("typical subspace is empty".into()));
    }
    let n = params.n as f64;
    let (h, delta) = (params.h_ref, params.delta);
    let (m, big_m) = (rank_bounds.0 as f64, rank_bounds.1 as f64);
    let log_dim = (subspace_dim as f64).ln();
    let log_count = (typical_count as f64).ln();
    let middle = log_dim / (n * log_d) - h / log_d;
    let lower = (m.ln() - delta) / log_d;
    let upper = (big_m.ln() + delta) / log_d;
    let sandwich_lower_margin = log_dim - (n * m.ln() + log_count);
    let sandwich_upper_margin = n * big_m.ln() + log_count - log_dim;
    let log_keep = (1.0 - params.epsilon).ln();
    let count_upper_margin = n * (h + delta) - log_count;
    let count_lower_margin = log_count - log_keep - n * (h - delta);
    let displayed_upper_margin = log_keep + n * (h + delta) - log_count;
    let displayed_lower_margin = log_count - n * (h - delta);
    // log-space rounding on integer quantities
    let tol = 1e-12;
    Ok(DimensionVerdict {
        middle,
        lower,
        upper,
        statement_holds: middle >= lower - tol && middle <= upper + tol,
        sandwich_lower_margin,
        sandwich_upper_margin,
        sandwich_holds: sandwich_lower_margin >= -tol && sandwich_upper_margin >= -tol,
        count_upper_margin,
        count_lower_margin,
        count_standard_holds: count_upper_margin >= -tol && count_lower_margin >= -tol,
        displayed_upper_margin,
        displayed_lower_margin,
        count_displayed_holds: displayed_upper_margin >= -tol && displayed_lower_margin >= -tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableCheck {
    pub label: String,
    /// `|tr(C P Π_n) − tr(C Π_n)|`
    pub deviation: f64,
    /// `ε ‖C‖ + slack`
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationVerdict {
    pub epsilon: f64,
    pub trials: usize,
    pub identity_deviation: f64,
    pub worst_deviation: f64,
    /// `min(bound − deviation)`
    pub worst_margin: f64,
    pub passed: bool,
    pub checks: Vec<ObservableCheck>,
}

/// `|tr(C P Π_n) − tr(C Π_n)| ≤ ε‖C‖` for the identity, single-site
/// observables on every site and `trials` random unit-norm Hermitian `C`
/// (trial `i` draws from [`stream_rng`]`(seed, i)`).
pub fn check_expectation_preservation(
    f: &SourceFamily,
    projector: &TypicalProjector,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ExpectationVerdict> {
    check_expectation_preservation_with(f, projector, epsilon, trials, seed, Execution::default())
}

pub fn check_expectation_preservation_with(
    f: &SourceFamily,
    projector: &TypicalProjector,
    epsilon: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<ExpectationVerdict> {
    let n = projector.n();
    let d = f.d();
    if projector.pom().d() != d {
        return Err(Error::mismatch("expectation check POM", d, projector.pom().d()));
    }
    let pi = f.block_density(n)?;
    let p = projector.dense(f.budget().max_dim)?;
    // X = PΠ − Π; every deviation is |tr(C X)|.
    let x = &p.matmul(pi.matrix()) - pi.matrix();
    let bound = epsilon + EXPECTATION_SLACK;

    let mut checks = vec![ObservableCheck {
        label: "identity".into(),
        deviation: x.trace().norm(),
        bound,
    }];
    let locals: Vec<(&str, ComplexMatrix)> = if d == 2 {
        vec![("sigma1", sigma1()), ("sigma2", sigma2()), ("sigma3", sigma3())]
    } else {
        vec![("proj0", ComplexMatrix::from_fn(d, d, |i, j| C64::new(f64::from(u8::from(i == 0 && j == 0)), 0.0)))]
    };
    for site in 0..n {
        let reduced = reduce_to_sites(&x, d, n, &[site])?;
        for (name, c) in &locals {
            checks.push(ObservableCheck {
                label: format!("{name}@{site}"),
                deviation: c.trace_product(&reduced).norm(),
                bound,
            });
        }
    }
    let dim = x.rows();
    let random_checks = par::map_indexed(exec, trials, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let c = random::random_unit_observable(dim, &mut rng);
        ObservableCheck {
            label: format!("random{i}"),
            deviation: c.trace_product(&x).norm(),
            bound,
        }
    });
    checks.extend(random_checks);

    let worst_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let worst_margin = checks.iter().map(|c| c.bound - c.deviation).fold(f64::INFINITY, f64::min);
    Ok(ExpectationVerdict {
        epsilon,
        trials,
        identity_deviation: checks[0].deviation,
        worst_deviation,
        worst_margin,
        passed: worst_margin >= 0.0,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AepReport {
    pub params: AepParams,
    #[serde(skip)]
    pub typical_words: Vec<usize>,
    pub typical_count: usize,
    pub atypical_mass: f64,
    pub subspace_dim: usize,
    pub rank_bounds: (usize, usize),
    pub dimension: DimensionVerdict,
    pub projector: Option<ProjectorResiduals>,
    pub expectation: Option<ExpectationVerdict>,
}

/// Runs the whole typical-subspace check. The measure comes from the
/// transfer path, so only the word budget applies to it; the dense
/// projector checks run when `d^n` fits the density budget.
pub fn run_aep(f: &SourceFamily, p: &Pom, params: &AepParams, trials: usize, seed: u64) -> Result<AepReport> {
    let measure = cylinder_measure_by_transfer(f, p, params.n)?;
    let split = typical_split(&measure, params);
    let projector = TypicalProjector::new(p, params.n, split.typical.clone())?;
    let subspace_dim = projector.rank();
    let rank_bounds = (p.min_rank(), p.max_rank());
    let dimension = check_dimension_bounds(
        subspace_dim,
        split.typical.len(),
        rank_bounds,
        params,
        (f.d() as f64).ln(),
    )?;
    let dense_fits = f.budget().check_dim(f.d(), params.n).is_ok();
    let (projector_check, expectation) = if dense_fits {
        let residuals = projector_residuals(&projector.dense(f.budget().max_dim)?);
        let e = check_expectation_preservation(f, &projector, params.epsilon, trials, seed)?;
        (Some(residuals), Some(e))
    } else {
        (None, None)
    };
    Ok(AepReport {
        params: *params,
        typical_count: split.typical.len(),
        typical_words: split.typical,
        atypical_mass: split.atypical_mass,
        subspace_dim,
        rank_bounds,
        dimension,
        projector: projector_check,
        expectation,
    })
}
