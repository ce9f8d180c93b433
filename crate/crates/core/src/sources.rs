//! Quantum sources as consistent families of block density matrices.
//!
//! Every family is described by a one-site density matrix `ρ` on `C^d` and,
//! except for Bernoulli, an `R` matrix on `C^d ⊗ C^d` with
//! `tr_1((ρ⊗I)R) = ρ` and `tr_2(R) = I`. Blocks follow
//!
//! ```text
//! Π_1     = ρ
//! Π_{n+1} = ½ (Π_n ⊗ I)(I_{n-1} ⊗ R) + ½ (I_{n-1} ⊗ R)(Π_n ⊗ I)
//! ```
//!
//! and Bernoulli blocks are tensor powers `ρ^{⊗n}`. Blocks are cached per
//! family and extended one recursion step at a time.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, apply_local_left, apply_local_right, checked_pow, eig_hermitian, eigenvalues_hermitian, kron,
    operator_norm, partial_trace, reduce_to_sites, sigma1, sigma2, sigma3, ComplexMatrix, HermitianMatrix,
    TraceSide, C64, PSD_FLOOR,
};

/// Tolerance on `tr_1((ρ⊗I)R) = ρ`, `tr_2 R = I` and on block marginals.
pub const CONSISTENCY_TOL: f64 = 1e-10;
/// Eigenvalues closer than this share a spectral projector.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Size limits for dense objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Largest block dimension `d^n` that will be built densely.
    pub max_dim: usize,
    /// Largest number of words `r^n` enumerated exactly.
    pub max_words: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_dim: 4096,
            max_words: 1 << 20,
        }
    }
}

impl Budget {
    pub fn check_dim(&self, d: usize, n: usize) -> Result<usize> {
        match checked_pow(d, n) {
            Some(dim) if dim <= self.max_dim => Ok(dim),
            other => Err(Error::BudgetExceeded {
                what: "density dimension",
                required: other.unwrap_or(usize::MAX),
                limit: self.max_dim,
            }),
        }
    }

    pub fn check_words(&self, r: usize, n: usize) -> Result<usize> {
        match checked_pow(r, n) {
            Some(w) if w <= self.max_words => Ok(w),
            other => Err(Error::BudgetExceeded {
                what: "word enumeration",
                required: other.unwrap_or(usize::MAX),
                limit: self.max_words,
            }),
        }
    }
}

/// Positive, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        let tr = h.matrix().trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = eigenvalues_hermitian(&h)?.last().copied().unwrap_or(0.0);
        if min < PSD_FLOOR {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:.3e} below {PSD_FLOOR:e}")));
        }
        Ok(Self { matrix: h })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(diag))
    }

    /// Wraps a block produced by a recursion whose trace and positivity are
    /// checked separately.
    pub(crate) fn from_block(matrix: HermitianMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.matrix.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues_hermitian(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }
}

/// Signals `|ψ_j⟩` emitted with probabilities `p_j`.
#[derive(Clone, Debug)]
pub struct SignalEnsemble {
    signals: Vec<Vec<C64>>,
    probs: Vec<f64>,
}

impl SignalEnsemble {
    pub fn new(signals: Vec<Vec<C64>>, probs: Vec<f64>) -> Result<Self> {
        if signals.is_empty() || signals.len() != probs.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} signals but {} probabilities",
                signals.len(),
                probs.len()
            )));
        }
        let d = signals[0].len();
        for (j, s) in signals.iter().enumerate() {
            if s.len() != d {
                return Err(Error::InvalidEnsemble(format!("signal {j} has dimension {}", s.len())));
            }
            let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidEnsemble(format!("signal {j} has norm {norm}")));
            }
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidEnsemble("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}")));
        }
        // The signals must span C^d.
        let gram = ComplexMatrix::from_fn(d, d, |i, k| signals.iter().map(|s| s[i] * s[k].conj()).sum());
        let rank = linalg::hermitian_rank(&HermitianMatrix::from_hermitian_part(&gram).0, 1e-10)?;
        if rank != d {
            return Err(Error::InvalidEnsemble(format!("signals span {rank} of {d} dimensions")));
        }
        Ok(Self { signals, probs })
    }

    pub fn dim(&self) -> usize {
        self.signals[0].len()
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// `ρ = Σ p_j |ψ_j⟩⟨ψ_j|`
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let d = self.dim();
        let mut rho = ComplexMatrix::zeros(d, d);
        for (s, &p) in self.signals.iter().zip(&self.probs) {
            rho = &rho + &ComplexMatrix::outer(s).scale_real(p);
        }
        DensityMatrix::new(rho.hermitian_part())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Bernoulli,
    CommutingR,
    PauliR,
    ExplicitR,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Bernoulli => "bernoulli",
            SourceKind::CommutingR => "commuting-r",
            SourceKind::PauliR => "pauli-r",
            SourceKind::ExplicitR => "explicit-r",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Which projectors enter `R = Σ P_j ⊗ P_j`.
#[derive(Clone, Debug)]
pub enum ProjectorChoice {
    /// One projector per distinct eigenvalue of `ρ`.
    Spectral,
    /// Rank-one projectors onto the columns of the given unitary, which must
    /// diagonalise `ρ`.
    Basis(ComplexMatrix),
}

/// `ρ = I/2 + (a/2) σ3`
pub fn pauli_rho(a: f64) -> ComplexMatrix {
    &ComplexMatrix::identity(2).scale_real(0.5) + &sigma3().scale_real(a / 2.0)
}

/// `R = I ⊗ ρ + (a/2 I − σ3/2) ⊗ (b σ1 + c σ2)`
pub fn build_pauli_r(a: f64, b: f64, c: f64) -> Result<ComplexMatrix> {
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|a| must be < 1, got {a}")));
    }
    let omega = &ComplexMatrix::identity(2).scale_real(a / 2.0) - &sigma3().scale_real(0.5);
    let coupling = &sigma1().scale_real(b) + &sigma2().scale_real(c);
    Ok(&kron(&ComplexMatrix::identity(2), &pauli_rho(a)) + &kron(&omega, &coupling))
}

/// `R = Σ P_j ⊗ P_j` over projectors of `ρ`.
pub fn build_commuting_r(rho: &DensityMatrix, choice: &ProjectorChoice) -> Result<ComplexMatrix> {
    let d = rho.dim();
    let projectors: Vec<ComplexMatrix> = match choice {
        ProjectorChoice::Spectral => eig_hermitian(rho.hermitian())?
            .projectors(DEGENERACY_TOL)
            .into_iter()
            .map(|(_, p)| p)
            .collect(),
        ProjectorChoice::Basis(u) => {
            if u.rows() != d || u.cols() != d {
                return Err(Error::mismatch("commuting-r basis", format!("{d}x{d}"), format!("{}x{}", u.rows(), u.cols())));
            }
            let gram = u.adjoint().matmul(u);
            if gram.max_abs_diff(&ComplexMatrix::identity(d)) > 1e-10 {
                return Err(Error::InvalidParameter("commuting-r basis is not unitary".into()));
            }
            (0..d)
                .map(|k| {
                    let v: Vec<C64> = (0..d).map(|i| u[(i, k)]).collect();
                    ComplexMatrix::outer(&v)
                })
                .collect()
        }
    };
    let mut r = ComplexMatrix::zeros(d * d, d * d);
    for p in &projectors {
        r = &r + &kron(p, p);
    }
    Ok(r)
}

/// Residuals of the two `R` conditions: `(‖tr_2 R − I‖, ‖tr_1((ρ⊗I)R) − ρ‖)`.
pub fn r_condition_residuals(rho: &ComplexMatrix, r: &ComplexMatrix) -> Result<(f64, f64)> {
    let d = rho.rows();
    let tr2 = partial_trace(r, (d, d), TraceSide::Trailing)?;
    let trailing = operator_norm(&(&tr2 - &ComplexMatrix::identity(d)));
    let weighted = kron(rho, &ComplexMatrix::identity(d)).matmul(r);
    let tr1 = partial_trace(&weighted, (d, d), TraceSide::Leading)?;
    let leading = operator_norm(&(&tr1 - rho));
    Ok((trailing, leading))
}

#[derive(Debug)]
struct Block {
    density: Arc<DensityMatrix>,
    /// Entrywise asymmetry removed by symmetrisation after the recursion step.
    asymmetry: f64,
}

/// Generator of a consistent family `{Π_n}`.
#[derive(Debug)]
pub struct SourceFamily {
    kind: SourceKind,
    rho: DensityMatrix,
    r_matrix: Option<ComplexMatrix>,
    pauli: Option<PauliParams>,
    budget: Budget,
    cache: Mutex<Vec<Block>>,
}

impl Clone for SourceFamily {
    fn clone(&self) -> Self {
        let cache = self
            .cache
            .lock()
            .expect("block cache poisoned")
            .iter()
            .map(|b| Block {
                density: Arc::clone(&b.density),
                asymmetry: b.asymmetry,
            })
            .collect();
        Self {
            kind: self.kind,
            rho: self.rho.clone(),
            r_matrix: self.r_matrix.clone(),
            pauli: self.pauli,
            budget: self.budget,
            cache: Mutex::new(cache),
        }
    }
}

impl SourceFamily {
    fn with_parts(kind: SourceKind, rho: DensityMatrix, r: Option<ComplexMatrix>, pauli: Option<PauliParams>) -> Self {
        let first = Block {
            density: Arc::new(rho.clone()),
            asymmetry: 0.0,
        };
        Self {
            kind,
            rho,
            r_matrix: r,
            pauli,
            budget: Budget::default(),
            cache: Mutex::new(vec![first]),
        }
    }

    /// `Π_n = ρ^{⊗n}`
    pub fn bernoulli(rho: DensityMatrix) -> Self {
        Self::with_parts(SourceKind::Bernoulli, rho, None, None)
    }

    /// Commuting-R source with spectral projectors of `ρ`. A degenerate
    /// spectrum makes `Σ P_j ⊗ P_j` violate `tr_2 R = I`; use
    /// [`SourceFamily::commuting_r_with_basis`] to pick rank-one projectors.
    pub fn commuting_r(rho: DensityMatrix) -> Result<Self> {
        Self::commuting_r_with(rho, &ProjectorChoice::Spectral)
    }

    pub fn commuting_r_with_basis(rho: DensityMatrix, basis: ComplexMatrix) -> Result<Self> {
        Self::commuting_r_with(rho, &ProjectorChoice::Basis(basis))
    }

    fn commuting_r_with(rho: DensityMatrix, choice: &ProjectorChoice) -> Result<Self> {
        let r = build_commuting_r(&rho, choice)?;
        validate_r(rho.matrix(), &r)?;
        Ok(Self::with_parts(SourceKind::CommutingR, rho, Some(r), None))
    }

    pub fn pauli_r(a: f64, b: f64, c: f64) -> Result<Self> {
        let r = build_pauli_r(a, b, c)?;
        let rho = DensityMatrix::new(pauli_rho(a))?;
        validate_r(rho.matrix(), &r)?;
        Ok(Self::with_parts(SourceKind::PauliR, rho, Some(r), Some(PauliParams { a, b, c })))
    }

    /// Arbitrary `R`, validated against both consistency conditions.
    pub fn explicit_r(rho: DensityMatrix, r: ComplexMatrix) -> Result<Self> {
        let d = rho.dim();
        if r.rows() != d * d || !r.is_square() {
            return Err(Error::mismatch("explicit R", format!("{0}x{0}", d * d), format!("{}x{}", r.rows(), r.cols())));
        }
        validate_r(rho.matrix(), &r)?;
        Ok(Self::with_parts(SourceKind::ExplicitR, rho, Some(r), None))
    }

    /// Skips the `R` validation. Only for building deliberately inconsistent
    /// negative controls.
    pub fn explicit_r_unchecked(rho: DensityMatrix, r: ComplexMatrix) -> Self {
        Self::with_parts(SourceKind::ExplicitR, rho, Some(r), None)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn r_matrix(&self) -> Option<&ComplexMatrix> {
        self.r_matrix.as_ref()
    }

    pub fn pauli_params(&self) -> Option<PauliParams> {
        self.pauli
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    /// The two-site matrix driving the sequential recursions; for Bernoulli
    /// sources this is `I ⊗ ρ`.
    pub fn transfer_r(&self) -> ComplexMatrix {
        match &self.r_matrix {
            Some(r) => r.clone(),
            None => kron(&ComplexMatrix::identity(self.d()), self.rho.matrix()),
        }
    }

    /// Largest `n` whose block fits the dimension budget.
    pub fn max_block_len(&self) -> usize {
        let mut n = 1;
        while self.budget.check_dim(self.d(), n + 1).is_ok() {
            n += 1;
        }
        n
    }

    /// `Π_n`, built (and cached) by repeated recursion steps.
    pub fn block_density(&self, n: usize) -> Result<Arc<DensityMatrix>> {
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be >= 1".into()));
        }
        self.budget.check_dim(self.d(), n)?;
        let mut cache = self.cache.lock().expect("block cache poisoned");
        while cache.len() < n {
            let next_n = cache.len() + 1;
            let prev = Arc::clone(&cache[cache.len() - 1].density);
            let block = self.step(&prev, next_n)?;
            cache.push(block);
        }
        Ok(Arc::clone(&cache[n - 1].density))
    }

    /// Asymmetry removed when symmetrising `Π_n` (0 for `n = 1`).
    pub fn block_asymmetry(&self, n: usize) -> Result<f64> {
        self.block_density(n)?;
        Ok(self.cache.lock().expect("block cache poisoned")[n - 1].asymmetry)
    }

    fn step(&self, prev: &DensityMatrix, next_n: usize) -> Result<Block> {
        let d = self.d();
        let raw = match &self.r_matrix {
            None => kron(prev.matrix(), self.rho.matrix()),
            Some(r) => {
                let lifted = kron(prev.matrix(), &ComplexMatrix::identity(d));
                let right = apply_local_right(&lifted, r, d, next_n - 2, next_n)?;
                let left = apply_local_left(r, &lifted, d, next_n - 2, next_n)?;
                (&right + &left).scale_real(0.5)
            }
        };
        let (h, asymmetry) = HermitianMatrix::from_hermitian_part(&raw);
        if self.kind == SourceKind::ExplicitR {
            let min = eigenvalues_hermitian(&h)?.last().copied().unwrap_or(0.0);
            if min < PSD_FLOOR {
                return Err(Error::PositivityViolation { n: next_n, eigenvalue: min });
            }
        }
        Ok(Block {
            density: Arc::new(DensityMatrix::from_block(h)),
            asymmetry,
        })
    }

    /// `τ_n(A)` for a shifted local observable, `n = obs.window`.
    pub fn expectation(&self, obs: &ShiftedObservable) -> Result<C64> {
        let pi = self.block_density(obs.window)?;
        expectation(&pi, self.d(), obs)
    }
}

fn validate_r(rho: &ComplexMatrix, r: &ComplexMatrix) -> Result<()> {
    let (trailing, leading) = r_condition_residuals(rho, r)?;
    if trailing > CONSISTENCY_TOL || leading > CONSISTENCY_TOL {
        return Err(Error::InconsistentR {
            trailing_residual: trailing,
            leading_residual: leading,
        });
    }
    Ok(())
}

/// A local observable on `k` contiguous sites placed at `offset` inside a
/// window of `window` sites.
#[derive(Clone, Debug)]
pub struct ShiftedObservable {
    base: ComplexMatrix,
    sites: usize,
    offset: usize,
    window: usize,
}

impl ShiftedObservable {
    pub fn new(base: ComplexMatrix, d: usize, offset: usize, window: usize) -> Result<Self> {
        let mut sites = 0;
        let mut dim = 1;
        while dim < base.rows() {
            dim *= d;
            sites += 1;
        }
        if !base.is_square() || dim != base.rows() {
            return Err(Error::mismatch("observable", format!("square power of {d}"), format!("{}x{}", base.rows(), base.cols())));
        }
        if offset + sites > window {
            return Err(Error::SupportEscape(format!(
                "sites {offset}..{} outside window of {window}",
                offset + sites
            )));
        }
        Ok(Self {
            base,
            sites,
            offset,
            window,
        })
    }

    pub fn base(&self) -> &ComplexMatrix {
        &self.base
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Support as site indices.
    pub fn support(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.sites
    }

    /// Moves the observable `k` sites to the right.
    pub fn shifted(&self, k: usize) -> Result<Self> {
        if self.offset + k + self.sites > self.window {
            return Err(Error::SupportEscape(format!(
                "shift by {k} moves sites past window of {}",
                self.window
            )));
        }
        Ok(Self {
            offset: self.offset + k,
            ..self.clone()
        })
    }

    /// Dense `I ⊗ A ⊗ I` on the whole window.
    pub fn embed(&self, d: usize) -> Result<ComplexMatrix> {
        linalg::embed_contiguous(&self.base, d, self.offset, self.window)
    }
}

/// `tr(A Π_n)` with `A` embedded at its offset. Evaluated on the reduced
/// state of the observable's support.
pub fn expectation(pi_n: &DensityMatrix, d: usize, obs: &ShiftedObservable) -> Result<C64> {
    let dim = checked_pow(d, obs.window).unwrap_or(usize::MAX);
    if pi_n.dim() != dim {
        return Err(Error::mismatch("expectation window", format!("dim {dim}"), format!("dim {}", pi_n.dim())));
    }
    let sites: Vec<usize> = obs.support().collect();
    let reduced = reduce_to_sites(pi_n.matrix(), d, obs.window, &sites)?;
    Ok(obs.base.trace_product(&reduced))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    /// `‖tr_first(Π_n) − Π_{n−1}‖`
    pub leading: f64,
    /// `‖tr_last(Π_n) − Π_{n−1}‖`
    pub trailing: f64,
    /// `‖tr_first(Π_n) − tr_last(Π_n)‖`
    pub stationarity: f64,
    pub trace_error: f64,
    pub asymmetry: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub kind: SourceKind,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn worst(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.leading.max(r.trailing).max(r.stationarity))
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// Marginal residuals of `Π_n` against `Π_{n−1}` for `2 ≤ n ≤ n_max`.
pub fn verify_consistency(f: &SourceFamily, n_max: usize) -> Result<ConsistencyReport> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("n_max must be >= 2".into()));
    }
    let d = f.d();
    let mut rows = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let pi = f.block_density(n)?;
        let prev = f.block_density(n - 1)?;
        let rest = pi.dim() / d;
        let lead = partial_trace(pi.matrix(), (d, rest), TraceSide::Leading)?;
        let trail = partial_trace(pi.matrix(), (rest, d), TraceSide::Trailing)?;
        rows.push(ConsistencyRow {
            n,
            leading: operator_norm(&(&lead - prev.matrix())),
            trailing: operator_norm(&(&trail - prev.matrix())),
            stationarity: operator_norm(&(&lead - &trail)),
            trace_error: (pi.matrix().trace() - C64::new(1.0, 0.0)).norm(),
            asymmetry: f.block_asymmetry(n)?,
        });
    }
    Ok(ConsistencyReport { kind: f.kind(), rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    /// `(n, min eigenvalue of Π_n)`, up to and including the first failure.
    pub min_eigenvalues: Vec<(usize, f64)>,
    pub first_failure: Option<usize>,
}

impl PositivityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Smallest eigenvalue of each `Π_n`, `n ≤ n_max`; stops at the first block
/// below [`PSD_FLOOR`].
pub fn verify_positivity(f: &SourceFamily, n_max: usize) -> Result<PositivityReport> {
    let mut min_eigenvalues = Vec::with_capacity(n_max);
    let mut first_failure = None;
    for n in 1..=n_max {
        let min = match f.block_density(n) {
            Ok(pi) => pi.min_eigenvalue()?,
            Err(Error::PositivityViolation { n: bad, eigenvalue }) if bad == n => eigenvalue,
            Err(e) => return Err(e),
        };
        min_eigenvalues.push((n, min));
        if min < PSD_FLOOR {
            first_failure = Some(n);
            break;
        }
    }
    Ok(PositivityReport {
        min_eigenvalues,
        first_failure,
    })
}

/// Structured-text description of a family.
///
/// `rho`, `r` and `basis` are row-major lists of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: SourceKind,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub rho: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub r: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub basis: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
}

fn default_d() -> usize {
    2
}

fn matrix_from_pairs(what: &str, dim: usize, pairs: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if pairs.len() != dim * dim {
        return Err(Error::Config(format!(
            "{what} needs {} [re, im] entries, found {}",
            dim * dim,
            pairs.len()
        )));
    }
    ComplexMatrix::new(dim, dim, pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())
}

impl FamilySpec {
    pub fn build(&self) -> Result<SourceFamily> {
        let d = self.d;
        if d < 2 {
            return Err(Error::Config(format!("d must be >= 2, got {d}")));
        }
        let rho = || -> Result<DensityMatrix> {
            let pairs = self
                .rho
                .as_ref()
                .ok_or_else(|| Error::Config(format!("{} source needs rho", self.kind.name())))?;
            DensityMatrix::new(matrix_from_pairs("rho", d, pairs)?)
        };
        match self.kind {
            SourceKind::Bernoulli => Ok(SourceFamily::bernoulli(rho()?)),
            SourceKind::CommutingR => match &self.basis {
                Some(b) => SourceFamily::commuting_r_with_basis(rho()?, matrix_from_pairs("basis", d, b)?),
                None => SourceFamily::commuting_r(rho()?),
            },
            SourceKind::PauliR => {
                if d != 2 {
                    return Err(Error::Config("pauli-r sources have d = 2".into()));
                }
                let get = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| Error::Config(format!("pauli-r source needs `{name}`")))
                };
                SourceFamily::pauli_r(get(self.a, "a")?, get(self.b, "b")?, get(self.c, "c")?)
            }
            SourceKind::ExplicitR => {
                let pairs = self
                    .r
                    .as_ref()
                    .ok_or_else(|| Error::Config("explicit-r source needs r".into()))?;
                SourceFamily::explicit_r(rho()?, matrix_from_pairs("r", d * d, pairs)?)
            }
        }
    }

    pub fn pauli(a: f64, b: f64, c: f64) -> Self {
        Self {
            kind: SourceKind::PauliR,
            d: 2,
            rho: None,
            r: None,
            basis: None,
            a: Some(a),
            b: Some(b),
            c: Some(c),
        }
    }

    pub fn diagonal(kind: SourceKind, diag: &[f64]) -> Self {
        let d = diag.len();
        let mut rho = vec![[0.0, 0.0]; d * d];
        for (i, &x) in diag.iter().enumerate() {
            rho[i * d + i] = [x, 0.0];
        }
        Self {
            kind,
            d,
            rho: Some(rho),
            r: None,
            basis: None,
            a: None,
            b: None,
            c: None,
        }
    }
}
