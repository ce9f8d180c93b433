//! Measurements on a quantum source and the classical sources they induce.
//!
//! A [`Pom`] `{A_1..A_r}` turns the block states into cylinder probabilities
//! `μ_n(k_1..k_n) = tr((A_{k_1} ⊗ … ⊗ A_{k_n}) Π_n)`. Two independent routes
//! compute them:
//!
//! * [`cylinder_measure`] contracts the dense block `Π_n` site by site;
//! * [`TransferEngine`] never forms `Π_n`. It carries the conditional
//!   one-site state `T` through `T' = ½ tr_1[((A_x T + T A_x) ⊗ I) R]`,
//!   starting from `T = ρ`, so a word of length `n` costs `O(n d^4)`.
//!
//! Symbols are 0-based in the API (`0..r`); text exports print them 1-based.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{entropy_of_spectrum, xlogx};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, eigenvalues_hermitian, ComplexMatrix, HermitianMatrix, C64, PSD_FLOOR,
};
use crate::par::{self, Execution};
use crate::random;
use crate::sources::{DensityMatrix, SourceFamily};

/// Tolerance for `Σ A_j = I`, positivity and projector identities.
pub const POM_TOL: f64 = 1e-10;
/// Eigenvalues above this count toward an operator's rank.
pub const RANK_TOL: f64 = 1e-10;

/// Positive operator valued measure on `C^d`.
#[derive(Clone, Debug)]
pub struct Pom {
    operators: Vec<ComplexMatrix>,
    ranks: Vec<usize>,
    projective: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PomVerdict {
    pub valid: bool,
    /// `‖Σ A_j − I‖_max`
    pub completeness_residual: f64,
    pub min_eigenvalues: Vec<f64>,
    pub max_asymmetry: f64,
    pub ranks: Vec<usize>,
    pub projective: bool,
    /// `max_j ‖A_j² − A_j‖`, `max_{j≠k} ‖A_j A_k‖`
    pub projector_residual: f64,
}

/// Checks both POM conditions and the projective flag.
pub fn validate_pom(operators: &[ComplexMatrix]) -> Result<PomVerdict> {
    let first = operators
        .first()
        .ok_or_else(|| Error::InvalidPom("no operators".into()))?;
    let d = first.rows();
    if operators.iter().any(|a| a.rows() != d || a.cols() != d) {
        return Err(Error::InvalidPom("operators differ in shape".into()));
    }
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut min_eigenvalues = Vec::with_capacity(operators.len());
    let mut ranks = Vec::with_capacity(operators.len());
    let mut max_asymmetry = 0.0f64;
    for a in operators {
        sum = &sum + a;
        max_asymmetry = max_asymmetry.max(a.max_asymmetry());
        let (h, _) = HermitianMatrix::from_hermitian_part(a);
        let vals = eigenvalues_hermitian(&h)?;
        min_eigenvalues.push(vals.last().copied().unwrap_or(0.0));
        ranks.push(vals.iter().filter(|&&l| l > RANK_TOL).count());
    }
    let completeness_residual = sum.max_abs_diff(&ComplexMatrix::identity(d));
    let mut projector_residual = 0.0f64;
    for (j, a) in operators.iter().enumerate() {
        projector_residual = projector_residual.max(a.matmul(a).max_abs_diff(a));
        for b in &operators[j + 1..] {
            projector_residual = projector_residual.max(a.matmul(b).max_abs());
        }
    }
    let valid = completeness_residual <= POM_TOL
        && max_asymmetry <= POM_TOL
        && min_eigenvalues.iter().all(|&l| l >= PSD_FLOOR);
    Ok(PomVerdict {
        valid,
        completeness_residual,
        min_eigenvalues,
        max_asymmetry,
        ranks,
        projective: projector_residual <= POM_TOL,
        projector_residual,
    })
}

impl Pom {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let v = validate_pom(&operators)?;
        if !v.valid {
            return Err(Error::InvalidPom(format!(
                "|sum - I| = {:.3e}, min eigenvalues {:?}, asymmetry {:.3e}",
                v.completeness_residual, v.min_eigenvalues, v.max_asymmetry
            )));
        }
        Ok(Self {
            operators,
            ranks: v.ranks,
            projective: v.projective,
        })
    }

    /// Rank-one projectors onto the eigenvectors of `ρ`, largest eigenvalue
    /// first.
    pub fn eigenbasis(rho: &DensityMatrix) -> Result<Self> {
        let e = eig_hermitian(rho.hermitian())?;
        Self::from_basis(&e.eigenvectors)
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(u: &ComplexMatrix) -> Result<Self> {
        let d = u.rows();
        Self::new(
            (0..d)
                .map(|k| {
                    let v: Vec<C64> = (0..d).map(|i| u[(i, k)]).collect();
                    ComplexMatrix::outer(&v)
                })
                .collect(),
        )
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&ComplexMatrix::identity(d)).expect("computational basis is a POM")
    }

    /// `r` copies of `I/r`.
    pub fn uniform(d: usize, r: usize) -> Self {
        Self::new(vec![ComplexMatrix::identity(d).scale_real(1.0 / r as f64); r]).expect("uniform POM")
    }

    /// Projectors onto groups of computational basis states; `groups` must
    /// partition `0..d`.
    pub fn coordinate_groups(d: usize, groups: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            groups
                .iter()
                .map(|g| {
                    let mut diag = vec![0.0; d];
                    g.iter().for_each(|&i| diag[i] = 1.0);
                    ComplexMatrix::from_diagonal(&diag)
                })
                .collect(),
        )
    }

    /// Rank-one projectors onto a Haar-random basis.
    pub fn random_projective<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self::from_basis(&random::haar_unitary(d, rng)).expect("unitary columns form a POM")
    }

    /// `A_j = S^{-1/2} B_j S^{-1/2}` with random positive `B_j`, `S = Σ B_j`.
    pub fn random_generic<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Self {
        let bs: Vec<ComplexMatrix> = (0..r).map(|_| random::psd(d, rng)).collect();
        let mut s = ComplexMatrix::zeros(d, d);
        for b in &bs {
            s = &s + b;
        }
        let inv_sqrt = eig_hermitian(&HermitianMatrix::from_hermitian_part(&s).0)
            .expect("eigensolver")
            .map(|l| 1.0 / l.sqrt());
        let ops = bs
            .iter()
            .map(|b| inv_sqrt.matmul(b).matmul(&inv_sqrt).hermitian_part())
            .collect();
        Self::new(ops).expect("normalised positive operators form a POM")
    }

    pub fn r(&self) -> usize {
        self.operators.len()
    }

    pub fn d(&self) -> usize {
        self.operators[0].rows()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    /// `m = min rank(A_j)`
    pub fn min_rank(&self) -> usize {
        self.ranks.iter().copied().min().unwrap_or(0)
    }

    /// `M = max rank(A_j)`
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    /// `tr(A_j)` for each outcome.
    pub fn traces(&self) -> Vec<f64> {
        self.operators.iter().map(|a| a.trace().re).collect()
    }

    fn check_source(&self, f: &SourceFamily) -> Result<()> {
        if self.d() != f.d() {
            return Err(Error::mismatch("POM dimension", f.d(), self.d()));
        }
        Ok(())
    }
}

fn word_index(word: &[usize], r: usize) -> usize {
    word.iter().fold(0, |acc, &x| acc * r + x)
}

fn index_word(mut index: usize, r: usize, n: usize) -> Vec<usize> {
    let mut w = vec![0; n];
    for slot in w.iter_mut().rev() {
        *slot = index % r;
        index /= r;
    }
    w
}

/// Exact probabilities of all length-`n` words, stored densely with site 1
/// as the most significant digit.
#[derive(Clone, Debug, Serialize)]
pub struct CylinderMeasure {
    n: usize,
    r: usize,
    probs: Vec<f64>,
}

impl CylinderMeasure {
    fn from_raw(n: usize, r: usize, mut probs: Vec<f64>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                if *p < PSD_FLOOR {
                    return Err(Error::NegativeProbability(*p));
                }
                *p = 0.0;
            }
        }
        Ok(Self { n, r, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the word's length-`n` prefix.
    pub fn prob(&self, word: &[usize]) -> Result<f64> {
        if word.len() < self.n || word[..self.n].iter().any(|&x| x >= self.r) {
            return Err(Error::mismatch(
                "cylinder word",
                format!("{} symbols in 0..{}", self.n, self.r),
                format!("{word:?}"),
            ));
        }
        Ok(self.probs[word_index(&word[..self.n], self.r)])
    }

    pub fn word(&self, index: usize) -> Vec<usize> {
        index_word(index, self.r, self.n)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out the last symbol.
    pub fn marginal(&self) -> Option<CylinderMeasure> {
        (self.n > 1).then(|| CylinderMeasure {
            n: self.n - 1,
            r: self.r,
            probs: self.probs.chunks(self.r).map(|c| c.iter().sum()).collect(),
        })
    }

    /// Largest deviation between this measure with its last symbol summed
    /// out and `shorter`.
    pub fn marginal_residual(&self, shorter: &CylinderMeasure) -> f64 {
        match self.marginal() {
            Some(m) if m.n == shorter.n && m.r == shorter.r => m
                .probs
                .iter()
                .zip(&shorter.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }
}

/// `tr(A ρ)` for a d×d operator pair.
fn trace_prod(a: &ComplexMatrix, t: &ComplexMatrix) -> f64 {
    a.trace_product(t).re
}

/// Contracts the first site of `m` (dim `d·rest`) against `a`:
/// `tr_1((A ⊗ I) m)`.
fn contract_first(m: &ComplexMatrix, a: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let rest = m.rows() / d;
    let dim = m.rows();
    let data = m.as_slice();
    let mut out = ComplexMatrix::zeros(rest, rest);
    for p in 0..d {
        for q in 0..d {
            // (A ⊗ I) m, traced: Σ_{p,q} A[q,p] m[(p,·),(q,·)]
            let coef = a[(q, p)];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            let o = out.as_mut_slice();
            for i in 0..rest {
                let row = &data[(p * rest + i) * dim + q * rest..(p * rest + i) * dim + q * rest + rest];
                for (dst, &x) in o[i * rest..(i + 1) * rest].iter_mut().zip(row) {
                    *dst += coef * x;
                }
            }
        }
    }
    out
}

fn contract_tree(m: &ComplexMatrix, ops: &[ComplexMatrix], d: usize, out: &mut [f64]) {
    let r = ops.len();
    if m.rows() == d {
        for (slot, a) in out.iter_mut().zip(ops) {
            *slot = trace_prod(a, m);
        }
        return;
    }
    let stride = out.len() / r;
    for (x, chunk) in out.chunks_mut(stride).enumerate() {
        let child = contract_first(m, &ops[x], d);
        contract_tree(&child, ops, d, chunk);
    }
}

/// Exact `μ_n` from the dense block `Π_n`.
pub fn cylinder_measure(f: &SourceFamily, p: &Pom, n: usize) -> Result<CylinderMeasure> {
    cylinder_measure_with(f, p, n, Execution::default())
}

pub fn cylinder_measure_with(f: &SourceFamily, p: &Pom, n: usize, exec: Execution) -> Result<CylinderMeasure> {
    p.check_source(f)?;
    let words = f.budget().check_words(p.r(), n)?;
    let pi = f.block_density(n)?;
    let d = f.d();
    let r = p.r();
    if n == 1 {
        let probs = p.operators().iter().map(|a| trace_prod(a, pi.matrix())).collect();
        return CylinderMeasure::from_raw(1, r, probs);
    }
    let stride = words / r;
    let parts = par::map_indexed(exec, r, |x| {
        let child = contract_first(pi.matrix(), &p.operators()[x], d);
        let mut out = vec![0.0; stride];
        contract_tree(&child, p.operators(), d, &mut out);
        out
    });
    CylinderMeasure::from_raw(n, r, parts.concat())
}

/// Exact `μ_n` by enumerating the transfer recursion over the prefix tree.
/// Needs only the word budget, not the density budget.
pub fn cylinder_measure_by_transfer(f: &SourceFamily, p: &Pom, n: usize) -> Result<CylinderMeasure> {
    p.check_source(f)?;
    let words = f.budget().check_words(p.r(), n)?;
    let engine = TransferEngine::new(f, p)?;
    let mut probs = vec![0.0; words];
    let mut state = engine.unnormalised_initial();
    fill_by_transfer(&engine, &mut state, n, &mut probs);
    CylinderMeasure::from_raw(n, p.r(), probs)
}

fn fill_by_transfer(engine: &TransferEngine, t: &mut ComplexMatrix, remaining: usize, out: &mut [f64]) {
    let r = engine.ops.len();
    if remaining == 1 {
        for (slot, a) in out.iter_mut().zip(&engine.ops) {
            *slot = trace_prod(a, t);
        }
        return;
    }
    let stride = out.len() / r;
    for (x, chunk) in out.chunks_mut(stride).enumerate() {
        let mut next = engine.step(t, x);
        fill_by_transfer(engine, &mut next, remaining - 1, chunk);
    }
}

/// Conditional one-site state after a prefix. `t` is normalised to unit
/// trace; the prefix probability is `exp(log_weight)`, so long words do not
/// underflow.
#[derive(Clone, Debug)]
pub struct TransferState {
    pub t: ComplexMatrix,
    pub log_weight: f64,
    pub len: usize,
}

impl TransferState {
    pub fn probability(&self) -> f64 {
        self.log_weight.exp()
    }

    /// `T` scaled back to trace equal to the prefix probability.
    pub fn unnormalised(&self) -> ComplexMatrix {
        self.t.scale_real(self.probability())
    }
}

/// Sequential evaluator of cylinder probabilities.
#[derive(Clone, Debug)]
pub struct TransferEngine {
    d: usize,
    rho: ComplexMatrix,
    r_matrix: ComplexMatrix,
    ops: Vec<ComplexMatrix>,
}

impl TransferEngine {
    pub fn new(f: &SourceFamily, p: &Pom) -> Result<Self> {
        p.check_source(f)?;
        Ok(Self {
            d: f.d(),
            rho: f.rho().matrix().clone(),
            r_matrix: f.transfer_r(),
            ops: p.operators().to_vec(),
        })
    }

    pub fn r(&self) -> usize {
        self.ops.len()
    }

    fn unnormalised_initial(&self) -> ComplexMatrix {
        self.rho.clone()
    }

    pub fn initial(&self) -> TransferState {
        TransferState {
            t: self.rho.clone(),
            log_weight: 0.0,
            len: 0,
        }
    }

    /// `½ tr_1[((A_x T + T A_x) ⊗ I) R]`, no normalisation.
    fn step(&self, t: &ComplexMatrix, x: usize) -> ComplexMatrix {
        self.step_op(t, &self.ops[x])
    }

    fn step_op(&self, t: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
        let d = self.d;
        let m = &a.matmul(t) + &t.matmul(a);
        let r = &self.r_matrix;
        ComplexMatrix::from_fn(d, d, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..d {
                for q in 0..d {
                    acc += m[(p, q)] * r[(q * d + i, p * d + j)];
                }
            }
            acc * 0.5
        })
    }

    /// Conditional probabilities of the next symbol.
    pub fn next_symbol_probabilities(&self, s: &TransferState) -> Vec<f64> {
        self.ops.iter().map(|a| trace_prod(a, &s.t)).collect()
    }

    pub fn advance(&self, s: &TransferState, x: usize) -> TransferState {
        if s.log_weight == f64::NEG_INFINITY {
            return TransferState {
                len: s.len + 1,
                ..s.clone()
            };
        }
        let next = self.step(&s.t, x);
        let p = next.trace().re;
        if p <= 0.0 {
            return TransferState {
                t: s.t.clone(),
                log_weight: f64::NEG_INFINITY,
                len: s.len + 1,
            };
        }
        TransferState {
            t: next.scale_real(1.0 / p),
            log_weight: s.log_weight + p.ln(),
            len: s.len + 1,
        }
    }

    /// Probability of the cylinder fixing `x_pos = symbol` for each
    /// `(pos, symbol)`; free positions are summed out exactly by stepping
    /// with the identity.
    pub fn cylinder_probability(&self, constraints: &[(usize, usize)]) -> Result<f64> {
        let Some(len) = constraints.iter().map(|&(pos, _)| pos + 1).max() else {
            return Ok(1.0);
        };
        let mut fixed: Vec<Option<usize>> = vec![None; len];
        for &(pos, x) in constraints {
            if x >= self.r() {
                return Err(Error::mismatch("cylinder symbol", format!("< {}", self.r()), x));
            }
            match fixed[pos] {
                Some(y) if y != x => return Ok(0.0),
                _ => fixed[pos] = Some(x),
            }
        }
        let identity = ComplexMatrix::identity(self.d);
        let mut t = self.rho.clone();
        for slot in &fixed[..len - 1] {
            t = match slot {
                Some(x) => self.step(&t, *x),
                None => self.step_op(&t, &identity),
            };
        }
        let last = fixed[len - 1].expect("last position is constrained");
        Ok(trace_prod(&self.ops[last], &t).max(0.0))
    }

    pub fn prefix(&self, word: &[usize]) -> Result<TransferState> {
        if let Some(&bad) = word.iter().find(|&&x| x >= self.r()) {
            return Err(Error::mismatch("transfer word symbol", format!("< {}", self.r()), bad));
        }
        Ok(word.iter().fold(self.initial(), |s, &x| self.advance(&s, x)))
    }
}

/// State after consuming `word`; `exp(log_weight)` is its cylinder
/// probability.
pub fn transfer_prefix(f: &SourceFamily, p: &Pom, word: &[usize]) -> Result<TransferState> {
    TransferEngine::new(f, p)?.prefix(word)
}

/// Messages drawn from the induced classical source.
#[derive(Clone, Debug)]
pub struct MessageSet {
    pub n: usize,
    pub r: usize,
    pub messages: Vec<Vec<usize>>,
    /// `log μ_n(message)`
    pub log_probs: Vec<f64>,
}

impl MessageSet {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// `f_n = −(1/n) log μ_n(message)`
    pub fn empirical_entropy(&self, i: usize) -> f64 {
        -self.log_probs[i] / self.n as f64
    }

    pub fn empirical_entropies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.empirical_entropy(i)).collect()
    }

    /// Frequencies of each length-`k` prefix, indexed like a
    /// [`CylinderMeasure`].
    pub fn prefix_frequencies(&self, k: usize) -> Vec<f64> {
        let mut counts = vec![0.0; self.r.pow(k as u32)];
        for m in &self.messages {
            counts[word_index(&m[..k], self.r)] += 1.0;
        }
        let total = self.len() as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }

    /// One message per line, 1-based symbols; digits are concatenated when
    /// `r ≤ 9` and space-separated otherwise.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for m in &self.messages {
            let line = if self.r <= 9 {
                m.iter().map(|&x| char::from(b'1' + x as u8)).collect::<String>()
            } else {
                m.iter().map(|&x| (x + 1).to_string()).collect::<Vec<_>>().join(" ")
            };
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// RNG for stream `i` of a seeded run: seeded with `seed ^ i`.
pub fn stream_rng(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ i)
}

fn sample_one(engine: &TransferEngine, n: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let mut state = engine.initial();
    let mut word = Vec::with_capacity(n);
    for _ in 0..n {
        let probs: Vec<f64> = engine
            .next_symbol_probabilities(&state)
            .into_iter()
            .map(|p| p.max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut x = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                x = k;
                break;
            }
        }
        state = engine.advance(&state, x);
        word.push(x);
    }
    (word, state.log_weight)
}

/// Draws `count` messages of length `n` by sequential conditional sampling.
/// Message `i` uses [`stream_rng`]`(seed, i)`, so the set is identical
/// whichever execution mode ran it.
pub fn sample_messages(f: &SourceFamily, p: &Pom, n: usize, count: usize, seed: u64) -> Result<MessageSet> {
    sample_messages_with(f, p, n, count, seed, Execution::default())
}

pub fn sample_messages_with(
    f: &SourceFamily,
    p: &Pom,
    n: usize,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<MessageSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("message length must be >= 1".into()));
    }
    let engine = TransferEngine::new(f, p)?;
    let drawn = par::map_indexed(exec, count, |i| {
        let mut rng = stream_rng(seed, i as u64);
        sample_one(&engine, n, &mut rng)
    });
    let (messages, log_probs) = drawn.into_iter().unzip();
    Ok(MessageSet {
        n,
        r: p.r(),
        messages,
        log_probs,
    })
}

/// `f_n(word) = −(1/n) log μ_n(word[..n])`
pub fn empirical_entropy(m: &CylinderMeasure, word: &[usize]) -> Result<f64> {
    let p = m.prob(word)?;
    if p <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    Ok(-p.ln() / m.n() as f64)
}

/// Empirical entropy through the transfer recursion (log-space, any `n`).
pub fn empirical_entropy_by_transfer(engine: &TransferEngine, word: &[usize]) -> Result<f64> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("empty word".into()));
    }
    let s = engine.prefix(word)?;
    if s.log_weight == f64::NEG_INFINITY {
        return Err(Error::ZeroProbability);
    }
    Ok(-s.log_weight / word.len() as f64)
}

/// `p log p` with `0 log 0 = 0`, no floor: classical word probabilities can
/// legitimately be tiny.
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// `H_n^A = −Σ_w μ_n(w) log μ_n(w)`
pub fn shannon_block_entropy(m: &CylinderMeasure) -> f64 {
    -m.probs().iter().map(|&p| plogp(p)).sum::<f64>()
}

/// Margin of `Σ tr(A_j R) log tr(A_j R) ≤ tr(R log R) + Σ tr(A_j R) log tr(A_j)`
/// (right side minus left side).
pub fn jensen_bound_check(r_density: &DensityMatrix, p: &Pom) -> Result<f64> {
    if p.d() != r_density.dim() {
        return Err(Error::mismatch("jensen_bound_check", r_density.dim(), p.d()));
    }
    let r_log_r = -entropy_of_spectrum(&r_density.eigenvalues()?);
    let mut lhs = 0.0;
    let mut correction = 0.0;
    for a in p.operators() {
        let w = trace_prod(a, r_density.matrix());
        lhs += plogp(w.max(0.0));
        let tr_a = a.trace().re;
        if tr_a > 0.0 {
            correction += w * tr_a.ln();
        }
    }
    Ok(r_log_r + correction - lhs)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantumBound {
    pub n: usize,
    /// `H_n^A`
    pub shannon: f64,
    /// `H_n(Π)`
    pub von_neumann: f64,
    /// `n Σ_k tr(A_k ρ) log tr(A_k)`
    pub correction: f64,
    /// `H_n^A − H_n(Π) + correction`, non-negative up to rounding.
    pub margin: f64,
}

/// Finite-`n` form of the lower bound on the measured entropy:
/// `H_n^A ≥ H_n(Π) − n Σ_k tr(A_k ρ) log tr(A_k)`.
pub fn quantum_bound_check(f: &SourceFamily, p: &Pom, n: usize) -> Result<QuantumBound> {
    let measure = cylinder_measure(f, p, n)?;
    let shannon = shannon_block_entropy(&measure);
    let von_neumann = crate::entropy::von_neumann(&*f.block_density(n)?)?;
    let rho = f.rho().matrix();
    let per_site: f64 = p
        .operators()
        .iter()
        .map(|a| {
            let tr_a = a.trace().re;
            if tr_a > 0.0 {
                trace_prod(a, rho) * tr_a.ln()
            } else {
                0.0
            }
        })
        .sum();
    let correction = n as f64 * per_site;
    Ok(QuantumBound {
        n,
        shannon,
        von_neumann,
        correction,
        margin: shannon - von_neumann + correction,
    })
}

/// Entropy of a one-site outcome distribution, `−Σ tr(A_j ρ) log tr(A_j ρ)`.
pub fn outcome_entropy(rho: &DensityMatrix, p: &Pom) -> f64 {
    -p.operators()
        .iter()
        .map(|a| xlogx(trace_prod(a, rho.matrix()).max(0.0)))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sigma3;

    fn rho_diag() -> DensityMatrix {
        DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap()
    }

    #[test]
    fn pom_validation() {
        let v = validate_pom(Pom::computational(2).operators()).unwrap();
        assert!(v.valid && v.projective);
        assert_eq!(v.ranks, vec![1, 1]);

        let u = Pom::uniform(3, 3);
        assert!(!u.is_projective());
        assert!(u.traces().iter().all(|&t| (t - 1.0).abs() < 1e-15));

        let weighted = Pom::new(vec![
            ComplexMatrix::identity(2).scale_real(0.6),
            ComplexMatrix::identity(2).scale_real(0.4),
        ])
        .unwrap();
        assert!(!weighted.is_projective());
        assert_eq!(weighted.ranks(), &[2, 2]);

        let incomplete = vec![ComplexMatrix::from_diagonal(&[1.0, 0.0])];
        assert!(matches!(Pom::new(incomplete), Err(Error::InvalidPom(_))));
        let negative = vec![
            ComplexMatrix::from_diagonal(&[1.5, 0.0]),
            ComplexMatrix::from_diagonal(&[-0.5, 1.0]),
        ];
        assert!(matches!(Pom::new(negative), Err(Error::InvalidPom(_))));
    }

    #[test]
    fn eigenbasis_orders_by_eigenvalue() {
        let p = Pom::eigenbasis(&rho_diag()).unwrap();
        assert!((p.operators()[0][(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(p.is_projective());
    }

    #[test]
    fn bernoulli_pair_measure() {
        let f = SourceFamily::bernoulli(rho_diag());
        let m = cylinder_measure(&f, &Pom::eigenbasis(f.rho()).unwrap(), 2).unwrap();
        let expected = [0.5625, 0.1875, 0.1875, 0.0625];
        for (a, b) in m.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((m.prob(&[0, 1]).unwrap() - 0.1875).abs() < 1e-14);
        assert!(m.prob(&[0]).is_err());
        assert!(m.prob(&[0, 2]).is_err());
    }

    #[test]
    fn uniform_pom_measure() {
        let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
        let m = cylinder_measure(&f, &Pom::uniform(2, 2), 2).unwrap();
        assert!(m.probs().iter().all(|&p| (p - 0.25).abs() < 1e-14));
    }

    #[test]
    fn commuting_triple_measure() {
        let f = SourceFamily::commuting_r(rho_diag()).unwrap();
        let m = cylinder_measure(&f, &Pom::eigenbasis(f.rho()).unwrap(), 3).unwrap();
        for (i, &p) in m.probs().iter().enumerate() {
            let expected = match i {
                0 => 0.75,
                7 => 0.25,
                _ => 0.0,
            };
            assert!((p - expected).abs() < 1e-14, "word {i}: {p}");
        }
    }

    #[test]
    fn transfer_bernoulli_factorises() {
        let f = SourceFamily::bernoulli(rho_diag());
        let p = Pom::computational(2);
        let s = transfer_prefix(&f, &p, &[0, 0, 1, 0, 1]).unwrap();
        let expected = 0.75f64.powi(3) * 0.25f64.powi(2);
        assert!((s.probability() - expected).abs() < 1e-15);
        assert!((s.unnormalised().trace().re - expected).abs() < 1e-15);
    }

    #[test]
    fn transfer_commuting_zero_words() {
        let f = SourceFamily::commuting_r(rho_diag()).unwrap();
        let p = Pom::eigenbasis(f.rho()).unwrap();
        let s = transfer_prefix(&f, &p, &[0, 0, 1]).unwrap();
        assert!(s.probability() < 1e-12);
        let engine = TransferEngine::new(&f, &p).unwrap();
        assert!(matches!(
            empirical_entropy_by_transfer(&engine, &[0, 1]),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn transfer_matches_dense_pauli() {
        let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
        let p = Pom::eigenbasis(f.rho()).unwrap();
        let dense = cylinder_measure(&f, &p, 4).unwrap();
        // word 1121 in 1-based symbols
        let s = transfer_prefix(&f, &p, &[0, 0, 1, 0]).unwrap();
        let exact = dense.prob(&[0, 0, 1, 0]).unwrap();
        assert!((s.probability() - exact).abs() <= 1e-10 * exact);
        let by_transfer = cylinder_measure_by_transfer(&f, &p, 4).unwrap();
        for (a, b) in dense.probs().iter().zip(by_transfer.probs()) {
            assert!((a - b).abs() <= 1e-10 * a.max(*b) + 1e-15);
        }
    }

    #[test]
    fn empirical_entropies() {
        let f = SourceFamily::bernoulli(rho_diag());
        let p = Pom::eigenbasis(f.rho()).unwrap();
        let m = cylinder_measure_by_transfer(&f, &p, 10).unwrap();
        assert!((empirical_entropy(&m, &[0; 10]).unwrap() + 0.75f64.ln()).abs() < 1e-12);
        assert!((empirical_entropy(&m, &[1; 10]).unwrap() + 0.25f64.ln()).abs() < 1e-12);

        let u = cylinder_measure(&f, &Pom::uniform(2, 2), 3).unwrap();
        assert!((empirical_entropy(&u, &[0, 1, 1]).unwrap() - 2f64.ln()).abs() < 1e-12);

        let c = SourceFamily::commuting_r(rho_diag()).unwrap();
        let cm = cylinder_measure(&c, &p, 2).unwrap();
        assert!(matches!(empirical_entropy(&cm, &[0, 1]), Err(Error::ZeroProbability)));
    }

    #[test]
    fn shannon_entropies() {
        let f = SourceFamily::bernoulli(DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap());
        let u = cylinder_measure(&f, &Pom::uniform(2, 2), 1).unwrap();
        assert!((shannon_block_entropy(&u) - 2f64.ln()).abs() < 1e-15);

        let b = SourceFamily::bernoulli(rho_diag());
        let m = cylinder_measure(&b, &Pom::eigenbasis(b.rho()).unwrap(), 1).unwrap();
        assert!((shannon_block_entropy(&m) - 0.562335144).abs() < 1e-9);

        let c = SourceFamily::commuting_r(rho_diag()).unwrap();
        let p = Pom::eigenbasis(c.rho()).unwrap();
        for n in 1..=4 {
            let m = cylinder_measure(&c, &p, n).unwrap();
            assert!((shannon_block_entropy(&m) - 0.562335144).abs() < 1e-9);
        }
    }

    #[test]
    fn jensen_equality_cases() {
        let rho = rho_diag();
        let margin = jensen_bound_check(&rho, &Pom::eigenbasis(&rho).unwrap()).unwrap();
        assert!(margin.abs() < 1e-14);
        let mixed = DensityMatrix::from_diagonal(&[1.0 / 3.0; 3]).unwrap();
        let margin = jensen_bound_check(&mixed, &Pom::uniform(3, 3)).unwrap();
        assert!(margin.abs() < 1e-14);
    }

    #[test]
    fn quantum_bound_uniform_pom() {
        let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
        let q = quantum_bound_check(&f, &Pom::uniform(2, 2), 3).unwrap();
        assert!((q.shannon - 3.0 * 2f64.ln()).abs() < 1e-12);
        // uniform POM with two outcomes on C^2: tr(A_k) = 1, no correction
        assert!(q.correction.abs() < 1e-15);
        assert!((q.margin - (3.0 * 2f64.ln() - q.von_neumann)).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let f = SourceFamily::bernoulli(rho_diag());
        let p = Pom::computational(2);
        let a = sample_messages_with(&f, &p, 20, 50, 9, Execution::Sequential).unwrap();
        let b = sample_messages_with(&f, &p, 20, 50, 9, Execution::Parallel).unwrap();
        assert_eq!(a.messages, b.messages);
        let c = sample_messages(&f, &p, 20, 50, 10).unwrap();
        assert_ne!(a.messages, c.messages);

        let mut text = Vec::new();
        a.write_text(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert_eq!(text.lines().count(), 50);
        assert!(text.lines().all(|l| l.len() == 20 && l.chars().all(|ch| ch == '1' || ch == '2')));
    }

    #[test]
    fn commuting_samples_are_constant() {
        let f = SourceFamily::commuting_r(rho_diag()).unwrap();
        let p = Pom::eigenbasis(f.rho()).unwrap();
        let s = sample_messages(&f, &p, 30, 200, 4).unwrap();
        assert!(s.messages.iter().all(|m| m.iter().all(|&x| x == m[0])));
    }

    #[test]
    fn marginals_and_mismatch() {
        let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
        let p = Pom::computational(2);
        let m3 = cylinder_measure(&f, &p, 3).unwrap();
        let m2 = cylinder_measure(&f, &p, 2).unwrap();
        assert!(m3.marginal_residual(&m2) < 1e-12);
        assert!(m2.marginal_residual(&m2).is_infinite());
        let p3 = Pom::computational(3);
        assert!(cylinder_measure(&f, &p3, 2).is_err());
        let _ = sigma3();
    }
}
