//! Von Neumann block entropies and the inequalities around them.
//!
//! Entropies come from eigenvalues only, with `0 log 0 = 0` applied to
//! eigenvalues below [`ZERO_FLOOR`]; no dense matrix logarithm of a block is
//! ever formed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, eigenvalues_hermitian, kron, ComplexMatrix, HermitianMatrix, C64};
use crate::sources::{DensityMatrix, SourceFamily, SourceKind};

/// Eigenvalues below this count as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-14;
/// Slack allowed on entropy inequalities.
pub const ENTROPY_TOL: f64 = 1e-9;

/// `x log x` with the `0 log 0 = 0` convention.
pub fn xlogx(x: f64) -> f64 {
    if x < ZERO_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

/// `−Σ λ log λ`
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    -eigenvalues.iter().map(|&l| xlogx(l)).sum::<f64>()
}

pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&rho.eigenvalues()?))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    /// `H_n` for `n = 1..=n_max`.
    pub block_entropies: Vec<f64>,
    /// `H_{n_max} / n_max`
    pub rate_by_ratio: f64,
    /// `H_{n_max} − H_{n_max−1}` (equals `H_1` when `n_max = 1`).
    pub rate_by_difference: f64,
    /// `S(ρ) = H_1`
    pub von_neumann_signal: f64,
    pub log_d: f64,
}

impl EntropyReport {
    pub fn n_max(&self) -> usize {
        self.block_entropies.len()
    }

    /// `H_n`, 1-based.
    pub fn h(&self, n: usize) -> f64 {
        self.block_entropies[n - 1]
    }

    pub fn ratio(&self, n: usize) -> f64 {
        self.h(n) / n as f64
    }

    pub fn difference(&self, n: usize) -> f64 {
        if n == 1 {
            self.h(1)
        } else {
            self.h(n) - self.h(n - 1)
        }
    }
}

/// Block entropies of a family up to `n_max`.
pub fn block_entropy_sequence(f: &SourceFamily, n_max: usize) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let block_entropies = (1..=n_max)
        .map(|n| von_neumann(&*f.block_density(n)?))
        .collect::<Result<Vec<_>>>()?;
    let last = block_entropies[n_max - 1];
    let rate_by_difference = if n_max == 1 {
        last
    } else {
        last - block_entropies[n_max - 2]
    };
    Ok(EntropyReport {
        rate_by_ratio: last / n_max as f64,
        rate_by_difference,
        von_neumann_signal: block_entropies[0],
        log_d: (f.d() as f64).ln(),
        block_entropies,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityVerdict {
    /// `min over splits of H_m + H_n − H_{m+n}`
    pub worst_margin: f64,
    pub worst_split: (usize, usize),
    pub passed: bool,
}

/// `H_{m+n} ≤ H_m + H_n` over every split with `m + n ≤ n_max`.
pub fn check_subadditivity(report: &EntropyReport) -> Result<SubadditivityVerdict> {
    let n_max = report.n_max();
    if n_max < 2 {
        return Err(Error::InvalidParameter("subadditivity needs n_max >= 2".into()));
    }
    let mut worst = (f64::INFINITY, (1, 1));
    for m in 1..n_max {
        for n in 1..=(n_max - m) {
            let margin = report.h(m) + report.h(n) - report.h(m + n);
            if margin < worst.0 {
                worst = (margin, (m, n));
            }
        }
    }
    Ok(SubadditivityVerdict {
        worst_margin: worst.0,
        worst_split: worst.1,
        passed: worst.0 >= -ENTROPY_TOL,
    })
}

/// `tr(A log A − A log B) − tr(A − B)` for positive semidefinite `A`, `B`.
///
/// Returns `+∞` when `A` has weight outside the support of `B`.
pub fn klein_gap(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::mismatch("klein_gap", a.dim(), b.dim()));
    }
    let a_log_a = -entropy_of_spectrum(&eigenvalues_hermitian(a)?);
    let eb = eig_hermitian(b)?;
    let am = a.matrix();
    let mut a_log_b = 0.0;
    for (k, &mu) in eb.eigenvalues.iter().enumerate() {
        let v = eb.eigenvector(k);
        // ⟨v|A|v⟩
        let weight: f64 = (0..v.len())
            .map(|i| {
                let av: C64 = (0..v.len()).map(|j| am[(i, j)] * v[j]).sum();
                (v[i].conj() * av).re
            })
            .sum();
        if mu < ZERO_FLOOR {
            if weight > 1e-12 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        a_log_b += weight * mu.ln();
    }
    let trace_diff = am.trace().re - b.matrix().trace().re;
    Ok(a_log_a - a_log_b - trace_diff)
}

/// Klein gap for `A = Π_{m+n}`, `B = Π_m ⊗ Π_n`, the instance behind
/// subadditivity.
pub fn klein_gap_for_split(f: &SourceFamily, m: usize, n: usize) -> Result<f64> {
    let joint = f.block_density(m + n)?;
    let product = kron(f.block_density(m)?.matrix(), f.block_density(n)?.matrix());
    klein_gap(joint.hermitian(), &HermitianMatrix::from_hermitian_part(&product).0)
}

/// `−tr((ρ⊗I) R log R)` for a commuting-R source.
pub fn commuting_r_closed_form(f: &SourceFamily) -> Result<f64> {
    if f.kind() != SourceKind::CommutingR {
        return Err(Error::InvalidParameter(format!(
            "closed form applies to commuting-r sources, not {}",
            f.kind().name()
        )));
    }
    let r = f.r_matrix().expect("commuting-r source carries R");
    let (rh, _) = HermitianMatrix::from_hermitian_part(r);
    let r_log_r = eig_hermitian(&rh)?.map(xlogx);
    let weighted = kron(f.rho().matrix(), &ComplexMatrix::identity(f.d()));
    Ok(-weighted.trace_product(&r_log_r).re)
}

/// `log d`-normalised upper bound check: every rate estimate is at most
/// `S(ρ)`, which is at most `log d`.
pub fn bound_chain_holds(report: &EntropyReport) -> bool {
    let s = report.von_neumann_signal;
    (1..=report.n_max()).all(|n| report.ratio(n) <= s + ENTROPY_TOL && report.difference(n) <= s + ENTROPY_TOL)
        && s <= report.log_d + ENTROPY_TOL
}
