//! Positivity certificate for the two-level Pauli source.
//!
//! With `ρ = I/2 + (a/2)σ3`, `ω = (a/2)I − σ3/2` and `Q = ρ⁻¹(bσ1 + cσ2)`,
//! the blocks satisfy `Π_{n+1} = Π_n⊗ρ + ½(Π_n⊗ρ)S_{n+1} + ½S_{n+1}†(Π_n⊗ρ)`
//! with `S_n = I_{n−2}⊗ω⊗Q`. The operators `A_n = Π_n(I_{n−1}⊗ω)Π_n⁻¹`
//! obey
//!
//! ```text
//! A_n = G (I_{n−1}⊗ω) G⁻¹,   G = I + ½ A_{n−1}⊗Q† + ½ S_n†,   A_1 = ω,
//! ```
//!
//! and `‖A_n‖ ≤ 1` for all `n` whenever `q = ‖Q‖ < 2(1−w)/(1+w)²`,
//! `w = ‖ω‖`, which keeps every `Π_n` positive.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron, operator_norm, sigma1, sigma2, sigma3, ComplexMatrix};
use crate::par::{self, Execution};
use crate::sources::{pauli_rho, verify_positivity, SourceFamily};

/// Relative agreement required between the two routes to `A_n`.
pub const RECURSION_TOL: f64 = 1e-8;
/// Eigenvalue below which `Π_n` counts as singular.
pub const SINGULAR_FLOOR: f64 = 1e-12;
/// Slack on `‖A_n‖ ≤ 1` and on the norm bound.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct OmegaQ {
    pub omega: ComplexMatrix,
    pub q_matrix: ComplexMatrix,
    /// `‖ω‖`
    pub w: f64,
    /// `‖Q‖`
    pub q: f64,
}

fn check_a(a: f64) -> Result<()> {
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("need |a| < 1, got {a}")));
    }
    Ok(())
}

pub fn build_omega_q(a: f64, b: f64, c: f64) -> Result<OmegaQ> {
    check_a(a)?;
    let omega = &ComplexMatrix::identity(2).scale_real(a / 2.0) - &sigma3().scale_real(0.5);
    let rho_inv = pauli_rho(a).inverse()?;
    let q_matrix = rho_inv.matmul(&(&sigma1().scale_real(b) + &sigma2().scale_real(c)));
    Ok(OmegaQ {
        w: operator_norm(&omega),
        q: operator_norm(&q_matrix),
        omega,
        q_matrix,
    })
}

/// `2(1−w)/(1+w)²`
pub fn threshold(w: f64) -> f64 {
    2.0 * (1.0 - w) / (1.0 + w).powi(2)
}

/// Right side of the norm estimate for `‖A_n‖` given `‖A_{n−1}‖ ≤ 1`:
/// `(1 + q/2 + wq/2) w / (1 − q/2 − wq/2)`. Infinite when the denominator
/// is not positive.
pub fn norm_bound(w: f64, q: f64) -> f64 {
    let x = q / 2.0 + w * q / 2.0;
    if x >= 1.0 {
        f64::INFINITY
    } else {
        (1.0 + x) * w / (1.0 - x)
    }
}

/// `S_n = I_{n−2}⊗ω⊗Q`, `n ≥ 2`.
pub fn s_matrix(oq: &OmegaQ, n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter("S_n needs n >= 2".into()));
    }
    let tail = kron(&oq.omega, &oq.q_matrix);
    Ok(kron(&ComplexMatrix::identity(1 << (n - 2)), &tail))
}

/// `‖Π_{n+1} − (Π_n⊗ρ + ½(Π_n⊗ρ)S_{n+1} + ½S_{n+1}†(Π_n⊗ρ))‖_max`
pub fn block_identity_residual(f: &SourceFamily, oq: &OmegaQ, n: usize) -> Result<f64> {
    let rho = f.rho().matrix();
    let base = kron(f.block_density(n)?.matrix(), rho);
    let s = s_matrix(oq, n + 1)?;
    let predicted = &(&base + &base.matmul(&s).scale_real(0.5)) + &s.adjoint().matmul(&base).scale_real(0.5);
    Ok(f.block_density(n + 1)?.matrix().max_abs_diff(&predicted))
}

#[derive(Clone, Debug, Serialize)]
pub struct ANStep {
    pub n: usize,
    /// `‖A_n‖` from the definition.
    pub norm: f64,
    /// `‖A_n‖` from the recursion.
    pub recursion_norm: f64,
    /// `‖A_def − A_rec‖_max / ‖A_def‖_max`
    pub relative_error: f64,
    /// Condition number of `Π_n` (1 at `n = 1`).
    pub pi_condition: f64,
    /// Condition number of `G` (1 at `n = 1`).
    pub g_condition: f64,
}

/// `A_n` for `n = 1..=n_max` computed from the blocks and through the
/// recursion. The recursion is fed its own previous output, so agreement
/// at every step checks the whole chain.
pub fn a_n_recursion(f: &SourceFamily, oq: &OmegaQ, n_max: usize) -> Result<Vec<ANStep>> {
    let (steps, singular) = a_n_steps(f, oq, n_max)?;
    match singular {
        Some(min_eigenvalue) => Err(Error::Singular { min_eigenvalue }),
        None => Ok(steps),
    }
}

/// Steps up to the first singular block, plus that block's smallest
/// eigenvalue if one was hit.
fn a_n_steps(f: &SourceFamily, oq: &OmegaQ, n_max: usize) -> Result<(Vec<ANStep>, Option<f64>)> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let norm1 = operator_norm(&oq.omega);
    let mut steps = vec![ANStep {
        n: 1,
        norm: norm1,
        recursion_norm: norm1,
        relative_error: 0.0,
        pi_condition: 1.0,
        g_condition: 1.0,
    }];
    let q_dag = oq.q_matrix.adjoint();
    let mut prev = oq.omega.clone();
    for n in 2..=n_max {
        let pi = f.block_density(n)?;
        let e = eig_hermitian(pi.hermitian())?;
        let (max_eig, min_eig) = (e.eigenvalues[0], *e.eigenvalues.last().expect("non-empty"));
        if min_eig < SINGULAR_FLOOR {
            return Ok((steps, Some(min_eig)));
        }
        let pi_inv = e.map(|l| 1.0 / l);
        let local_omega = kron(&ComplexMatrix::identity(1 << (n - 1)), &oq.omega);
        let by_definition = pi.matrix().matmul(&local_omega).matmul(&pi_inv);

        let dim = 1 << n;
        let g = &(&ComplexMatrix::identity(dim) + &kron(&prev, &q_dag).scale_real(0.5))
            + &s_matrix(oq, n)?.adjoint().scale_real(0.5);
        let g_inv = g.inverse()?;
        let by_recursion = g.matmul(&local_omega).matmul(&g_inv);

        let scale = by_definition.max_abs().max(f64::MIN_POSITIVE);
        steps.push(ANStep {
            n,
            norm: operator_norm(&by_definition),
            recursion_norm: operator_norm(&by_recursion),
            relative_error: by_definition.max_abs_diff(&by_recursion) / scale,
            pi_condition: max_eig / min_eig,
            g_condition: g.condition_number(),
        });
        prev = by_recursion;
    }
    Ok((steps, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityCertificate {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub w: f64,
    /// `(1+|a|)/2`
    pub w_closed_form: f64,
    pub q: f64,
    pub threshold: f64,
    /// `q < threshold`
    pub certified: bool,
    pub n_max: usize,
    pub a_n_norms: Vec<f64>,
    pub recursion_errors: Vec<f64>,
    pub pi_conditions: Vec<f64>,
    /// First `n` whose `Π_n` is singular, which ends the `A_n` sequence.
    pub singular_at: Option<usize>,
    /// `‖S_n‖ − ‖ω‖‖Q‖` at `n = 2`.
    pub s_norm_gap: f64,
    /// Worst residual of the block identity for `Π_{n+1}`.
    pub block_identity_residual: f64,
    pub norm_bound: f64,
    /// Whenever `‖A_{n−1}‖ ≤ 1`, the observed `‖A_n‖` is below the bound.
    pub bound_dominates: bool,
    pub min_eigenvalues: Vec<f64>,
    pub positivity_holds: bool,
    pub recursion_agrees: bool,
    pub norms_within_one: bool,
}

impl PositivityCertificate {
    /// Certified parameters must deliver everything the certificate claims.
    pub fn sound(&self) -> bool {
        !self.certified || (self.positivity_holds && self.recursion_agrees && self.norms_within_one && self.bound_dominates)
    }
}

pub fn certify(a: f64, b: f64, c: f64, n_max: usize) -> Result<PositivityCertificate> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("certificate needs n_max >= 2".into()));
    }
    let oq = build_omega_q(a, b, c)?;
    let f = SourceFamily::pauli_r(a, b, c)?;
    let thr = threshold(oq.w);
    let bound = norm_bound(oq.w, oq.q);

    let positivity = verify_positivity(&f, n_max)?;
    let min_eigenvalues: Vec<f64> = positivity.min_eigenvalues.iter().map(|&(_, l)| l).collect();

    let (steps, singular) = a_n_steps(&f, &oq, n_max)?;
    let singular_at = singular.map(|_| steps.len() + 1);
    let a_n_norms: Vec<f64> = steps.iter().map(|s| s.norm).collect();
    let bound_dominates = a_n_norms
        .windows(2)
        .all(|w| w[0] > 1.0 + NORM_SLACK || w[1] <= bound + NORM_SLACK);

    let s2 = s_matrix(&oq, 2)?;
    let s_norm_gap = operator_norm(&s2) - oq.w * oq.q;
    let mut identity_residual = 0.0f64;
    for n in 1..n_max {
        identity_residual = identity_residual.max(block_identity_residual(&f, &oq, n)?);
    }
    Ok(PositivityCertificate {
        a,
        b,
        c,
        w: oq.w,
        w_closed_form: (1.0 + a.abs()) / 2.0,
        q: oq.q,
        threshold: thr,
        certified: oq.q < thr,
        n_max,
        recursion_errors: steps.iter().map(|s| s.relative_error).collect(),
        pi_conditions: steps.iter().map(|s| s.pi_condition).collect(),
        recursion_agrees: singular_at.is_none() && steps.iter().all(|s| s.relative_error <= RECURSION_TOL),
        norms_within_one: singular_at.is_none() && a_n_norms.iter().all(|&x| x <= 1.0 + NORM_SLACK),
        a_n_norms,
        singular_at,
        s_norm_gap,
        block_identity_residual: identity_residual,
        norm_bound: bound,
        bound_dominates,
        positivity_holds: positivity.passed(),
        min_eigenvalues,
    })
}

/// Certificates for a grid of `(a, b, c)` points, in input order.
pub fn certify_grid(points: &[(f64, f64, f64)], n_max: usize, exec: Execution) -> Vec<Result<PositivityCertificate>> {
    par::map_slice(exec, points, |&(a, b, c)| certify(a, b, c, n_max))
}

/// Cartesian product of the three axes, `a` slowest.
pub fn grid(a: &[f64], b: &[f64], c: &[f64]) -> Vec<(f64, f64, f64)> {
    a.iter()
        .flat_map(|&x| b.iter().flat_map(move |&y| c.iter().map(move |&z| (x, y, z))))
        .collect()
}

/// `‖Q‖` in closed form: `2√(b²+c²)/(1−|a|)`.
pub fn q_closed_form(a: f64, b: f64, c: f64) -> f64 {
    2.0 * (b * b + c * c).sqrt() / (1.0 - a.abs())
}
