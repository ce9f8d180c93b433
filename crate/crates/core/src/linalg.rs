//! Dense complex matrices and the handful of kernels the rest of the crate
//! needs: Kronecker products, partial traces over tensor sites, Hermitian
//! eigendecomposition and spectral functions, norms.
//!
//! Storage is row-major `Vec<Complex64>`. Dense products, eigensolvers and
//! singular values are delegated to `faer` through zero-copy row-major views;
//! everything that exploits tensor structure (local operator application,
//! reduction to a subset of sites) is done here directly.
//!
//! Tensor sites follow time order: site 0 is the leftmost (slowest) factor.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Accum, MatMut, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

pub type C64 = Complex64;

/// Entrywise Hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `d^n`, or `None` on overflow.
pub fn checked_pow(d: usize, n: usize) -> Option<usize> {
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d))
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::mismatch("ComplexMatrix::new", "rows, cols >= 1", format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::mismatch("ComplexMatrix::new", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from real entries in row-major order.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(x, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        assert_eq!(self.cols, other.rows, "trace_product: inner dimensions");
        assert_eq!(self.rows, other.cols, "trace_product: outer dimensions");
        let mut acc = ZERO;
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (k, &a) in row.iter().enumerate() {
                acc += a * other.data[k * other.cols + i];
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M†)/2`
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = vec![ZERO; self.rows * rhs.cols];
        faer::linalg::matmul::matmul(
            MatMut::from_row_major_slice_mut(&mut out, self.rows, rhs.cols),
            Accum::Replace,
            self.as_faer(),
            rhs.as_faer(),
            ONE,
            faer::get_global_parallelism(),
        );
        ComplexMatrix {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        }
    }

    /// General inverse through partial-pivot LU.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        if !self.is_square() {
            return Err(Error::mismatch("inverse", "square matrix", format!("{}x{}", self.rows, self.cols)));
        }
        let inv = self.as_faer().partial_piv_lu().inverse();
        let out = ComplexMatrix::from_faer(inv.as_ref());
        if out.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Singular { min_eigenvalue: 0.0 });
        }
        Ok(out)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.as_faer()
            .singular_values()
            .expect("singular value iteration did not converge")
    }

    /// 2-norm condition number `σ_max / σ_min`.
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        let max = s.first().copied().unwrap_or(0.0);
        let min = s.last().copied().unwrap_or(0.0);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Pauli matrices.
pub fn sigma1() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma2() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap()
}

pub fn sigma3() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[1.0, -1.0])
}

/// Kronecker product; `a` occupies the slow (left) index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    let rows = a.rows * rb;
    let cols = a.cols * cb;
    let mut data = vec![ZERO; rows * cols];
    par::for_each_row_mut(&mut data, cols, |r, row| {
        let (ia, ib) = (r / rb, r % rb);
        for ja in 0..a.cols {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            let brow = &b.data[ib * cb..(ib + 1) * cb];
            for (out, &y) in row[ja * cb..(ja + 1) * cb].iter_mut().zip(brow) {
                *out = x * y;
            }
        }
    });
    ComplexMatrix { rows, cols, data }
}

/// `m ⊗ m ⊗ … ⊗ m` (`n` factors).
pub fn kron_power(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    assert!(n >= 1);
    (1..n).fold(m.clone(), |acc, _| kron(&acc, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceSide {
    /// Trace out the first factor.
    Leading,
    /// Trace out the second factor.
    Trailing,
}

/// Partial trace of a bipartite operator on `C^{dims.0} ⊗ C^{dims.1}`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), side: TraceSide) -> Result<ComplexMatrix> {
    let (d0, d1) = dims;
    if !m.is_square() || m.rows != d0 * d1 {
        return Err(Error::mismatch(
            "partial_trace",
            format!("{}x{}", d0 * d1, d0 * d1),
            format!("{}x{}", m.rows, m.cols),
        ));
    }
    let n = m.rows;
    Ok(match side {
        TraceSide::Leading => ComplexMatrix::from_fn(d1, d1, |i, j| {
            (0..d0).map(|k| m.data[(k * d1 + i) * n + k * d1 + j]).sum()
        }),
        TraceSide::Trailing => ComplexMatrix::from_fn(d0, d0, |i, j| {
            (0..d1).map(|k| m.data[(i * d1 + k) * n + j * d1 + k]).sum()
        }),
    })
}

/// Index bookkeeping for an `n`-site register of local dimension `d` split
/// into a kept subset of sites and the traced remainder.
struct SiteSplit {
    kept_dim: usize,
    rest_dim: usize,
    /// full index of (kept index, rest index), laid out `kept * rest_dim + rest`
    full: Vec<usize>,
}

impl SiteSplit {
    fn new(d: usize, n_sites: usize, keep: &[usize]) -> Result<Self> {
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&s| s >= n_sites) {
            return Err(Error::mismatch(
                "site selection",
                format!("strictly increasing sites < {n_sites}"),
                format!("{keep:?}"),
            ));
        }
        let kept_dim = checked_pow(d, keep.len()).expect("site dimension overflow");
        let rest_dim = checked_pow(d, n_sites - keep.len()).expect("site dimension overflow");
        let mut full = vec![0usize; kept_dim * rest_dim];
        for k in 0..kept_dim {
            for t in 0..rest_dim {
                // Walk sites from the last (fastest) to the first.
                let (mut kk, mut tt, mut x, mut place) = (k, t, 0usize, 1usize);
                let mut ki = keep.len();
                for site in (0..n_sites).rev() {
                    let digit = if ki > 0 && keep[ki - 1] == site {
                        ki -= 1;
                        let dgt = kk % d;
                        kk /= d;
                        dgt
                    } else {
                        let dgt = tt % d;
                        tt /= d;
                        dgt
                    };
                    x += digit * place;
                    place *= d;
                }
                full[k * rest_dim + t] = x;
            }
        }
        Ok(Self {
            kept_dim,
            rest_dim,
            full,
        })
    }

    fn index(&self, kept: usize, rest: usize) -> usize {
        self.full[kept * self.rest_dim + rest]
    }
}

fn check_register(m: &ComplexMatrix, d: usize, n_sites: usize, op: &'static str) -> Result<()> {
    let dim = checked_pow(d, n_sites).ok_or_else(|| Error::mismatch(op, "representable dimension", "overflow"))?;
    if !m.is_square() || m.rows != dim {
        return Err(Error::mismatch(op, format!("{dim}x{dim}"), format!("{}x{}", m.rows, m.cols)));
    }
    Ok(())
}

/// Traces out every site not listed in `keep` (sorted, distinct). The kept
/// sites stay in their original relative order.
pub fn reduce_to_sites(m: &ComplexMatrix, d: usize, n_sites: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    check_register(m, d, n_sites, "reduce_to_sites")?;
    let split = SiteSplit::new(d, n_sites, keep)?;
    let n = m.rows;
    let k = split.kept_dim;
    Ok(ComplexMatrix::from_fn(k, k, |i, j| {
        (0..split.rest_dim)
            .map(|t| m.data[split.index(i, t) * n + split.index(j, t)])
            .sum()
    }))
}

/// Embeds `op`, acting on the listed sites, into the full register with
/// identity elsewhere.
pub fn embed_on_sites(op: &ComplexMatrix, d: usize, sites: &[usize], n_sites: usize) -> Result<ComplexMatrix> {
    let split = SiteSplit::new(d, n_sites, sites)?;
    if !op.is_square() || op.rows != split.kept_dim {
        return Err(Error::mismatch(
            "embed_on_sites",
            format!("{0}x{0}", split.kept_dim),
            format!("{}x{}", op.rows, op.cols),
        ));
    }
    let dim = split.kept_dim * split.rest_dim;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for t in 0..split.rest_dim {
        for i in 0..split.kept_dim {
            let x = split.index(i, t);
            for j in 0..split.kept_dim {
                out.data[x * dim + split.index(j, t)] = op[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `I_{d^first} ⊗ op ⊗ I` on an `n_sites` register.
pub fn embed_contiguous(op: &ComplexMatrix, d: usize, first: usize, n_sites: usize) -> Result<ComplexMatrix> {
    let k = local_sites(op, d)?;
    let sites: Vec<usize> = (first..first + k).collect();
    embed_on_sites(op, d, &sites, n_sites)
}

fn local_sites(op: &ComplexMatrix, d: usize) -> Result<usize> {
    let mut k = 0;
    let mut dim = 1;
    while dim < op.rows {
        dim *= d;
        k += 1;
    }
    if !op.is_square() || dim != op.rows {
        return Err(Error::mismatch(
            "local operator",
            format!("square power of {d}"),
            format!("{}x{}", op.rows, op.cols),
        ));
    }
    Ok(k)
}

/// `m · (I ⊗ op ⊗ I)` where `op` covers the contiguous sites starting at
/// `first`. Costs `dim(m)^2 · dim(op)` instead of a dense product.
pub fn apply_local_right(
    m: &ComplexMatrix,
    op: &ComplexMatrix,
    d: usize,
    first: usize,
    n_sites: usize,
) -> Result<ComplexMatrix> {
    check_register(m, d, n_sites, "apply_local_right")?;
    let k = local_sites(op, d)?;
    if first + k > n_sites {
        return Err(Error::SupportEscape(format!(
            "sites {first}..{} exceed register of {n_sites}",
            first + k
        )));
    }
    let dim = m.rows;
    let mid = op.rows;
    let post = checked_pow(d, n_sites - first - k).unwrap();
    let pre = dim / (mid * post);
    let mut data = vec![ZERO; dim * dim];
    par::for_each_row_mut(&mut data, dim, |r, out_row| {
        let row = &m.data[r * dim..(r + 1) * dim];
        for p in 0..pre {
            for q in 0..post {
                for a in 0..mid {
                    let x = row[(p * mid + a) * post + q];
                    if x == ZERO {
                        continue;
                    }
                    let op_row = &op.data[a * mid..(a + 1) * mid];
                    for (b, &o) in op_row.iter().enumerate() {
                        out_row[(p * mid + b) * post + q] += x * o;
                    }
                }
            }
        }
    });
    Ok(ComplexMatrix {
        rows: dim,
        cols: dim,
        data,
    })
}

/// `(I ⊗ op ⊗ I) · m`
pub fn apply_local_left(
    op: &ComplexMatrix,
    m: &ComplexMatrix,
    d: usize,
    first: usize,
    n_sites: usize,
) -> Result<ComplexMatrix> {
    Ok(apply_local_right(&m.adjoint(), &op.adjoint(), d, first, n_sites)?.adjoint())
}

/// Square matrix verified Hermitian to [`TOL_HERM`] per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let asym = m.max_asymmetry();
        if asym > TOL_HERM {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        Ok(Self(m))
    }

    /// Takes the Hermitian part of `m`; the discarded asymmetry is returned.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> (Self, f64) {
        (Self(m.hermitian_part()), m.max_asymmetry())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl AsRef<ComplexMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// `U f(Λ) U†`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = ComplexMatrix::from_fn(n, n, |i, k| u[(i, k)] * fl[k]);
        scaled.matmul(&u.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvalues.len();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// Spectral projectors, grouping eigenvalues closer than `tol`.
    /// Returned with their eigenvalue, in descending order.
    pub fn projectors(&self, tol: f64) -> Vec<(f64, ComplexMatrix)> {
        let n = self.eigenvalues.len();
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some((head, members)) if (*head - l).abs() <= tol => members.push(k),
                _ => groups.push((l, vec![k])),
            }
        }
        groups
            .into_iter()
            .map(|(_, members)| {
                let mean = members.iter().map(|&k| self.eigenvalues[k]).sum::<f64>() / members.len() as f64;
                let p = ComplexMatrix::from_fn(n, n, |i, j| {
                    members
                        .iter()
                        .map(|&k| self.eigenvectors[(i, k)] * self.eigenvectors[(j, k)].conj())
                        .sum()
                });
                (mean, p)
            })
            .collect()
    }
}

/// Hermitian eigendecomposition, eigenvalues descending.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let evd = m
        .matrix()
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let n = m.dim();
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer sorts ascending.
    let eigenvalues = (0..n).rev().map(|k| s[k].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (descending); cheaper than [`eig_hermitian`].
pub fn eigenvalues_hermitian(m: &HermitianMatrix) -> Result<Vec<f64>> {
    let mut vals = m
        .matrix()
        .as_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    vals.reverse();
    Ok(vals)
}

/// Largest singular value. Hermitian input takes the eigenvalue path.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_square() && m.max_asymmetry() <= TOL_HERM {
        let h = HermitianMatrix(m.clone());
        if let Ok(vals) = eigenvalues_hermitian(&h) {
            return vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
        }
    }
    m.singular_values().first().copied().unwrap_or(0.0)
}

/// Numerical rank: number of eigenvalues above `tol`.
pub fn hermitian_rank(m: &HermitianMatrix, tol: f64) -> Result<usize> {
    Ok(eigenvalues_hermitian(m)?.iter().filter(|&&l| l > tol).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_with_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&sigma3(), &i2), ComplexMatrix::from_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        assert_eq!(kron(&i2, &sigma3()), ComplexMatrix::from_diagonal(&[1.0, -1.0, 1.0, -1.0]));
    }

    #[test]
    fn kron_sigma1_is_antidiagonal() {
        let k = kron(&sigma1(), &sigma1());
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(partial_trace(&m, (2, 3), TraceSide::Leading).is_err());
        let rect = ComplexMatrix::zeros(4, 2);
        assert!(partial_trace(&rect, (2, 2), TraceSide::Trailing).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = ComplexMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let sigma = ComplexMatrix::from_diagonal(&[0.2, 0.5, 0.3]);
        let prod = kron(&rho, &sigma);
        let tr = partial_trace(&prod, (2, 3), TraceSide::Trailing).unwrap();
        assert!(tr.max_abs_diff(&rho) < 1e-15);
        let tl = partial_trace(&prod, (2, 3), TraceSide::Leading).unwrap();
        assert!(tl.max_abs_diff(&sigma) < 1e-15);
    }

    #[test]
    fn eigenvalues_of_small_cases() {
        let e = eig_hermitian(&HermitianMatrix::new(sigma3()).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, -1.0]);

        let rho = &ComplexMatrix::identity(2).scale_real(0.5) + &sigma3().scale_real(0.25);
        let e = eig_hermitian(&HermitianMatrix::new(rho).unwrap()).unwrap();
        assert!((e.eigenvalues[0] - 0.75).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 0.25).abs() < 1e-14);

        let e = eig_hermitian(&HermitianMatrix::new(sigma1()).unwrap()).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn operator_norms() {
        assert!((operator_norm(&ComplexMatrix::identity(5)) - 1.0).abs() < 1e-14);
        let a = 0.6;
        let omega = &ComplexMatrix::identity(2).scale_real(a / 2.0) - &sigma3().scale_real(0.5);
        assert!((operator_norm(&omega) - 0.8).abs() < 1e-14);
        let m = &sigma1().scale_real(0.3) + &sigma2().scale_real(0.4);
        assert!((operator_norm(&m) - 0.5).abs() < 1e-14);
        // non-Hermitian: |0><1| scaled
        let n = ComplexMatrix::from_real(2, 2, &[0.0, 3.0, 0.0, 0.0]).unwrap();
        assert!((operator_norm(&n) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn local_application_matches_dense() {
        let d = 2;
        let n = 4;
        let m = ComplexMatrix::from_fn(16, 16, |i, j| c((i * 3 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02));
        let op = ComplexMatrix::from_fn(4, 4, |i, j| c(i as f64 + 0.5 * j as f64, 0.1 * (i * j) as f64));
        for first in 0..=2 {
            let dense = embed_contiguous(&op, d, first, n).unwrap();
            let right = apply_local_right(&m, &op, d, first, n).unwrap();
            assert!(right.max_abs_diff(&m.matmul(&dense)) < 1e-12);
            let left = apply_local_left(&op, &m, d, first, n).unwrap();
            assert!(left.max_abs_diff(&dense.matmul(&m)) < 1e-12);
        }
        assert!(apply_local_right(&m, &op, d, 3, n).is_err());
    }

    #[test]
    fn reduction_to_noncontiguous_sites() {
        let a = ComplexMatrix::from_real(2, 2, &[0.6, 0.1, 0.1, 0.4]).unwrap();
        let b = ComplexMatrix::from_diagonal(&[0.9, 0.1]);
        let cc = ComplexMatrix::from_real(2, 2, &[0.5, -0.2, -0.2, 0.5]).unwrap();
        let full = kron(&kron(&a, &b), &cc);
        let red = reduce_to_sites(&full, 2, 3, &[0, 2]).unwrap();
        assert!(red.max_abs_diff(&kron(&a, &cc)) < 1e-15);
        let red = reduce_to_sites(&full, 2, 3, &[1]).unwrap();
        assert!(red.max_abs_diff(&b) < 1e-15);
        assert!(reduce_to_sites(&full, 2, 3, &[2, 0]).is_err());
    }

    #[test]
    fn embedding_noncontiguous() {
        let op = kron(&sigma1(), &sigma3());
        let e = embed_on_sites(&op, 2, &[0, 2], 3).unwrap();
        let expected = kron(&kron(&sigma1(), &ComplexMatrix::identity(2)), &sigma3());
        assert_eq!(e, expected);
    }

    #[test]
    fn projector_grouping() {
        let e = eig_hermitian(&HermitianMatrix::from_diagonal(&[0.5, 0.5, 0.2])).unwrap();
        let groups = e.projectors(1e-10);
        assert_eq!(groups.len(), 2);
        assert!((groups[0].1.trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_and_condition() {
        let m = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 0.5]).unwrap();
        let inv = m.inverse().unwrap();
        assert!(inv.max_abs_diff(&ComplexMatrix::from_diagonal(&[0.5, 2.0])) < 1e-15);
        assert!((m.condition_number() - 4.0).abs() < 1e-12);
    }
}
