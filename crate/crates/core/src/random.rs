//! Random matrices for sweeps and property checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, C64};

/// Above this dimension [`random_unit_observable`] switches from a Haar
/// eigenbasis to a Householder-rotated one, which is `O(dim^2)` to build.
pub const HAAR_OBSERVABLE_MAX_DIM: usize = 256;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Haar-distributed unitary (Gram-Schmidt on a Ginibre matrix).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|i| g[(i, j)]).collect();
        for q in &cols {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(dim, dim, rng).hermitian_part()
}

/// `G G†` with Ginibre `G`: full rank with probability one.
pub fn psd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    g.matmul(&g.adjoint()).hermitian_part()
}

/// Random full-rank density matrix.
pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let p = psd(dim, rng);
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}

fn unit_spectrum<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut lambda: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let k = rng.random_range(0..dim);
    lambda[k] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    lambda
}

/// Hermitian observable with operator norm exactly one: a spectrum drawn
/// from `[-1, 1]` with one eigenvalue pinned at `±1`, rotated into a random
/// basis.
pub fn random_unit_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let lambda = unit_spectrum(dim, rng);
    if dim <= HAAR_OBSERVABLE_MAX_DIM {
        let u = haar_unitary(dim, rng);
        let scaled = ComplexMatrix::from_fn(dim, dim, |i, k| u[(i, k)] * lambda[k]);
        return scaled.matmul(&u.adjoint()).hermitian_part();
    }
    let mut c = ComplexMatrix::from_diagonal(&lambda);
    for _ in 0..3 {
        let v = unit_vector(dim, rng);
        householder_conjugate(&mut c, &v);
    }
    c
}

/// `X ← H X H` with `H = I − 2 v v†`, `v` a unit vector.
fn householder_conjugate(x: &mut ComplexMatrix, v: &[C64]) {
    let n = v.len();
    // xv = X v, vx = v† X
    let mut xv = vec![C64::new(0.0, 0.0); n];
    let mut vx = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            let e = x[(i, j)];
            xv[i] += e * v[j];
            vx[j] += v[i].conj() * e;
        }
    }
    let vxv: C64 = v.iter().zip(&xv).map(|(a, b)| a.conj() * b).sum();
    let data = x.as_mut_slice();
    for i in 0..n {
        for j in 0..n {
            let vj = v[j].conj();
            data[i * n + j] += -2.0 * v[i] * vx[j] - 2.0 * xv[i] * vj + 4.0 * vxv * v[i] * vj;
        }
    }
}
