#![allow(dead_code)]

use drbf::types::{hermitian_part, CMat, RMat, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cmat(r: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

pub fn rmat(r: &mut impl Rng, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

pub fn hermitian(r: &mut impl Rng, n: usize) -> CMat {
    hermitian_part(&cmat(r, n, n))
}

/// `AAᴴ/k + floor·I` with `A` of `k` columns.
pub fn psd(r: &mut impl Rng, n: usize, k: usize, floor: f64) -> CMat {
    let a = cmat(r, n, k);
    hermitian_part(&(&a * a.adjoint() / C64::from(k as f64))) + CMat::identity(n, n) * C64::from(floor)
}

/// Solve `X A = B` for `X` by LU on the transposed system.
pub fn right_solve(b: &CMat, a: &CMat) -> CMat {
    let at = a.adjoint();
    let x_h = at.lu().solve(&b.adjoint()).expect("solvable");
    x_h.adjoint()
}

pub fn right_solve_real(b: &RMat, a: &RMat) -> RMat {
    let x_t = a.transpose().lu().solve(&b.transpose()).expect("solvable");
    x_t.transpose()
}

pub fn max_abs<T: nalgebra::ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max)
}

/// Textbook Cholesky that fails on the first non-positive real pivot.
pub fn cholesky_ok(a: &CMat) -> bool {
    let n = a.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::from(d);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}
