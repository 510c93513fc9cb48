//! Seeded random instances for property tests, sweeps and CLI checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{unitary_from, CMat, CVec};

/// The generator every randomized routine in the crate is driven by.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| complex_normal(rng))
}

pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng))
}

pub fn real_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Haar-distributed `n × n` unitary.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    unitary_from(complex_gaussian_matrix(rng, n))
}

/// Random Hermitian positive semidefinite matrix `G G^* / n` scaled by `scale`.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let g = complex_gaussian_matrix(rng, n);
    let m = &g * g.adjoint() * Complex64::new(scale / n as f64, 0.0);
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random Hermitian positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMat {
    let u = unitary(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(rng.random_range(lo..=hi), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = &u * d * u.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}
