//! Dense Hermitian spectral calculus shared by the operator, heat and
//! compactness modules.
//!
//! Every operator in this crate is self-adjoint in a weighted inner product
//! `⟨f, h⟩ = Σ_i conj(f_i) h_i w_i`. Spectral work runs on the symmetrized
//! matrix `A = D^{1/2} M D^{-1/2}`, which is Hermitian. When `A` has no
//! imaginary part the real symmetric solver is used instead.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn real_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `max_{ij} |m_ij − conj(m_ji)|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `D^{1/2} M D^{-1/2}` for diagonal weights `w`.
pub fn symmetrize(m: &CMat, w: &[f64]) -> CMat {
    let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (s[i] / s[j]))
}

/// Inverse of [`symmetrize`]: `D^{-1/2} A D^{1/2}`.
pub fn desymmetrize(a: &CMat, w: &[f64]) -> CMat {
    let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (s[j] / s[i]))
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if is_real(m) {
        let r = real_part(m);
        return r.singular_values().iter().copied().fold(0.0, f64::max);
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = if is_real(m) {
        real_part(m).singular_values().iter().copied().collect()
    } else {
        m.singular_values().iter().copied().collect()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn weighted_norm(f: &[Complex64], w: &[f64]) -> f64 {
    f.iter()
        .zip(w)
        .map(|(z, w)| z.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// `Σ_i conj(f_i) h_i w_i`.
pub fn weighted_inner(f: &[Complex64], h: &[Complex64], w: &[f64]) -> Complex64 {
    f.iter()
        .zip(h)
        .zip(w)
        .map(|((a, b), w)| a.conj() * b * *w)
        .sum()
}

#[derive(Debug, Clone)]
enum Eigenvectors {
    Real(DMatrix<f64>),
    Complex(CMat),
}

/// Eigendecomposition `A = U Λ U^*` of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectral {
    values: Vec<f64>,
    vectors: Eigenvectors,
}

impl Spectral {
    pub fn of_hermitian(a: &CMat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Eigenvectors::Real(DMatrix::zeros(0, 0)),
            });
        }
        if is_real(a) {
            let r = real_part(a);
            let sym = (&r + r.transpose()) * 0.5;
            let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::Eigen)?;
            let order = ascending(eig.eigenvalues.as_slice());
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
            Ok(Self {
                values,
                vectors: Eigenvectors::Real(vectors),
            })
        } else {
            let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::Eigen)?;
            let order = ascending(eig.eigenvalues.as_slice());
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vectors = CMat::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
            Ok(Self {
                values,
                vectors: Eigenvectors::Complex(vectors),
            })
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn is_real(&self) -> bool {
        matches!(self.vectors, Eigenvectors::Real(_))
    }

    /// `U f(Λ) U^*` as a real matrix, when the decomposition is real.
    pub fn apply_real(&self, f: impl Fn(f64) -> f64) -> Option<DMatrix<f64>> {
        match &self.vectors {
            Eigenvectors::Real(u) => {
                let mut scaled = u.clone();
                for (k, &lambda) in self.values.iter().enumerate() {
                    let fk = f(lambda);
                    scaled.column_mut(k).scale_mut(fk);
                }
                Some(scaled * u.transpose())
            }
            Eigenvectors::Complex(_) => None,
        }
    }

    /// `U f(Λ) U^*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        match &self.vectors {
            Eigenvectors::Real(_) => complexify(&self.apply_real(f).expect("real branch")),
            Eigenvectors::Complex(u) => {
                let mut scaled = u.clone();
                for (k, &lambda) in self.values.iter().enumerate() {
                    let fk = f(lambda);
                    scaled.column_mut(k).iter_mut().for_each(|z| *z *= fk);
                }
                scaled * u.adjoint()
            }
        }
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    order
}

/// Unitary matrix from the QR factorization of `m`, with the phases of
/// `diag(R)` absorbed so that Gaussian input yields Haar-distributed output.
pub fn unitary_from(m: CMat) -> CMat {
    let n = m.nrows();
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_paths_agree() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let s = Spectral::of_hermitian(&a).unwrap();
        assert!(s.is_real());
        assert!((s.min() - 1.0).abs() < 1e-14 && (s.max() - 3.0).abs() < 1e-14);
        let recomposed = s.apply(|x| x);
        assert!((recomposed - &a).norm() < 1e-13);
    }

    #[test]
    fn complex_hermitian_eigenvalues() {
        let i = Complex64::new(0.0, 1.0);
        let a = CMat::from_row_slice(2, 2, &[ONE, -i, i, ONE]);
        let s = Spectral::of_hermitian(&a).unwrap();
        assert!(!s.is_real());
        assert!(s.min().abs() < 1e-14 && (s.max() - 2.0).abs() < 1e-14);
        assert!((s.apply(|x| x) - a).norm() < 1e-13);
    }

    #[test]
    fn symmetrize_roundtrip() {
        let m = CMat::from_fn(3, 3, |i, j| Complex64::new((i * 3 + j) as f64, 0.0));
        let w = [1.0, 2.0, 0.5];
        assert!((desymmetrize(&symmetrize(&m, &w), &w) - m).norm() < 1e-13);
    }
}
