//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Eigenvalues below this are treated as zero when taking PSD roots.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Returns `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).map(|z| z * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues below
/// [`EIGEN_CLAMP`] (including slightly negative round-off) are set to zero.
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(a);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = if v < EIGEN_CLAMP { 0.0 } else { v.sqrt() };
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Solves `A x = b` for Hermitian positive-definite `A` via Cholesky.
pub fn hpd_solve(a: CMatrix, b: &CVector) -> Result<CVector> {
    let chol: Cholesky<Complex64, Dyn> = Cholesky::new(a)
        .ok_or_else(|| Error::Numeric("Cholesky factorization failed (matrix not HPD)".into()))?;
    // complex square roots never fail, so an indefinite pivot shows up as a
    // non-real diagonal entry of the factor
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
        return Err(Error::Numeric(
            "matrix is not Hermitian positive definite".into(),
        ));
    }
    Ok(chol.solve(b))
}

/// One circularly-symmetric complex normal draw with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill order, fixed for reproducibility
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

pub fn complex_normal_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    CVector::from_iterator(len, (0..len).map(|_| complex_normal(rng)))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
