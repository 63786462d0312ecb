//! Dense linear-algebra helpers shared by the filters.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};

use crate::prelude::*;
use crate::{Error, Result};

/// Relative singular-value cutoff used by [`pseudo_inverse`].
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Diagonal jitter, as a fraction of `trace / n`, added per Cholesky retry.
pub const CHOLESKY_JITTER: f64 = 1e-10;

/// Number of jittered retries after the first Cholesky attempt fails.
pub const CHOLESKY_RETRIES: usize = 3;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Lower-triangular Cholesky factor of a symmetric positive (semi)definite
/// matrix.
///
/// The matrix is symmetrized first. When the plain factorization fails,
/// `1e-10 * trace / n` is added to the diagonal and the factorization retried,
/// at most three times. An all-zero matrix factors to the zero matrix.
pub fn cholesky_jittered(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("cholesky of a {}x{} matrix", n, m.ncols())));
    }
    let sym = symmetrize(m);
    if sym.iter().all(|v| *v == 0.0) {
        return Ok(DMatrix::zeros(n, n));
    }
    if let Some(c) = Cholesky::new(sym.clone()) {
        return Ok(c.l());
    }
    let jitter = CHOLESKY_JITTER * sym.trace().abs() / n as f64;
    let mut work = sym.clone();
    for _ in 0..CHOLESKY_RETRIES {
        for i in 0..n {
            work[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(work.clone()) {
            return Ok(c.l());
        }
    }
    Err(Error::Decomposition { min_eigenvalue: min_eigenvalue(&sym) })
}

/// Moore–Penrose pseudo-inverse.
///
/// Singular values below `1e-12 * σ_max` are treated as zero, so the function
/// is total on finite input and equals the ordinary inverse for
/// well-conditioned square matrices. Symmetric input goes through the
/// symmetric eigendecomposition. Otherwise the SVD is used, and its
/// factorization is checked: the dense SVD can lose accuracy on exactly
/// rank-deficient input, in which case the transpose is tried and finally
/// the normal-equation form `(ZᵀZ)⁺ Zᵀ`.
pub fn pseudo_inverse(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = z.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let scale = z.amax();
    if scale == 0.0 || !scale.is_finite() {
        return DMatrix::zeros(cols, rows);
    }
    if z.is_square() && asymmetry(z) <= 1e-14 * scale {
        return symmetric_pseudo_inverse(&symmetrize(z));
    }
    if let Some(p) = svd_pseudo_inverse(z) {
        return p;
    }
    if let Some(p) = svd_pseudo_inverse(&z.transpose()) {
        return p.transpose();
    }
    symmetric_pseudo_inverse(&symmetrize(&(z.transpose() * z))) * z.transpose()
}

fn symmetric_pseudo_inverse(z: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(z.clone());
    let largest = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = PINV_RELATIVE_CUTOFF * largest;
    let n = z.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= cutoff || lambda == 0.0 {
            continue;
        }
        let q = eig.eigenvectors.column(k);
        out += (&q * q.transpose()) / lambda;
    }
    out
}

fn svd_pseudo_inverse(z: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = z.shape();
    let svd = SVD::new(z.clone(), true, true);
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let sv = &svd.singular_values;
    let recomposed = u * DMatrix::from_diagonal(sv) * v_t;
    if (recomposed - z).amax() > 1e-10 * z.amax() {
        return None;
    }
    let largest = sv.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = PINV_RELATIVE_CUTOFF * largest;
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in sv.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let vk = v_t.row(k).transpose();
        let uk = u.column(k);
        out += (vk * uk.transpose()) / s;
    }
    Some(out)
}

/// Solves `A X = B` for symmetric positive definite `A`, falling back to the
/// pseudo-inverse when the Cholesky factorization fails. The flag reports
/// whether the fallback was taken.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    match Cholesky::new(symmetrize(a)) {
        Some(c) => (c.solve(b), false),
        None => (pseudo_inverse(a) * b, true),
    }
}

/// Inverse of a lower-triangular matrix with a nonzero diagonal.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    let mut eye = DMatrix::identity(n, n);
    if l.solve_lower_triangular_mut(&mut eye) {
        Some(eye)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_of_identity_and_singular_diagonal() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(pseudo_inverse(&eye), eye, epsilon = 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert_relative_eq!(pseudo_inverse(&d), d, epsilon = 1e-14);
    }

    #[test]
    fn pinv_matches_inverse_when_well_conditioned() {
        let a = DMatrix::from_row_slice(
            5,
            5,
            &[
                4.0, 1.0, 0.5, 0.0, 0.2, //
                1.0, 3.0, 0.1, 0.3, 0.0, //
                0.5, 0.1, 5.0, 0.7, 0.1, //
                0.0, 0.3, 0.7, 2.0, 0.4, //
                0.2, 0.0, 0.1, 0.4, 6.0,
            ],
        );
        let inv = a.clone().try_inverse().unwrap();
        assert_relative_eq!(pseudo_inverse(&a), inv, epsilon = 1e-8);
    }

    #[test]
    fn cholesky_of_zero_and_semidefinite() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(cholesky_jittered(&z).unwrap(), z);

        // Rank one: plain factorization may fail; jitter rescues it.
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let p = &v * v.transpose();
        let l = cholesky_jittered(&p).unwrap();
        assert_relative_eq!(&l * l.transpose(), p, epsilon = 1e-6);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match cholesky_jittered(&a) {
            Err(Error::Decomposition { min_eigenvalue }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
