//! Dense linear-algebra kernels used throughout the crate.
//!
//! Thin wrappers around faer's decompositions, exposed on `ndarray` types so
//! the rest of the code never touches the backend directly. All matrices are
//! small-to-moderate (factor matrices, Gram matrices, unfoldings of TT
//! cores), so everything goes through the dense code paths.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Field;
use faer::linalg::solvers::{DenseSolveCore, Eigen, Svd};
use faer::prelude::{Solve, SolveLstsq};
use faer::Mat;

pub(crate) fn to_faer<S: Field>(a: ArrayView2<'_, S>) -> Mat<S> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer<S: Field>(m: faer::MatRef<'_, S>) -> Array2<S> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin (economy) SVD: `a = U diag(s) V^H` with `U: m×k`, `V: n×k`,
/// `k = min(m, n)`. Singular values are nonnegative and nonincreasing.
pub fn svd_thin<S: Field>(a: ArrayView2<'_, S>) -> Result<(Array2<S>, Array1<f64>, Array2<S>)> {
    let svd: Svd<S> = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("svd: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let s = Array1::from_shape_fn(k, |i| svd.S()[i].abs());
    Ok((from_faer(svd.U()), s, from_faer(svd.V())))
}

/// Eigendecomposition of a square matrix, always in the complex field:
/// returns `(values, vectors)` with `a v_r = lambda_r v_r` columnwise.
pub fn eig<S: Field>(a: ArrayView2<'_, S>) -> Result<(Array1<Complex64>, Array2<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "eig requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let m: Mat<Complex64> = Mat::from_fn(n, n, |i, j| a[[i, j]].to_c64());
    let eigen: Eigen<f64> =
        Eigen::new(m.as_ref()).map_err(|e| Error::Decomposition(format!("eig: {e:?}")))?;
    let values = Array1::from_shape_fn(n, |i| eigen.S()[i]);
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eigen.U()[(i, j)]);
    Ok((values, vectors))
}

/// Solve `a x = b` for square `a` via LU with partial pivoting.
pub fn solve<S: Field>(a: ArrayView2<'_, S>, b: ArrayView2<'_, S>) -> Result<Array2<S>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "solve: a is {}x{}, b is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let lu = to_faer(a).partial_piv_lu();
    Ok(from_faer(lu.solve(to_faer(b)).as_ref()))
}

/// Inverse of a square matrix via LU with partial pivoting.
pub fn inv<S: Field>(a: ArrayView2<'_, S>) -> Result<Array2<S>> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "inv requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let lu = to_faer(a).partial_piv_lu();
    Ok(from_faer(lu.inverse().as_ref()))
}

/// Moore-Penrose pseudoinverse via the SVD. Singular values below
/// `max(m, n) * eps * s_max` are treated as zero.
pub fn pinv<S: Field>(a: ArrayView2<'_, S>) -> Result<Array2<S>> {
    let (u, s, v) = svd_thin(a)?;
    let cutoff = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * s.iter().cloned().fold(0.0, f64::max);
    // V diag(1/s) U^H, dropping the numerically-zero directions
    let mut vs = v;
    for (j, mut col) in vs.columns_mut().into_iter().enumerate() {
        let inv_s = if s[j] > cutoff { 1.0 / s[j] } else { 0.0 };
        col.mapv_inplace(|x| x.scale(inv_s));
    }
    Ok(vs.dot(&u.mapv(|x| x.conj()).t()))
}

/// Least-squares solution of `a x = b` (minimum-norm via the SVD).
pub fn lstsq<S: Field>(a: ArrayView2<'_, S>, b: ArrayView2<'_, S>) -> Result<Array2<S>> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "lstsq: a has {} rows, b has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd: Svd<S> = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("svd: {e:?}")))?;
    Ok(from_faer(svd.solve_lstsq(to_faer(b)).as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_matrix, rng};
    use ndarray::Array2;
    use num_complex::Complex64;

    fn reconstruct<S: Field>(u: &Array2<S>, s: &Array1<f64>, v: &Array2<S>) -> Array2<S> {
        let us = {
            let mut us = u.clone();
            for (j, col) in us.columns_mut().into_iter().enumerate() {
                let mut col = col;
                col.mapv_inplace(|x| x.scale(s[j]));
            }
            us
        };
        us.dot(&v.mapv(|x| x.conj()).t())
    }

    #[test]
    fn svd_reconstructs_real_and_complex() {
        let mut r = rng(7);
        let a: Array2<f64> = random_matrix(6, 4, &mut r);
        let (u, s, v) = svd_thin(a.view()).unwrap();
        let err = (&a - &reconstruct(&u, &s, &v)).mapv(|x| x * x).sum().sqrt();
        assert!(err < 1e-12, "real svd residual {err}");

        let a: Array2<Complex64> = random_matrix(4, 7, &mut r);
        let (u, s, v) = svd_thin(a.view()).unwrap();
        let err = (&a - &reconstruct(&u, &s, &v))
            .mapv(|x| x.norm_sqr())
            .sum()
            .sqrt();
        assert!(err < 1e-12, "complex svd residual {err}");
        // orthonormal columns
        let gram = u.mapv(|x| x.conj()).t().dot(&u);
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_satisfies_definition() {
        let mut r = rng(11);
        let a: Array2<f64> = random_matrix(5, 5, &mut r);
        let (vals, vecs) = eig(a.view()).unwrap();
        let ac = a.mapv(|x| Complex64::new(x, 0.0));
        for j in 0..5 {
            let v = vecs.column(j);
            let lhs = ac.dot(&v);
            let rhs = v.mapv(|x| x * vals[j]);
            let err: f64 = lhs
                .iter()
                .zip(rhs.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "eigenpair {j} residual {err}");
        }
    }

    #[test]
    fn solve_and_inv_agree() {
        let mut r = rng(3);
        let a: Array2<Complex64> = random_matrix(6, 6, &mut r);
        let b: Array2<Complex64> = random_matrix(6, 2, &mut r);
        let x = solve(a.view(), b.view()).unwrap();
        let resid = (&a.dot(&x) - &b).mapv(|x| x.norm_sqr()).sum().sqrt();
        assert!(resid < 1e-11, "solve residual {resid}");
        let ai = inv(a.view()).unwrap();
        let x2 = ai.dot(&b);
        let diff = (&x - &x2).mapv(|x| x.norm_sqr()).sum().sqrt();
        assert!(diff < 1e-10);
    }

    #[test]
    fn pinv_of_tall_matrix_is_left_inverse() {
        let mut r = rng(5);
        let a: Array2<f64> = random_matrix(8, 3, &mut r);
        let p = pinv(a.view()).unwrap();
        let eye = p.dot(&a);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((eye[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_matches_normal_equations() {
        let mut r = rng(9);
        let a: Array2<f64> = random_matrix(10, 4, &mut r);
        let b: Array2<f64> = random_matrix(10, 1, &mut r);
        let x = lstsq(a.view(), b.view()).unwrap();
        // residual must be orthogonal to the column space
        let resid = &a.dot(&x) - &b;
        let proj = a.t().dot(&resid);
        assert!(proj.mapv(|x| x * x).sum().sqrt() < 1e-11);
    }
}
