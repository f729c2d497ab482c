//! Kruskal (CP) format: a sum of `R` rank-one terms.
//!
//! An order-`N` tensor in Kruskal form is
//!
//! ```text
//!   Y = sum_r  lambda_r * a_r^(1) o a_r^(2) o ... o a_r^(N)
//! ```
//!
//! with factor matrices `A^(n) = [a_1^(n) ... a_R^(n)]` of size `I_n x R` and
//! real positive weights `lambda`. The mode-`n` unfolding satisfies
//!
//! ```text
//!   Y_(n) = A^(n) diag(lambda) (A^(N) (.) ... (.) A^(n+1) (.) A^(n-1) (.) ... (.) A^(1))^T
//! ```
//!
//! where `(.)` is the column-wise Khatri-Rao product taken in descending mode
//! order, matching the first-index-fastest storage convention of
//! [`DenseTensor`].

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Field;
use crate::tensor::{column_norms, khatri_rao_descending, DenseTensor};

#[derive(Debug, Clone)]
pub struct KruskalTensor<S: Field> {
    factors: Vec<Array2<S>>,
    weights: Array1<f64>,
}

impl<S: Field> KruskalTensor<S> {
    /// Build from factor matrices and weights, validating that every factor
    /// has the same number of columns as there are weights.
    pub fn new(factors: Vec<Array2<S>>, weights: Array1<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "kruskal tensor needs at least one factor".into(),
            ));
        }
        let rank = weights.len();
        for (n, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::ShapeMismatch(format!(
                    "factor {} has {} columns, expected rank {}",
                    n + 1,
                    f.ncols(),
                    rank
                )));
            }
        }
        Ok(Self { factors, weights })
    }

    /// Build with unit weights.
    pub fn from_factors(factors: Vec<Array2<S>>) -> Result<Self> {
        let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
        Self::new(factors, Array1::ones(rank))
    }

    /// Build from factors and per-column scales in the scalar field. Any
    /// non-real part of a scale is folded into the first factor so the stored
    /// weights stay real and nonnegative.
    pub fn from_scaled_factors(mut factors: Vec<Array2<S>>, scales: &[S]) -> Result<Self> {
        let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
        if scales.len() != rank {
            return Err(Error::ShapeMismatch(format!(
                "{} scales for rank {}",
                scales.len(),
                rank
            )));
        }
        let mut weights = Array1::ones(rank);
        for (r, &s) in scales.iter().enumerate() {
            let mag = s.abs();
            weights[r] = mag;
            // unit-modulus remainder (phase/sign) goes into factor 1
            let phase = if mag > 0.0 { s.scale(1.0 / mag) } else { S::one() };
            let first = &mut factors[0];
            for i in 0..first.nrows() {
                first[[i, r]] = first[[i, r]] * phase;
            }
        }
        Self::new(factors, weights)
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn factors(&self) -> &[Array2<S>] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [Array2<S>] {
        &mut self.factors
    }

    pub fn factor(&self, n: usize) -> &Array2<S> {
        &self.factors[n]
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array1<f64> {
        &mut self.weights
    }

    /// Rescale every factor column to unit Euclidean norm, accumulating the
    /// norms (and existing weights) into `lambda`. Errors on a zero column.
    pub fn normalize(&mut self) -> Result<()> {
        let rank = self.rank();
        for f in &self.factors {
            let norms = column_norms(f);
            for r in 0..rank {
                if norms[r] == 0.0 {
                    return Err(Error::ZeroNorm(format!("factor column {r} has zero norm")));
                }
            }
        }
        for f in &mut self.factors {
            let norms = column_norms(f);
            for (r, mut col) in f.columns_mut().into_iter().enumerate() {
                col.mapv_inplace(|x| x.scale(1.0 / norms[r]));
                self.weights[r] *= norms[r];
            }
        }
        Ok(())
    }

    /// The mode-`n` (1-based) unfolding `A^(n) diag(lambda) (KR of others)^T`.
    pub fn unfold(&self, mode: usize) -> Result<Array2<S>> {
        let order = self.order();
        if mode == 0 || mode > order {
            return Err(Error::ModeOutOfRange { mode, order });
        }
        let others: Vec<&Array2<S>> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != mode - 1)
            .map(|(_, f)| f)
            .collect();
        let kr = khatri_rao_descending(&others)?;
        let mut an = self.factors[mode - 1].clone();
        for (r, mut col) in an.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| x.scale(self.weights[r]));
        }
        Ok(an.dot(&kr.t()))
    }

    /// Materialize the full dense tensor.
    pub fn full(&self) -> Result<DenseTensor<S>> {
        let unf = self.unfold(1)?;
        DenseTensor::fold(&unf, 1, &self.shape())
    }

    /// Squared Frobenius norm via the Gram-matrix identity
    /// `|Y|^2 = lambda^T (G_1 * G_2 * ... * G_N) lambda` with
    /// `G_n = A^(n)^H A^(n)` and `*` the Hadamard product.
    pub fn norm_sqr(&self) -> f64 {
        let rank = self.rank();
        let mut g = Array2::<S>::ones((rank, rank));
        for f in &self.factors {
            let gram = f.mapv(|x| x.conj()).t().dot(f);
            g = &g * &gram;
        }
        let mut total = S::zero();
        for r in 0..rank {
            for q in 0..rank {
                total += g[[r, q]].scale(self.weights[r] * self.weights[q]);
            }
        }
        // the quadratic form is real for Hermitian G
        total.to_c64().re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_matrix, rng};
    use ndarray::array;
    use num_complex::Complex64;

    fn random_kruskal<S: Field>(
        shape: &[usize],
        rank: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> KruskalTensor<S> {
        let factors = shape
            .iter()
            .map(|&i| random_matrix::<S>(i, rank, rng))
            .collect();
        KruskalTensor::from_factors(factors).unwrap()
    }

    #[test]
    fn rank_one_outer_product() {
        let a = array![[1.0], [2.0]];
        let b = array![[3.0], [4.0]];
        let c = array![[5.0], [6.0]];
        let kt = KruskalTensor::from_factors(vec![a, b, c]).unwrap();
        let t = kt.full().unwrap();
        assert_eq!(t.shape(), &[2, 2, 2]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let expect = (1.0 + i as f64) * (3.0 + j as f64) * (5.0 + k as f64);
                    assert_eq!(t.get(&[i, j, k]), expect);
                }
            }
        }
    }

    #[test]
    fn unfold_matches_dense_unfold() {
        let mut r = rng(21);
        let kt = random_kruskal::<f64>(&[3, 4, 2, 5], 3, &mut r);
        let full = kt.full().unwrap();
        for mode in 1..=4 {
            let lhs = kt.unfold(mode).unwrap();
            let rhs = full.unfold(mode).unwrap();
            let err = (&lhs - &rhs).mapv(|x| x * x).sum().sqrt();
            assert!(err < 1e-12, "mode {mode} unfolding error {err}");
        }
    }

    #[test]
    fn unfold_matches_dense_unfold_complex() {
        let mut r = rng(22);
        let kt = random_kruskal::<Complex64>(&[3, 2, 4], 2, &mut r);
        let full = kt.full().unwrap();
        for mode in 1..=3 {
            let lhs = kt.unfold(mode).unwrap();
            let rhs = full.unfold(mode).unwrap();
            let err = (&lhs - &rhs).mapv(|x| x.norm_sqr()).sum().sqrt();
            assert!(err < 1e-12, "mode {mode} unfolding error {err}");
        }
    }

    #[test]
    fn normalize_preserves_tensor_and_unit_columns() {
        let mut r = rng(23);
        let mut kt = random_kruskal::<Complex64>(&[4, 3, 3], 4, &mut r);
        let before = kt.full().unwrap();
        kt.normalize().unwrap();
        for f in kt.factors() {
            let norms = column_norms(f);
            for &n in norms.iter() {
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
        for &w in kt.weights().iter() {
            assert!(w > 0.0);
        }
        let after = kt.full().unwrap();
        let err = before.sub(&after).unwrap().fro_norm() / before.fro_norm();
        assert!(err < 1e-12, "normalize changed the tensor by {err}");
    }

    #[test]
    fn norm_matches_dense_norm() {
        let mut r = rng(24);
        let mut kt = random_kruskal::<f64>(&[5, 4, 3], 3, &mut r);
        kt.weights_mut()[1] = 2.5;
        let dense_norm = kt.full().unwrap().fro_norm();
        assert!((kt.norm() - dense_norm).abs() < 1e-10 * dense_norm);

        let kt = random_kruskal::<Complex64>(&[3, 4, 2], 2, &mut r);
        let dense_norm = kt.full().unwrap().fro_norm();
        assert!((kt.norm() - dense_norm).abs() < 1e-10 * dense_norm);
    }

    #[test]
    fn scaled_factors_fold_phase_into_first_factor() {
        let mut r = rng(25);
        let a = random_matrix::<Complex64>(3, 2, &mut r);
        let b = random_matrix::<Complex64>(4, 2, &mut r);
        let scales = [Complex64::new(0.0, -2.0), Complex64::new(1.5, 1.5)];
        let reference = {
            // apply scales per rank-one term by hand
            let mut acc = DenseTensor::zeros(vec![3, 4]);
            for (rk, &s) in scales.iter().enumerate() {
                let term = KruskalTensor::from_factors(vec![
                    a.column(rk).insert_axis(ndarray::Axis(1)).to_owned(),
                    b.column(rk).insert_axis(ndarray::Axis(1)).to_owned(),
                ])
                .unwrap()
                .full()
                .unwrap();
                for (x, y) in acc.data_mut().iter_mut().zip(term.data().iter()) {
                    *x += *y * s;
                }
            }
            acc
        };
        let kt = KruskalTensor::from_scaled_factors(vec![a, b], &scales).unwrap();
        for &w in kt.weights().iter() {
            assert!(w >= 0.0);
        }
        let err = kt.full().unwrap().sub(&reference).unwrap().fro_norm();
        assert!(err < 1e-12 * reference.fro_norm());
    }
}
