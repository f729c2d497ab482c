//! Tensor-train (TT) format and TT-SVD compression.
//!
//! An order-`N` tensor is represented by a train of order-3 cores
//! `G_n` of size `R_{n-1} x I_n x R_n` with boundary ranks `R_0 = R_N = 1`:
//!
//! ```text
//!   Y(i_1, ..., i_N) = G_1(:, i_1, :) G_2(:, i_2, :) ... G_N(:, i_N, :)
//! ```
//!
//! Compression uses the sequential-projection TT-SVD: at the `n`-th split the
//! remainder is reshaped to `R_{n-1} I_n x (I_{n+1} ... I_N)` and truncated by
//! a thin SVD. Distributing an overall relative target `eps` as
//! `eps |Y| / sqrt(N-1)` per split guarantees `|Y - tt| <= eps |Y|`.

use ndarray::ShapeBuilder;

use crate::error::{Error, Result};
use crate::linalg::svd_thin;
use crate::scalar::Field;
use crate::tensor::DenseTensor;

/// Truncation controls for [`tt_svd`]. With both fields `None` only
/// numerically-zero singular values (below `1e-14` times the largest of the
/// split) are discarded. When both are set, `max_rank` takes precedence: the
/// rank is capped even if that violates the error target.
#[derive(Debug, Clone, Copy, Default)]
pub struct TTOptions {
    pub max_rank: Option<usize>,
    pub rel_error: Option<f64>,
}

/// Relative threshold below which singular values are treated as exact zeros.
const SIGMA_ZERO_REL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct TTTensor<S: Field> {
    cores: Vec<DenseTensor<S>>,
}

impl<S: Field> TTTensor<S> {
    /// Build from cores, validating orders, bond consistency and the
    /// boundary condition `R_0 = R_N = 1`.
    pub fn new(cores: Vec<DenseTensor<S>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("empty tensor train".into()));
        }
        for c in &cores {
            if c.order() != 3 {
                return Err(Error::ShapeMismatch(format!(
                    "TT core must be order 3, got shape {:?}",
                    c.shape()
                )));
            }
        }
        if cores[0].shape()[0] != 1 {
            return Err(Error::ShapeMismatch(format!(
                "first TT core must have leading rank 1, got {}",
                cores[0].shape()[0]
            )));
        }
        if cores.last().unwrap().shape()[2] != 1 {
            return Err(Error::ShapeMismatch(format!(
                "last TT core must have trailing rank 1, got {}",
                cores.last().unwrap().shape()[2]
            )));
        }
        for w in cores.windows(2) {
            if w[0].shape()[2] != w[1].shape()[0] {
                return Err(Error::BondMismatch {
                    left: w[0].shape()[2],
                    right: w[1].shape()[0],
                });
            }
        }
        Ok(Self { cores })
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Mode extents `I_1, ..., I_N`.
    pub fn extents(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    /// Bond rank profile `R_0, R_1, ..., R_N` (length `N + 1`).
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.shape()[0]).collect();
        r.push(1);
        r
    }

    pub fn cores(&self) -> &[DenseTensor<S>] {
        &self.cores
    }

    pub fn cores_mut(&mut self) -> &mut [DenseTensor<S>] {
        &mut self.cores
    }

    pub fn core(&self, n: usize) -> &DenseTensor<S> {
        &self.cores[n]
    }

    /// Number of stored entries across all cores.
    pub fn num_parameters(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// Contract the train into the full dense tensor.
    pub fn full(&self) -> Result<DenseTensor<S>> {
        let mut acc = self.cores[0].clone();
        for c in &self.cores[1..] {
            acc = acc.train_contract(c)?;
        }
        // strip the singleton boundary ranks
        acc.reshape(&self.extents())
    }

    /// Frobenius norm without materializing the full tensor, via the chained
    /// Gram contraction `T <- sum_i G_n(:, i, :)^H T G_n(:, i, :)`.
    pub fn norm(&self) -> f64 {
        use ndarray::Array2;
        let mut t: Array2<S> = Array2::ones((1, 1));
        for c in &self.cores {
            let (rl, i, rr) = (c.shape()[0], c.shape()[1], c.shape()[2]);
            let mut next = Array2::<S>::zeros((rr, rr));
            for k in 0..i {
                // slice G(:, k, :) as an R_{n-1} x R_n matrix
                let g = Array2::from_shape_fn((rl, rr), |(a, b)| c.get(&[a, k, b]));
                let gh = g.mapv(|x| x.conj());
                next = next + gh.t().dot(&t).dot(&g);
            }
            t = next;
        }
        t[(0, 0)].to_c64().re.max(0.0).sqrt()
    }
}

/// Compress a dense tensor into TT form by sequential thin SVDs.
pub fn tt_svd<S: Field>(tensor: &DenseTensor<S>, opts: &TTOptions) -> Result<TTTensor<S>> {
    let shape = tensor.shape().to_vec();
    let n = shape.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "tt_svd needs an order >= 2 tensor".into(),
        ));
    }
    if let Some(e) = opts.rel_error {
        if !(e >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_error must be nonnegative, got {e}"
            )));
        }
    }
    if opts.max_rank == Some(0) {
        return Err(Error::InvalidArgument("max_rank must be positive".into()));
    }

    let norm = tensor.fro_norm();
    // per-split absolute threshold distributing the global error budget
    let delta = opts
        .rel_error
        .map(|e| e * norm / ((n - 1) as f64).sqrt())
        .unwrap_or(0.0);

    let mut cores = Vec::with_capacity(n);
    let mut rank_prev = 1usize;
    let mut rest: Vec<S> = tensor.data().to_vec();
    let mut rest_cols: usize = shape[1..].iter().product();

    for (k, &extent) in shape.iter().take(n - 1).enumerate() {
        let rows = rank_prev * extent;
        let m = ndarray::ArrayView2::from_shape((rows, rest_cols).f(), &rest)
            .expect("split reshape is consistent by construction");
        let (u, s, v) = svd_thin(m)?;

        let smax = s.first().copied().unwrap_or(0.0);
        let full_rank = s.len();
        // keep the smallest rank whose discarded tail fits in the budget
        let mut rank = full_rank;
        let mut tail = 0.0f64;
        for i in (0..full_rank).rev() {
            let si = s[i];
            let drop = si < SIGMA_ZERO_REL * smax || {
                let t = tail + si * si;
                t <= delta * delta
            };
            if !drop {
                break;
            }
            tail += si * si;
            rank = i;
        }
        let mut rank = rank.max(1);
        if let Some(cap) = opts.max_rank {
            rank = rank.min(cap);
        }

        let mut core_data = Vec::with_capacity(rows * rank);
        for j in 0..rank {
            for i in 0..rows {
                core_data.push(u[(i, j)]);
            }
        }
        cores.push(DenseTensor::new(
            vec![rank_prev, extent, rank],
            core_data,
        )?);

        // remainder = diag(s) V^H, stored first-index-fastest
        let mut next = vec![S::zero(); rank * rest_cols];
        for j in 0..rest_cols {
            for i in 0..rank {
                next[i + rank * j] = v[(j, i)].conj().scale(s[i]);
            }
        }
        rest = next;
        rank_prev = rank;
        // the remainder now spans modes k+2..N
        rest_cols = shape[k + 2..].iter().product();
    }

    cores.push(DenseTensor::new(
        vec![rank_prev, shape[n - 1], 1],
        rest,
    )?);
    TTTensor::new(cores)
}

/// Relative reconstruction error `|Y - tt| / |Y|` against a dense reference.
pub fn tt_rel_error<S: Field>(tt: &TTTensor<S>, reference: &DenseTensor<S>) -> Result<f64> {
    let full = tt.full()?;
    let denom = reference.fro_norm();
    if denom == 0.0 {
        return Err(Error::ZeroNorm("reference tensor has zero norm".into()));
    }
    Ok(full.sub(reference)?.fro_norm() / denom)
}

/// Cores of a TT tensor after merging both boundary pairs, the preprocessing
/// step of the sequential TT-to-CP conversion. The first entry is
/// `G_1 • G_2` reshaped to `I_1 x I_2 x R_2` and the last is
/// `G_{N-1} • G_N` reshaped to `R_{N-2} x I_{N-1} x I_N`; interior cores are
/// carried over unchanged. The first entry is not a valid TT core (its
/// leading extent is a mode, not a bond), hence the dedicated type.
#[derive(Debug, Clone)]
pub struct GroupedCores<S: Field> {
    pub cores: Vec<DenseTensor<S>>,
}

/// Merge the two boundary core pairs of a TT tensor of order `N >= 3`,
/// producing `N - 2` grouped cores.
pub fn regroup_for_sequential<S: Field>(tt: &TTTensor<S>) -> Result<GroupedCores<S>> {
    let n = tt.order();
    if n < 4 {
        // with N = 3 the two merges would both consume the middle core
        return Err(Error::InvalidArgument(format!(
            "regrouping needs order >= 4, got {n}"
        )));
    }
    let extents = tt.extents();
    let ranks = tt.ranks();

    let mut cores = Vec::with_capacity(n - 2);
    let head = tt.core(0).train_contract(tt.core(1))?;
    // (1, I1, I2, R2) -> (I1, I2, R2)
    cores.push(head.reshape(&[extents[0], extents[1], ranks[2]])?);
    for m in 2..n - 2 {
        cores.push(tt.core(m).clone());
    }
    let tail = tt.core(n - 2).train_contract(tt.core(n - 1))?;
    // (R_{N-2}, I_{N-1}, I_N, 1) -> (R_{N-2}, I_{N-1}, I_N)
    cores.push(tail.reshape(&[ranks[n - 2], extents[n - 2], extents[n - 1]])?);
    Ok(GroupedCores { cores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_tensor, rng};
    use num_complex::Complex64;
    use rand_chacha::ChaCha8Rng;

    fn random_tt<S: Field>(
        extents: &[usize],
        ranks: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> TTTensor<S> {
        assert_eq!(ranks.len(), extents.len() + 1);
        let cores = extents
            .iter()
            .enumerate()
            .map(|(k, &i)| random_tensor::<S>(&[ranks[k], i, ranks[k + 1]], rng))
            .collect();
        TTTensor::new(cores).unwrap()
    }

    #[test]
    fn constructor_validates_invariants() {
        let good = DenseTensor::<f64>::zeros(vec![1, 4, 2]);
        let tail = DenseTensor::<f64>::zeros(vec![2, 3, 1]);
        assert!(TTTensor::new(vec![good.clone(), tail.clone()]).is_ok());
        // bad boundary
        assert!(TTTensor::new(vec![tail.clone()]).is_err());
        // bond mismatch
        let middle = DenseTensor::<f64>::zeros(vec![3, 2, 2]);
        assert!(TTTensor::new(vec![good, middle, tail]).is_err());
    }

    #[test]
    fn full_matches_elementwise_train_product() {
        let mut r = rng(31);
        let tt = random_tt::<f64>(&[3, 4, 2], &[1, 2, 3, 1], &mut r);
        let full = tt.full().unwrap();
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..2 {
                    // multiply the three slice matrices by hand
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for b in 0..3 {
                            acc += tt.core(0).get(&[0, i, a])
                                * tt.core(1).get(&[a, j, b])
                                * tt.core(2).get(&[b, k, 0]);
                        }
                    }
                    let got = full.get(&[i, j, k]);
                    assert!((acc - got).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tt_svd_is_exact_without_truncation() {
        let mut r = rng(32);
        let tt = random_tt::<f64>(&[4, 3, 5, 3], &[1, 2, 3, 2, 1], &mut r);
        let full = tt.full().unwrap();
        let recon = tt_svd(&full, &TTOptions::default()).unwrap();
        let err = tt_rel_error(&recon, &full).unwrap();
        assert!(err < 1e-12, "exact tt_svd error {err}");
        // numerically-zero singular values are truncated, so the recovered
        // profile cannot exceed the generating one
        let got = recon.ranks();
        let orig = tt.ranks();
        for (g, o) in got.iter().zip(orig.iter()) {
            assert!(g <= o, "ranks {got:?} vs {orig:?}");
        }
    }

    #[test]
    fn tt_svd_complex_exact() {
        let mut r = rng(33);
        let tt = random_tt::<Complex64>(&[3, 4, 3], &[1, 2, 2, 1], &mut r);
        let full = tt.full().unwrap();
        let recon = tt_svd(&full, &TTOptions::default()).unwrap();
        let err = tt_rel_error(&recon, &full).unwrap();
        assert!(err < 1e-12, "complex tt_svd error {err}");
    }

    #[test]
    fn tt_svd_respects_relative_error_budget() {
        let mut r = rng(34);
        let t = random_tensor::<f64>(&[5, 6, 4, 3], &mut r);
        for eps in [0.9, 0.5, 0.1, 1e-3] {
            let tt = tt_svd(
                &t,
                &TTOptions {
                    max_rank: None,
                    rel_error: Some(eps),
                },
            )
            .unwrap();
            let err = tt_rel_error(&tt, &t).unwrap();
            assert!(err <= eps + 1e-12, "eps {eps} exceeded: {err}");
        }
    }

    #[test]
    fn tt_svd_max_rank_caps_and_wins() {
        let mut r = rng(35);
        let t = random_tensor::<f64>(&[6, 5, 6], &mut r);
        let tt = tt_svd(
            &t,
            &TTOptions {
                max_rank: Some(2),
                // tiny error target that rank 2 cannot reach: the cap wins
                rel_error: Some(1e-12),
            },
        )
        .unwrap();
        for &rk in &tt.ranks() {
            assert!(rk <= 2);
        }
    }

    #[test]
    fn tt_svd_rank_profile_bounded_by_dimension_products() {
        let mut r = rng(36);
        let t = random_tensor::<f64>(&[2, 5, 5, 2], &mut r);
        let tt = tt_svd(&t, &TTOptions::default()).unwrap();
        let ranks = tt.ranks();
        let shape = [2usize, 5, 5, 2];
        for n in 0..=4 {
            let left: usize = shape[..n].iter().product();
            let right: usize = shape[n..].iter().product();
            assert!(ranks[n] <= left.min(right), "ranks {ranks:?}");
        }
    }

    #[test]
    fn norm_matches_dense_norm() {
        let mut r = rng(37);
        let tt = random_tt::<Complex64>(&[4, 3, 2, 3], &[1, 3, 2, 2, 1], &mut r);
        let dense = tt.full().unwrap().fro_norm();
        assert!((tt.norm() - dense).abs() < 1e-10 * dense);
    }

    #[test]
    fn regroup_preserves_the_tensor() {
        let mut r = rng(38);
        let tt = random_tt::<f64>(&[3, 4, 2, 3, 4], &[1, 2, 3, 3, 2, 1], &mut r);
        let grouped = regroup_for_sequential(&tt).unwrap();
        assert_eq!(grouped.cores.len(), 3);
        assert_eq!(grouped.cores[0].shape(), &[3, 4, 3]);
        assert_eq!(grouped.cores[2].shape(), &[3, 3, 4]);
        // contracting the grouped train reproduces the full tensor
        let mut acc = grouped.cores[0].clone();
        for c in &grouped.cores[1..] {
            acc = acc.train_contract(c).unwrap();
        }
        let full = tt.full().unwrap();
        let err = acc.reshape(full.shape()).unwrap().sub(&full).unwrap().fro_norm();
        assert!(err < 1e-12 * full.fro_norm());
    }
}
