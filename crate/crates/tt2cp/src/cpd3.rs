//! Canonical polyadic decomposition of dense tensors.
//!
//! Two engines live here. [`dtld`] is the direct (non-iterative) trilinear
//! decomposition for order-3 tensors: the tensor is compressed to an
//! `r x r x 2` core via leading singular subspaces and the factor of one
//! mode is read off a generalized eigenvalue problem
//! (`C_1 C_2^{-1} = A D A^{-1}` for exactly rank-`r` data). [`cp_als`] is
//! plain alternating least squares for any order, used both to refine a DTLD
//! seed and as the dense baseline in benchmarks. [`cpd3`] glues the two
//! together with random restarts as a fallback when the eigenproblem is
//! degenerate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::{eig, pinv, solve, svd_thin};
use crate::scalar::Field;
use crate::tensor::{hadamard, khatri_rao_descending, DenseTensor};

/// Controls for the ALS loop. Iteration stops after `max_iters` sweeps or
/// when two consecutive relative errors differ by less than `tol`.
#[derive(Debug, Clone, Copy)]
pub struct CpAlsOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CpAlsOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-12,
        }
    }
}

/// Outcome of an ALS run: the relative error after every sweep, and whether
/// any normal-equation solve needed Tikhonov regularization.
#[derive(Debug, Clone)]
pub struct CpAlsReport {
    pub iterations: usize,
    pub rel_errors: Vec<f64>,
    pub regularized: bool,
}

impl CpAlsReport {
    pub fn final_error(&self) -> f64 {
        self.rel_errors.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Best rank-one approximation `m ~ u v^T` (transpose, not adjoint) from the
/// leading singular triple. The singular value is split evenly between the
/// two vectors, and the phase is fixed so that the first entry of `u` of
/// maximal modulus is real positive.
pub fn best_rank1<S: Field>(m: &Array2<S>) -> Result<(Array1<S>, Array1<S>)> {
    let (u, s, v) = svd_thin(m.view())?;
    let sigma = s[0];
    let scale = sigma.sqrt();
    let mut uv: Array1<S> = u.column(0).mapv(|x| x.scale(scale));
    // v^T rather than v^H: conjugate the right singular vector
    let mut vv: Array1<S> = v.column(0).mapv(|x| x.conj().scale(scale));

    let mut imax = 0usize;
    let mut amax = -1.0f64;
    for (i, x) in uv.iter().enumerate() {
        let a = x.abs();
        if a > amax {
            amax = a;
            imax = i;
        }
    }
    if amax > 0.0 {
        let phase = uv[imax].scale(1.0 / amax);
        uv.mapv_inplace(|x| x * phase.conj());
        vv.mapv_inplace(|x| x * phase);
    }
    Ok((uv, vv))
}

fn complex_tensor<S: Field>(t: &DenseTensor<S>) -> DenseTensor<Complex64> {
    DenseTensor::new(
        t.shape().to_vec(),
        t.data().iter().map(|x| x.to_c64()).collect(),
    )
    .expect("shape preserved")
}

/// Multiply mode `mode` (1-based) of `t` by `m` from the left.
fn mode_multiply<S: Field>(
    t: &DenseTensor<S>,
    mode: usize,
    m: &Array2<S>,
) -> Result<DenseTensor<S>> {
    let unf = t.unfold(mode)?;
    let prod = m.dot(&unf);
    let mut shape = t.shape().to_vec();
    shape[mode - 1] = m.nrows();
    DenseTensor::fold(&prod, mode, &shape)
}

/// Direct trilinear decomposition of an order-3 tensor of exact (or nearly
/// exact) rank `rank`.
///
/// The mode with the smallest extent (later modes win ties) provides the two
/// "slices"; it must have extent at least 2, and the remaining two modes must
/// both have extent at least `rank`. The eigenproblem is always solved in the
/// complex field; for real input the recovered factors are cast back, and a
/// non-negligible imaginary remainder reports [`Error::DegenerateEig`] so the
/// caller can fall back to randomly initialized ALS.
pub fn dtld<S: Field>(
    t: &DenseTensor<S>,
    rank: usize,
    rng: &mut impl Rng,
) -> Result<KruskalTensor<S>> {
    if t.order() != 3 {
        return Err(Error::InvalidArgument(format!(
            "dtld expects an order-3 tensor, got order {}",
            t.order()
        )));
    }
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let shape = t.shape().to_vec();

    // slice mode: smallest extent, later modes win ties
    let mut slice_mode = 0usize;
    for m in 1..3 {
        if shape[m] <= shape[slice_mode] {
            slice_mode = m;
        }
    }
    let eigen_modes: Vec<usize> = (0..3).filter(|&m| m != slice_mode).collect();
    let (p, q) = (eigen_modes[0], eigen_modes[1]);

    if shape[slice_mode] < 2 {
        return Err(Error::InvalidArgument(format!(
            "slice mode extent {} < 2 in shape {shape:?}",
            shape[slice_mode]
        )));
    }
    for &m in &[p, q] {
        if shape[m] < rank {
            return Err(Error::RankTooLarge {
                rank,
                reason: format!("mode {} extent {} in shape {shape:?}", m + 1, shape[m]),
            });
        }
    }

    let tc = complex_tensor(t);

    // leading singular subspaces of the three unfoldings
    let mut bases: Vec<Array2<Complex64>> = Vec::with_capacity(3);
    for m in 0..3 {
        let want = if m == slice_mode { 2 } else { rank };
        let (u, _s, _v) = svd_thin(tc.unfold(m + 1)?.view())?;
        if u.ncols() < want {
            return Err(Error::RankTooLarge {
                rank,
                reason: format!("unfolding of mode {} has rank < {want}", m + 1),
            });
        }
        bases.push(u.slice(ndarray::s![.., ..want]).to_owned());
    }

    // compress to an r x r x 2 core
    let mut core = tc.clone();
    for m in 0..3 {
        let uh = bases[m].mapv(|x| x.conj()).t().to_owned();
        core = mode_multiply(&core, m + 1, &uh)?;
    }

    // the two core slices as r x r matrices over the eigen modes
    let slice = |k: usize| -> Array2<Complex64> {
        Array2::from_shape_fn((rank, rank), |(i, j)| {
            let mut idx = [0usize; 3];
            idx[p] = i;
            idx[q] = j;
            idx[slice_mode] = k;
            core.get(&idx)
        })
    };
    let c1 = slice(0);
    let c2 = slice(1);

    // random slice mixing regularizes the pencil against singular slices
    let w: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
    let sa = &c1 * Complex64::new(w[0], 0.0) + &c2 * Complex64::new(w[1], 0.0);
    let sb = &c1 * Complex64::new(w[2], 0.0) + &c2 * Complex64::new(w[3], 0.0);

    // F = S_a S_b^{-1}; its eigenvectors span the compressed mode-p factor
    let f_t = solve(sb.t(), sa.t())?; // F^T = S_b^{-T} S_a^T
    let f = f_t.t().to_owned();
    let (_vals, vecs) = eig(f.view())?;

    // back-project and recover the remaining two factors row by row
    let a_p = bases[p].dot(&vecs);
    let z = pinv(a_p.view())?.dot(&tc.unfold(p + 1)?);

    // columns of unfold(p) run over the remaining modes ascending,
    // earlier mode fastest
    let rem: Vec<usize> = (0..3).filter(|&m| m != p).collect();
    let (ia, ib) = (shape[rem[0]], shape[rem[1]]);
    let mut fac_a = Array2::<Complex64>::zeros((ia, rank));
    let mut fac_b = Array2::<Complex64>::zeros((ib, rank));
    for r in 0..rank {
        let m_r = Array2::from_shape_fn((ia, ib), |(i, j)| z[(r, i + ia * j)]);
        let (u, v) = best_rank1(&m_r)?;
        fac_a.column_mut(r).assign(&u);
        fac_b.column_mut(r).assign(&v);
    }

    let mut factors_c: Vec<Array2<Complex64>> = vec![Array2::zeros((0, 0)); 3];
    factors_c[p] = a_p;
    factors_c[rem[0]] = fac_a;
    factors_c[rem[1]] = fac_b;

    // cast back into the working field
    let mut factors: Vec<Array2<S>> = Vec::with_capacity(3);
    for fc in factors_c {
        let scale = fc.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let tol = 1e-8 * scale.max(1e-300);
        let mut f = Array2::<S>::zeros(fc.dim());
        for ((i, j), &x) in fc.indexed_iter() {
            f[[i, j]] = S::from_c64(x, tol).ok_or_else(|| {
                Error::DegenerateEig(format!(
                    "complex remainder {:.3e} in a real factor",
                    x.im.abs()
                ))
            })?;
        }
        factors.push(f);
    }
    KruskalTensor::from_factors(factors)
}

/// Random Gaussian factor matrices for the given shape and rank.
pub fn random_factors<S: Field>(
    shape: &[usize],
    rank: usize,
    rng: &mut impl Rng,
) -> Vec<Array2<S>> {
    shape
        .iter()
        .map(|&i| {
            let mut a = Array2::zeros((i, rank));
            for j in 0..rank {
                for r in 0..i {
                    a[[r, j]] = S::sample_standard(rng);
                }
            }
            a
        })
        .collect()
}

/// Alternating least squares for the CP model of a dense tensor of any
/// order, starting from the given factors. Returns the normalized model and
/// the per-sweep relative error trace.
pub fn cp_als<S: Field>(
    t: &DenseTensor<S>,
    init: Vec<Array2<S>>,
    opts: &CpAlsOptions,
) -> Result<(KruskalTensor<S>, CpAlsReport)> {
    let order = t.order();
    if init.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "{} initial factors for an order-{order} tensor",
            init.len()
        )));
    }
    let rank = init[0].ncols();
    for (n, f) in init.iter().enumerate() {
        if f.nrows() != t.shape()[n] || f.ncols() != rank {
            return Err(Error::ShapeMismatch(format!(
                "initial factor {} is {}x{}, expected {}x{rank}",
                n + 1,
                f.nrows(),
                f.ncols(),
                t.shape()[n]
            )));
        }
    }

    let norm_x = t.fro_norm();
    if norm_x == 0.0 {
        return Err(Error::ZeroNorm("cannot fit a zero tensor".into()));
    }
    let unfoldings: Vec<Array2<S>> = (1..=order)
        .map(|n| t.unfold(n))
        .collect::<Result<_>>()?;

    let mut factors = init;
    let mut rel_errors = Vec::new();
    let mut regularized = false;
    let mut iterations = 0;

    for _sweep in 0..opts.max_iters {
        iterations += 1;
        let mut last_inner = 0.0f64;
        for n in 0..order {
            let others: Vec<&Array2<S>> = factors
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != n)
                .map(|(_, f)| f)
                .collect();
            let kr = khatri_rao_descending(&others)?;
            let m = unfoldings[n].dot(&kr.mapv(|x| x.conj()));
            // Gram of the Khatri-Rao factor: K^T conj(K) = (*) A_k^T conj(A_k)
            let mut gamma = Array2::<S>::ones((rank, rank));
            for f in &others {
                let g = f.t().dot(&f.mapv(|x| x.conj()));
                gamma = hadamard(&gamma, &g)?;
            }
            let gamma = maybe_ridge(gamma, &mut regularized)?;
            // A_n Gamma = M  =>  Gamma^T A_n^T = M^T
            let a_t = solve(gamma.t(), m.t())?;
            factors[n] = a_t.t().to_owned();
            // <model, data> = <A_n, M>_F right after the update
            last_inner = factors[n]
                .iter()
                .zip(m.iter())
                .map(|(&b, &mm)| (b * mm.conj()).to_c64().re)
                .sum();
        }
        let model = KruskalTensor::from_factors(factors.clone())?;
        let err_sq = norm_x * norm_x - 2.0 * last_inner + model.norm_sqr();
        let rel = err_sq.max(0.0).sqrt() / norm_x;
        let done = rel_errors
            .last()
            .map(|&prev: &f64| (prev - rel).abs() < opts.tol)
            .unwrap_or(false);
        rel_errors.push(rel);
        if done {
            break;
        }
    }

    let mut kt = KruskalTensor::from_factors(factors)?;
    kt.normalize()?;
    Ok((
        kt,
        CpAlsReport {
            iterations,
            rel_errors,
            regularized,
        },
    ))
}

/// Add a `1e-12 tr(G)/R` ridge when the Gram matrix is numerically singular.
pub(crate) fn maybe_ridge<S: Field>(gamma: Array2<S>, flag: &mut bool) -> Result<Array2<S>> {
    let r = gamma.nrows();
    let (_u, s, _v) = svd_thin(gamma.view())?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin > 1e-12 * smax && smax > 0.0 {
        return Ok(gamma);
    }
    *flag = true;
    let trace: f64 = (0..r).map(|i| gamma[[i, i]].to_c64().re).sum();
    let ridge = (1e-12 * trace / r as f64).max(1e-300);
    let mut g = gamma;
    for i in 0..r {
        g[[i, i]] += S::from_real(ridge);
    }
    Ok(g)
}

/// Options for the order-3 driver [`cpd3`].
#[derive(Debug, Clone, Copy)]
pub struct Cpd3Options {
    pub als: CpAlsOptions,
    /// Random restarts attempted when the direct method fails.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for Cpd3Options {
    fn default() -> Self {
        Self {
            als: CpAlsOptions::default(),
            restarts: 5,
            seed: 0x7707,
        }
    }
}

/// CP decomposition of an order-3 tensor: DTLD seed refined by ALS, with
/// randomly restarted ALS as fallback when the direct method is unavailable
/// or degenerate.
pub fn cpd3<S: Field>(
    t: &DenseTensor<S>,
    rank: usize,
    opts: &Cpd3Options,
) -> Result<(KruskalTensor<S>, CpAlsReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // each attempt redraws the DTLD slice mixing (an unlucky pencil can
    // strand the ALS refinement in a swamp); random factors stand in when
    // the direct method is unavailable
    let mut best: Option<(KruskalTensor<S>, CpAlsReport)> = None;
    for _ in 0..opts.restarts.max(1) {
        let init = match dtld(t, rank, &mut rng) {
            Ok(seed_kt) => seed_kt.factors().to_vec(),
            Err(_) => random_factors::<S>(t.shape(), rank, &mut rng),
        };
        let (kt, report) = cp_als(t, init, &opts.als)?;
        let err = report.final_error();
        if !err.is_finite() {
            continue;
        }
        let better = best
            .as_ref()
            .map(|(_, b)| err < b.final_error())
            .unwrap_or(true);
        if better {
            best = Some((kt, report));
        }
        if err < 1e-10 {
            break;
        }
    }
    best.ok_or_else(|| Error::ConversionFailed("all ALS restarts failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_matrix, random_tensor, rng};
    use num_complex::Complex64;

    fn random_kruskal<S: Field>(
        shape: &[usize],
        rank: usize,
        r: &mut ChaCha8Rng,
    ) -> KruskalTensor<S> {
        KruskalTensor::from_factors(
            shape.iter().map(|&i| random_matrix::<S>(i, rank, r)).collect(),
        )
        .unwrap()
    }

    fn recon_error<S: Field>(kt: &KruskalTensor<S>, t: &DenseTensor<S>) -> f64 {
        kt.full().unwrap().sub(t).unwrap().fro_norm() / t.fro_norm()
    }

    #[test]
    fn best_rank1_recovers_outer_product() {
        let mut r = rng(41);
        let u0: Array1<f64> = random_matrix::<f64>(6, 1, &mut r).column(0).to_owned();
        let v0: Array1<f64> = random_matrix::<f64>(4, 1, &mut r).column(0).to_owned();
        let m = Array2::from_shape_fn((6, 4), |(i, j)| u0[i] * v0[j]);
        let (u, v) = best_rank1(&m).unwrap();
        let back = Array2::from_shape_fn((6, 4), |(i, j)| u[i] * v[j]);
        let err = (&m - &back).mapv(|x| x * x).sum().sqrt();
        assert!(err < 1e-12, "rank-1 residual {err}");
        // sign convention: the dominant entry of u is positive
        let imax = (0..6).max_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap()).unwrap();
        assert!(u[imax] > 0.0);
    }

    #[test]
    fn best_rank1_complex_transpose_convention() {
        let mut r = rng(42);
        let u0: Array1<Complex64> = random_matrix::<Complex64>(5, 1, &mut r).column(0).to_owned();
        let v0: Array1<Complex64> = random_matrix::<Complex64>(3, 1, &mut r).column(0).to_owned();
        // m = u v^T (no conjugation)
        let m = Array2::from_shape_fn((5, 3), |(i, j)| u0[i] * v0[j]);
        let (u, v) = best_rank1(&m).unwrap();
        let back = Array2::from_shape_fn((5, 3), |(i, j)| u[i] * v[j]);
        let err = (&m - &back).mapv(|x| x.norm_sqr()).sum().sqrt();
        assert!(err < 1e-12, "complex rank-1 residual {err}");
        let imax = (0..5).max_by(|&a, &b| u[a].norm().partial_cmp(&u[b].norm()).unwrap()).unwrap();
        assert!(u[imax].im.abs() < 1e-12 && u[imax].re > 0.0);
    }

    #[test]
    fn dtld_recovers_exact_rank() {
        let mut r = rng(43);
        let kt = random_kruskal::<f64>(&[6, 5, 4], 3, &mut r);
        let t = kt.full().unwrap();
        let got = dtld(&t, 3, &mut r).unwrap();
        let err = recon_error(&got, &t);
        assert!(err < 1e-8, "dtld reconstruction error {err}");
    }

    #[test]
    fn dtld_complex() {
        let mut r = rng(44);
        let kt = random_kruskal::<Complex64>(&[5, 4, 6], 3, &mut r);
        let t = kt.full().unwrap();
        let got = dtld(&t, 3, &mut r).unwrap();
        let err = recon_error(&got, &t);
        assert!(err < 1e-8, "complex dtld reconstruction error {err}");
    }

    #[test]
    fn dtld_slice_mode_smaller_than_rank() {
        // the smallest mode has extent 2 < rank: it must be chosen as the
        // slice mode so the other two (>= rank) carry the eigenproblem
        let mut r = rng(45);
        let kt = random_kruskal::<f64>(&[5, 2, 6], 4, &mut r);
        let t = kt.full().unwrap();
        let got = dtld(&t, 4, &mut r).unwrap();
        let err = recon_error(&got, &t);
        assert!(err < 1e-8, "dtld error with small slice mode {err}");
    }

    #[test]
    fn dtld_rejects_impossible_rank() {
        let mut r = rng(46);
        let t = random_tensor::<f64>(&[3, 3, 3], &mut r);
        assert!(matches!(
            dtld(&t, 4, &mut r),
            Err(Error::RankTooLarge { .. })
        ));
    }

    #[test]
    fn cp_als_error_is_monotone_and_converges_on_exact_data() {
        let mut r = rng(47);
        let kt = random_kruskal::<f64>(&[6, 5, 4], 3, &mut r);
        let t = kt.full().unwrap();
        let seed = dtld(&t, 3, &mut r).unwrap();
        let (got, report) = cp_als(
            &t,
            seed.factors().to_vec(),
            &CpAlsOptions {
                max_iters: 100,
                tol: 1e-14,
            },
        )
        .unwrap();
        for w in report.rel_errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "error increased: {:?}", w);
        }
        assert!(recon_error(&got, &t) < 1e-9);
    }

    #[test]
    fn cp_als_order_five() {
        let mut r = rng(48);
        let kt = random_kruskal::<f64>(&[4, 4, 4, 4, 4], 2, &mut r);
        let t = kt.full().unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let init = random_factors::<f64>(t.shape(), 2, &mut r);
            let (got, _) = cp_als(
                &t,
                init,
                &CpAlsOptions {
                    max_iters: 500,
                    tol: 1e-14,
                },
            )
            .unwrap();
            best = best.min(recon_error(&got, &t));
            if best < 1e-8 {
                break;
            }
        }
        assert!(best < 1e-8, "order-5 ALS best error {best}");
    }

    #[test]
    fn cpd3_driver_succeeds_with_and_without_dtld() {
        let mut r = rng(49);
        // dtld path
        let kt = random_kruskal::<f64>(&[6, 6, 3], 4, &mut r);
        let t = kt.full().unwrap();
        let (got, _) = cpd3(&t, 4, &Cpd3Options::default()).unwrap();
        assert!(recon_error(&got, &t) < 1e-8);

        // fallback path: rank larger than two of the modes forces restarts
        let kt = random_kruskal::<Complex64>(&[8, 3, 2], 2, &mut r);
        let t = kt.full().unwrap();
        let (got, _) = cpd3(&t, 2, &Cpd3Options::default()).unwrap();
        assert!(recon_error(&got, &t) < 1e-8);
    }
}
