//! Structural conversions between the Kruskal and tensor-train formats.
//!
//! A rank-`R` Kruskal tensor maps to a TT whose middle cores have diagonal
//! slices, `G_n(:, i, :) = diag(A^(n)(i, :))`. Conversely, an exact rank-`R`
//! TT hides a Kruskal tensor inside each core: `G_n = [[Q_n, A^(n), S_n]]`
//! with the chain condition `S_n^T Q_{n+1} = I`. The exact conversion
//! ([`tt_to_cp_exact`]) decomposes each core independently, then repairs the
//! per-core permutation and scaling indeterminacies so the chain condition
//! holds; the sequential conversion ([`tt_to_cp_sequential`]) threads the
//! `S` matrix through the train and reads each new factor off best rank-one
//! approximations of matrix slices, which needs no repair.

use ndarray::Array2;

use crate::cpd3::{best_rank1, cpd3, Cpd3Options};
use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::inv;
use crate::scalar::Field;
use crate::tensor::DenseTensor;
use crate::tt::{regroup_for_sequential, TTTensor};

/// Hard cap on the column count materialized by [`tt_to_kt_full`].
pub const KT_FULL_COLUMN_CAP: usize = 1_000_000;

/// A permutation with per-row scales: the monomial matrix `diag(gamma) P`
/// closest to the input of [`match_permutation`], with `P[i, perm[i]] = 1`.
#[derive(Debug, Clone)]
pub struct PermScale<S: Field> {
    pub perm: Vec<usize>,
    pub gamma: Vec<S>,
    /// `|m - diag(gamma) P|_F`.
    pub residual: f64,
}

/// Outcome of the exact conversion, carrying a quality signal: when a
/// repaired product `S_n^T Q_{n+1}` was far from monomial (off-mass above
/// 0.3) the result is flagged rather than silently returned.
#[derive(Debug, Clone)]
pub struct Conversion<S: Field> {
    pub ktensor: KruskalTensor<S>,
    pub low_confidence: bool,
    /// Largest relative off-monomial residual seen during repair.
    pub max_repair_residual: f64,
}

/// Off-monomial mass above which a conversion is flagged low-confidence.
const REPAIR_RESIDUAL_THRESHOLD: f64 = 0.3;

/// Lemma-1 construction: fold a Kruskal tensor into a TT with bond profile
/// `(1, R, ..., R, 1)`. The weights are absorbed into the first core.
pub fn kt_to_tt<S: Field>(k: &KruskalTensor<S>) -> Result<TTTensor<S>> {
    let order = k.order();
    if order < 3 {
        return Err(Error::InvalidArgument(format!(
            "kt_to_tt needs order >= 3, got {order}"
        )));
    }
    let rank = k.rank();
    let shape = k.shape();
    let mut cores = Vec::with_capacity(order);

    let mut first = DenseTensor::zeros(vec![1, shape[0], rank]);
    for r in 0..rank {
        for i in 0..shape[0] {
            first.set(&[0, i, r], k.factor(0)[[i, r]].scale(k.weights()[r]));
        }
    }
    cores.push(first);

    for n in 1..order - 1 {
        let mut core = DenseTensor::zeros(vec![rank, shape[n], rank]);
        for r in 0..rank {
            for i in 0..shape[n] {
                core.set(&[r, i, r], k.factor(n)[[i, r]]);
            }
        }
        cores.push(core);
    }

    let mut last = DenseTensor::zeros(vec![rank, shape[order - 1], 1]);
    for r in 0..rank {
        for i in 0..shape[order - 1] {
            last.set(&[r, i, 0], k.factor(order - 1)[[i, r]]);
        }
    }
    cores.push(last);
    TTTensor::new(cores)
}

/// Lemma-2 construction: the exact Kruskal form of a TT tensor with one
/// column per bond multi-index, `R_1 R_2 ... R_{N-1}` columns in total
/// (earliest bond fastest). Unit weights; columns are not normalized.
pub fn tt_to_kt_full<S: Field>(x: &TTTensor<S>) -> Result<KruskalTensor<S>> {
    let order = x.order();
    let ranks = x.ranks();
    let extents = x.extents();
    let mut columns: usize = 1;
    for &r in &ranks[1..order] {
        columns = columns.saturating_mul(r);
        if columns > KT_FULL_COLUMN_CAP {
            return Err(Error::ColumnCapExceeded {
                count: columns,
                cap: KT_FULL_COLUMN_CAP,
            });
        }
    }

    let mut factors: Vec<Array2<S>> = extents
        .iter()
        .map(|&i| Array2::zeros((i, columns)))
        .collect();
    // enumerate bond multi-indices (r_1, ..., r_{N-1}), r_1 fastest
    let mut multi = vec![0usize; order - 1];
    for col in 0..columns {
        for n in 0..order {
            let rl = if n == 0 { 0 } else { multi[n - 1] };
            let rr = if n == order - 1 { 0 } else { multi[n] };
            let core = x.core(n);
            for i in 0..extents[n] {
                factors[n][[i, col]] = core.get(&[rl, i, rr]);
            }
        }
        for (m, &r) in multi.iter_mut().zip(&ranks[1..]) {
            *m += 1;
            if *m < r {
                break;
            }
            *m = 0;
        }
    }
    KruskalTensor::from_factors(factors)
}

/// Find the monomial matrix `diag(gamma) P` closest to `m` by greedy global
/// selection: repeatedly take the largest-magnitude entry whose row and
/// column are both unmatched.
pub fn match_permutation<S: Field>(m: &Array2<S>) -> Result<PermScale<S>> {
    let r = m.nrows();
    if r != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "match_permutation expects a square matrix, got {}x{}",
            r,
            m.ncols()
        )));
    }
    let mut row_used = vec![false; r];
    let mut col_used = vec![false; r];
    let mut perm = vec![0usize; r];
    for _ in 0..r {
        let mut best = (0usize, 0usize, -1.0f64);
        for i in 0..r {
            if row_used[i] {
                continue;
            }
            for j in 0..r {
                if col_used[j] {
                    continue;
                }
                let a = m[[i, j]].abs();
                if a > best.2 {
                    best = (i, j, a);
                }
            }
        }
        let (i, j, _) = best;
        row_used[i] = true;
        col_used[j] = true;
        perm[i] = j;
    }
    let gamma: Vec<S> = (0..r).map(|i| m[[i, perm[i]]]).collect();
    let mut off = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            if j != perm[i] {
                off += m[[i, j]].square();
            }
        }
    }
    Ok(PermScale {
        perm,
        gamma,
        residual: off.sqrt(),
    })
}

/// The per-core Kruskal triple `G_n = [[Q, A, S]]` used while stitching an
/// exact TT back into CP form.
struct CoreCpd<S: Field> {
    q: Array2<S>,
    a: Array2<S>,
    s: Array2<S>,
    interior: bool,
}

/// Algorithm-2 exact conversion of a rank-`r` TT tensor into a Kruskal
/// tensor.
///
/// Cores whose bond ranks both equal `r` get an independent order-3 CPD
/// (DTLD + ALS, see [`cpd3`]); adjacent results are then aligned by
/// [`match_permutation`] on `S_n^T Q_{n+1}`. A first (last) core whose left
/// (right) bond is below `r` — the shape TT-SVD produces when the CP rank
/// exceeds the mode dimensions — is recovered in closed form instead: its
/// `S` (`Q`) matrix is pinned by the neighboring interior core through the
/// chain condition, and the remaining two factors are best rank-one
/// approximations of the rows of the matching unfolding.
pub fn tt_to_cp_exact<S: Field>(
    x: &TTTensor<S>,
    rank: usize,
    opts: &Cpd3Options,
) -> Result<Conversion<S>> {
    let order = x.order();
    if order < 3 {
        return Err(Error::InvalidArgument(format!(
            "tt_to_cp_exact needs order >= 3, got {order}"
        )));
    }
    let ranks = x.ranks();
    let extents = x.extents();

    // classify cores 2..N-1 (0-based 1..order-1)
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Interior,
        LeftBoundary,
        RightBoundary,
    }
    let mut kinds = Vec::with_capacity(order - 2);
    for n in 1..order - 1 {
        let (rl, rr) = (ranks[n], ranks[n + 1]);
        let kind = if rl == rank && rr == rank {
            Kind::Interior
        } else if n == 1 && rl < rank && rr == rank {
            Kind::LeftBoundary
        } else if n == order - 2 && rl == rank && rr < rank {
            Kind::RightBoundary
        } else {
            return Err(Error::DegenerateRanks(format!(
                "core {} has bonds ({rl}, {rr}) incompatible with rank {rank}",
                n + 1
            )));
        };
        kinds.push(kind);
    }

    // decompose the interior cores
    let mut core_cpds: Vec<Option<CoreCpd<S>>> = Vec::with_capacity(order - 2);
    let mut max_residual = 0.0f64;
    for (idx, &kind) in kinds.iter().enumerate() {
        let n = idx + 1;
        if kind != Kind::Interior {
            core_cpds.push(None);
            continue;
        }
        let (kt, _report) = cpd3(x.core(n), rank, opts)?;
        let lambda = kt.weights().clone();
        let q = kt.factor(0).clone();
        let a = kt.factor(1).clone();
        let mut s = kt.factor(2).clone();
        for (r, mut col) in s.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v.scale(lambda[r]));
        }
        core_cpds.push(Some(CoreCpd {
            q,
            a,
            s,
            interior: true,
        }));
    }

    // align adjacent interior pairs so S_n^T Q_{n+1} becomes the identity
    for idx in 0..kinds.len().saturating_sub(1) {
        if kinds[idx] != Kind::Interior || kinds[idx + 1] != Kind::Interior {
            continue;
        }
        let s_n = core_cpds[idx].as_ref().unwrap().s.clone();
        let next = core_cpds[idx + 1].as_mut().unwrap();
        let m = s_n.t().dot(&next.q);
        let ps = match_permutation(&m)?;
        let m_norm = m.iter().map(|v| v.square()).sum::<f64>().sqrt();
        if m_norm > 0.0 {
            max_residual = max_residual.max(ps.residual / m_norm);
        }
        let (q_old, a_old, s_old) = (next.q.clone(), next.a.clone(), next.s.clone());
        for i in 0..rank {
            let j = ps.perm[i];
            let g = ps.gamma[i];
            if g.abs() == 0.0 {
                return Err(Error::ConversionFailed(format!(
                    "zero scale while aligning cores {} and {}",
                    idx + 2,
                    idx + 3
                )));
            }
            let ginv = S::one() / g;
            for (dst, src) in [
                (&mut next.q, (&q_old, Some(ginv))),
                (&mut next.a, (&a_old, None)),
                (&mut next.s, (&s_old, Some(g))),
            ] {
                let (mat, scale) = src;
                for row in 0..mat.nrows() {
                    let v = mat[[row, j]];
                    dst[[row, i]] = match scale {
                        Some(c) => v * c,
                        None => v,
                    };
                }
            }
        }
    }

    // boundary cores are pinned by their interior neighbor
    if kinds.first() == Some(&Kind::LeftBoundary) {
        if kinds.get(1) != Some(&Kind::Interior) {
            return Err(Error::DegenerateRanks(
                "first core needs an interior neighbor to anchor against".into(),
            ));
        }
        let q3 = core_cpds[1].as_ref().unwrap().q.clone();
        let core = x.core(1);
        let (rl, i2) = (core.shape()[0], core.shape()[1]);
        // W = S_2^{-1} [G_2]_(3) with S_2 := Q_3^{-T}, i.e. W = Q_3^T [G_2]_(3)
        let w = q3.t().dot(&core.unfold(3)?);
        let mut q = Array2::<S>::zeros((rl, rank));
        let mut a = Array2::<S>::zeros((i2, rank));
        for j in 0..rank {
            let m_j = Array2::from_shape_fn((rl, i2), |(p, t)| w[(j, p + rl * t)]);
            let (u, v) = best_rank1(&m_j)?;
            q.column_mut(j).assign(&u);
            a.column_mut(j).assign(&v);
        }
        let s = inv(q3.view())?.t().to_owned();
        core_cpds[0] = Some(CoreCpd {
            q,
            a,
            s,
            interior: false,
        });
    }
    if kinds.last() == Some(&Kind::RightBoundary) {
        let last = kinds.len() - 1;
        if last == 0 || kinds[last - 1] != Kind::Interior {
            return Err(Error::DegenerateRanks(
                "last core needs an interior neighbor to anchor against".into(),
            ));
        }
        let s_prev = core_cpds[last - 1].as_ref().unwrap().s.clone();
        let core = x.core(last + 1);
        let (i_n, rr) = (core.shape()[1], core.shape()[2]);
        // W = Q_{N-1}^{-1} [G_{N-1}]_(1) with Q_{N-1} := S_{N-2}^{-T}
        let w = s_prev.t().dot(&core.unfold(1)?);
        let mut a = Array2::<S>::zeros((i_n, rank));
        let mut s = Array2::<S>::zeros((rr, rank));
        for j in 0..rank {
            let m_j = Array2::from_shape_fn((i_n, rr), |(t, p)| w[(j, t + i_n * p)]);
            let (u, v) = best_rank1(&m_j)?;
            a.column_mut(j).assign(&u);
            s.column_mut(j).assign(&v);
        }
        let q = inv(s_prev.view())?.t().to_owned();
        core_cpds[last] = Some(CoreCpd {
            q,
            a,
            s,
            interior: false,
        });
    }

    // endpoints: A^(1) = G_1 Q_2 and A^(N) = G_N^T S_{N-1}
    let g1 = x
        .core(0)
        .reshape(&[extents[0], ranks[1]])?
        .as_matrix()?;
    let gn = x
        .core(order - 1)
        .reshape(&[ranks[order - 1], extents[order - 1]])?
        .as_matrix()?;
    let first_cpd = core_cpds[0].as_ref().unwrap();
    let last_cpd = core_cpds[order - 3].as_ref().unwrap();
    let a1 = g1.dot(&first_cpd.q);
    let an = gn.t().dot(&last_cpd.s);

    let mut factors = Vec::with_capacity(order);
    factors.push(a1);
    for cpd in &core_cpds {
        factors.push(cpd.as_ref().unwrap().a.clone());
    }
    factors.push(an);
    debug_assert!(core_cpds.iter().all(|c| c.is_some()));
    let _ = first_cpd.interior;

    let mut kt = KruskalTensor::from_factors(factors)?;
    kt.normalize()?;
    Ok(Conversion {
        ktensor: kt,
        low_confidence: max_residual > REPAIR_RESIDUAL_THRESHOLD,
        max_repair_residual: max_residual,
    })
}

/// Algorithm-3 sequential conversion: CPD of the first regrouped core, then
/// one pass of best rank-one slice extractions threading `S_m` through the
/// train. Works column by column, so no permutation repair is needed.
pub fn tt_to_cp_sequential<S: Field>(
    x: &TTTensor<S>,
    rank: usize,
    opts: &Cpd3Options,
) -> Result<KruskalTensor<S>> {
    let order = x.order();
    if order < 3 {
        return Err(Error::InvalidArgument(format!(
            "tt_to_cp_sequential needs order >= 3, got {order}"
        )));
    }
    if order == 3 {
        // a single regrouped core would be the whole tensor
        let (kt, _) = cpd3(&x.full()?, rank, opts)?;
        return Ok(kt);
    }
    let grouped = regroup_for_sequential(x)?;
    let h1 = &grouped.cores[0];
    if h1.shape()[2] != rank {
        return Err(Error::DegenerateRanks(format!(
            "first regrouped core has trailing bond {}, expected rank {rank}",
            h1.shape()[2]
        )));
    }

    let (kt0, _) = cpd3(h1, rank, opts)?;
    let lambda = kt0.weights().clone();
    let mut factors: Vec<Array2<S>> = Vec::with_capacity(order);
    factors.push(kt0.factor(0).clone());
    factors.push(kt0.factor(1).clone());
    let mut s_prev = kt0.factor(2).clone();
    for (r, mut col) in s_prev.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| v.scale(lambda[r]));
    }

    for (m, core) in grouped.cores.iter().enumerate().skip(1) {
        if core.shape()[0] != rank {
            return Err(Error::DegenerateRanks(format!(
                "regrouped core {} has leading bond {}, expected rank {rank}",
                m + 1,
                core.shape()[0]
            )));
        }
        // G~ = S_{m-1}^T • core (plain transpose, also for complex data)
        let gt = s_prev.t().dot(&core.unfold(1)?);
        let (i_mid, r_right) = (core.shape()[1], core.shape()[2]);
        let mut a_new = Array2::<S>::zeros((i_mid, rank));
        let mut s_new = Array2::<S>::zeros((r_right, rank));
        for j in 0..rank {
            let slice = Array2::from_shape_fn((i_mid, r_right), |(t, p)| gt[(j, t + i_mid * p)]);
            let norm = slice.iter().map(|v| v.square()).sum::<f64>().sqrt();
            if norm < 1e-300 {
                return Err(Error::ZeroNorm(format!(
                    "slice {j} of regrouped core {} collapsed",
                    m + 1
                )));
            }
            let (u, v) = best_rank1(&slice)?;
            a_new.column_mut(j).assign(&u);
            s_new.column_mut(j).assign(&v);
        }
        factors.push(a_new);
        s_prev = s_new;
    }
    // the thread ends as the last factor: A^(N) = S_{N-2}
    factors.push(s_prev);

    let mut kt = KruskalTensor::from_factors(factors)?;
    kt.normalize()?;
    Ok(kt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_matrix, rng};
    use crate::tt::{tt_svd, TTOptions};
    use ndarray::array;
    use num_complex::Complex64;
    use rand_chacha::ChaCha8Rng;

    fn random_kruskal<S: Field>(
        shape: &[usize],
        rank: usize,
        r: &mut ChaCha8Rng,
    ) -> KruskalTensor<S> {
        let mut kt = KruskalTensor::from_factors(
            shape.iter().map(|&i| random_matrix::<S>(i, rank, r)).collect(),
        )
        .unwrap();
        kt.normalize().unwrap();
        kt
    }

    fn rel_err<S: Field>(a: &DenseTensor<S>, b: &DenseTensor<S>) -> f64 {
        a.sub(b).unwrap().fro_norm() / b.fro_norm()
    }

    #[test]
    fn kt_to_tt_roundtrip() {
        let mut r = rng(51);
        for (shape, rank) in [(vec![4, 3, 5], 3usize), (vec![5, 5, 5, 5, 5], 10)] {
            let kt = random_kruskal::<f64>(&shape, rank, &mut r);
            let tt = kt_to_tt(&kt).unwrap();
            assert_eq!(tt.ranks()[1..shape.len()], vec![rank; shape.len() - 1]);
            let err = rel_err(&tt.full().unwrap(), &kt.full().unwrap());
            assert!(err < 1e-12, "roundtrip error {err}");
        }
    }

    #[test]
    fn kt_to_tt_middle_cores_are_diagonal() {
        let mut r = rng(52);
        let kt = random_kruskal::<Complex64>(&[3, 4, 3, 2], 3, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        for n in 1..3 {
            let c = tt.core(n);
            for p in 0..3 {
                for q in 0..3 {
                    if p != q {
                        for i in 0..c.shape()[1] {
                            assert_eq!(c.get(&[p, i, q]), Complex64::new(0.0, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tt_to_kt_full_column_count_and_value() {
        let mut r = rng(53);
        let t = crate::test_util::random_tensor::<f64>(&[4, 3, 4, 3], &mut r);
        let tt = tt_svd(
            &t,
            &TTOptions {
                max_rank: Some(3),
                rel_error: None,
            },
        )
        .unwrap();
        let ranks = tt.ranks();
        let expect: usize = ranks[1..4].iter().product();
        let kt = tt_to_kt_full(&tt).unwrap();
        assert_eq!(kt.rank(), expect);
        let err = rel_err(&kt.full().unwrap(), &tt.full().unwrap());
        assert!(err < 1e-12, "lemma-2 roundtrip error {err}");
    }

    #[test]
    fn tt_to_kt_full_rejects_huge_rank_products() {
        // 40^4 columns blow the cap without materializing anything
        let cores: Vec<DenseTensor<f64>> = vec![
            DenseTensor::zeros(vec![1, 5, 40]),
            DenseTensor::zeros(vec![40, 5, 40]),
            DenseTensor::zeros(vec![40, 5, 40]),
            DenseTensor::zeros(vec![40, 5, 40]),
            DenseTensor::zeros(vec![40, 5, 1]),
        ];
        let tt = TTTensor::new(cores).unwrap();
        assert!(matches!(
            tt_to_kt_full(&tt),
            Err(Error::ColumnCapExceeded { .. })
        ));
    }

    #[test]
    fn match_permutation_examples() {
        let m = array![[2.0, 0.0], [0.0, -3.0]];
        let ps = match_permutation(&m).unwrap();
        assert_eq!(ps.perm, vec![0, 1]);
        assert_eq!(ps.gamma, vec![2.0, -3.0]);
        assert!(ps.residual < 1e-15);

        let m = array![[0.0, 5.0], [4.0, 0.0]];
        let ps = match_permutation(&m).unwrap();
        assert_eq!(ps.perm, vec![1, 0]);
        assert_eq!(ps.gamma, vec![5.0, 4.0]);
    }

    #[test]
    fn match_permutation_recovers_noisy_monomials() {
        let mut r = rng(54);
        for _ in 0..100 {
            let n = 5;
            // random permutation by sorting random keys
            let keys = random_matrix::<f64>(n, 1, &mut r);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| keys[[a, 0]].partial_cmp(&keys[[b, 0]]).unwrap());
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                // scales bounded away from zero
                let g = 1.0 + keys[[i, 0]].abs();
                m[[i, order[i]]] = if i % 2 == 0 { g } else { -g };
            }
            let noise = random_matrix::<f64>(n, n, &mut r);
            let noisy = &m + &noise.mapv(|x| 1e-3 * x);
            let ps = match_permutation(&noisy).unwrap();
            assert_eq!(ps.perm, order);
        }
    }

    #[test]
    fn exact_conversion_all_interior() {
        let mut r = rng(55);
        let kt = random_kruskal::<f64>(&[5, 5, 5, 5, 5], 5, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        let conv = tt_to_cp_exact(&tt, 5, &Cpd3Options::default()).unwrap();
        let err = rel_err(&conv.ktensor.full().unwrap(), &kt.full().unwrap());
        assert!(err < 1e-6, "exact conversion error {err}");
        assert!(!conv.low_confidence, "residual {}", conv.max_repair_residual);
    }

    #[test]
    fn exact_conversion_rank_above_dimension() {
        let mut r = rng(56);
        let kt = random_kruskal::<f64>(&[5, 5, 5, 5, 5], 10, &mut r);
        let full = kt.full().unwrap();
        let tt = tt_svd(
            &full,
            &TTOptions {
                max_rank: Some(10),
                rel_error: None,
            },
        )
        .unwrap();
        // TT-SVD yields the boundary profile (1, 5, 10, 10, 5, 1)
        assert_eq!(tt.ranks(), vec![1, 5, 10, 10, 5, 1]);
        let conv = tt_to_cp_exact(&tt, 10, &Cpd3Options::default()).unwrap();
        let err = rel_err(&conv.ktensor.full().unwrap(), &full);
        assert!(err < 1e-6, "over-dimension conversion error {err}");
    }

    #[test]
    fn exact_conversion_order_three() {
        let mut r = rng(57);
        let kt = random_kruskal::<f64>(&[6, 5, 6], 4, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        let conv = tt_to_cp_exact(&tt, 4, &Cpd3Options::default()).unwrap();
        let err = rel_err(&conv.ktensor.full().unwrap(), &kt.full().unwrap());
        assert!(err < 1e-6, "order-3 conversion error {err}");
    }

    #[test]
    fn sequential_conversion_matches_ground_truth() {
        let mut r = rng(58);
        // order-6, extent 4, rank 3 over the reals
        let kt = random_kruskal::<f64>(&[4, 4, 4, 4, 4, 4], 3, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        let got = tt_to_cp_sequential(&tt, 3, &Cpd3Options::default()).unwrap();
        let err = rel_err(&got.full().unwrap(), &kt.full().unwrap());
        assert!(err < 1e-6, "sequential conversion error {err}");

        // complex order-5
        let kt = random_kruskal::<Complex64>(&[4, 3, 4, 3, 4], 3, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        let got = tt_to_cp_sequential(&tt, 3, &Cpd3Options::default()).unwrap();
        let err = rel_err(&got.full().unwrap(), &kt.full().unwrap());
        assert!(err < 1e-6, "complex sequential conversion error {err}");
    }

    #[test]
    fn exact_and_sequential_agree() {
        let mut r = rng(59);
        let kt = random_kruskal::<f64>(&[4, 4, 4, 4], 3, &mut r);
        let tt = kt_to_tt(&kt).unwrap();
        let a = tt_to_cp_exact(&tt, 3, &Cpd3Options::default())
            .unwrap()
            .ktensor;
        let b = tt_to_cp_sequential(&tt, 3, &Cpd3Options::default()).unwrap();
        let err = rel_err(&a.full().unwrap(), &b.full().unwrap());
        assert!(err < 1e-6, "methods disagree by {err}");
    }
}
