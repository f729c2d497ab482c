//! CP fitting constrained to a tensor-train: ALS sweeps whose normal
//! equations are assembled through TT contractions instead of dense
//! unfoldings.
//!
//! For a TT tensor `G` and a rank-`R` CP model with factors `A^(n)`, the
//! mode-`n` cross term `[G]_(n) (KR of other factors)*` equals
//!
//! ```text
//!   M_n = [G_n]_(2) (Psi>n (.) Psi<n)
//! ```
//!
//! with the boundary contractions defined by the recursions
//!
//! ```text
//!   Psi>N = 1^T,   Psi>n = [G_{n+1}]_(1) (Psi>(n+1) (.) A^(n+1)*)
//!   Psi<1 = 1^T,   Psi<n = [G_{n-1}]_(3) (A^(n-1)* (.) Psi<(n-1))
//! ```
//!
//! so one factor update costs `O(I R^3)` instead of `O(I^N R)`. A two-side
//! sweep (left-to-right then right-to-left) reuses each contraction across
//! updates, and the cost `0.5 |G - model|^2` comes for free right after an
//! update via `0.5 (|G|^2 - Re tr(A^(n)^H M_n))`.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convert::{tt_to_cp_exact, tt_to_cp_sequential};
use crate::cpd3::{maybe_ridge, random_factors, Cpd3Options};
use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::solve;
use crate::scalar::Field;
use crate::tensor::{column_norms, hadamard, khatri_rao, DenseTensor};
use crate::tt::TTTensor;

fn step_right<S: Field>(
    core: &DenseTensor<S>,
    factor: &Array2<S>,
    psi: &Array2<S>,
    conjugate: bool,
) -> Result<Array2<S>> {
    let f = if conjugate {
        factor.mapv(|x| x.conj())
    } else {
        factor.clone()
    };
    Ok(core.unfold(1)?.dot(&khatri_rao(psi, &f)?))
}

fn step_left<S: Field>(
    core: &DenseTensor<S>,
    factor: &Array2<S>,
    psi: &Array2<S>,
    conjugate: bool,
) -> Result<Array2<S>> {
    let f = if conjugate {
        factor.mapv(|x| x.conj())
    } else {
        factor.clone()
    };
    Ok(core.unfold(3)?.dot(&khatri_rao(&f, psi)?))
}

/// One step of the right-boundary recursion:
/// `Psi>n = [G_{n+1}]_(1) (Psi>(n+1) (.) A^(n+1)*)`, taking `G_{n+1}`,
/// `A^(n+1)` and `Psi>(n+1)` and returning the `R_n x R` matrix `Psi>n`.
pub fn psi_right_step<S: Field>(
    core: &DenseTensor<S>,
    factor: &Array2<S>,
    psi: &Array2<S>,
) -> Result<Array2<S>> {
    step_right(core, factor, psi, true)
}

/// One step of the left-boundary recursion:
/// `Psi<n = [G_{n-1}]_(3) (A^(n-1)* (.) Psi<(n-1))`, taking `G_{n-1}`,
/// `A^(n-1)` and `Psi<(n-1)` and returning the `R_{n-1} x R` matrix `Psi<n`.
pub fn psi_left_step<S: Field>(
    core: &DenseTensor<S>,
    factor: &Array2<S>,
    psi: &Array2<S>,
) -> Result<Array2<S>> {
    step_left(core, factor, psi, true)
}

/// Boundary contractions for every mode, indexed 1-based: `left[n]` holds
/// `Psi<n` and `right[n]` holds `Psi>n` (index 0 is unused). The constant
/// boundaries `Psi<1 = Psi>N = 1^T` are always present; the rest is filled
/// by the rebuild methods or incrementally during a sweep.
pub struct ContractionCache<S: Field> {
    pub left: Vec<Option<Array2<S>>>,
    pub right: Vec<Option<Array2<S>>>,
}

impl<S: Field> ContractionCache<S> {
    pub fn new(order: usize, rank: usize) -> Self {
        let mut left: Vec<Option<Array2<S>>> = vec![None; order + 1];
        let mut right: Vec<Option<Array2<S>>> = vec![None; order + 1];
        left[1] = Some(Array2::ones((1, rank)));
        right[order] = Some(Array2::ones((1, rank)));
        Self { left, right }
    }

    /// Recompute `Psi<n` for all `n` from the current factors.
    pub fn rebuild_left(&mut self, x: &TTTensor<S>, factors: &[Array2<S>]) -> Result<()> {
        let order = x.order();
        for n in 2..=order {
            let prev = self.left[n - 1].as_ref().expect("left chain is contiguous");
            let psi = psi_left_step(x.core(n - 2), &factors[n - 2], prev)?;
            self.left[n] = Some(psi);
        }
        Ok(())
    }

    /// Recompute `Psi>n` for all `n` from the current factors.
    pub fn rebuild_right(&mut self, x: &TTTensor<S>, factors: &[Array2<S>]) -> Result<()> {
        let order = x.order();
        for n in (1..order).rev() {
            let next = self.right[n + 1].as_ref().expect("right chain is contiguous");
            let psi = psi_right_step(x.core(n), &factors[n], next)?;
            self.right[n] = Some(psi);
        }
        Ok(())
    }
}

/// The mode-`n` cross term `M_n = [G_n]_(2) (Psi>n (.) Psi<n)`, equal to the
/// dense `[G]_(n) conj(KR of the other factors)`.
pub fn factor_mttkrp<S: Field>(
    core: &DenseTensor<S>,
    psi_right: &Array2<S>,
    psi_left: &Array2<S>,
) -> Result<Array2<S>> {
    Ok(core.unfold(2)?.dot(&khatri_rao(psi_right, psi_left)?))
}

/// The ALS cost `0.5 |G - model|^2` evaluated from the cross term alone.
/// Only valid immediately after the factor was updated from this `mttkrp`
/// (the normal equations then give `|model|^2 = Re tr(A^H M)`).
pub fn fast_cost<S: Field>(norm_sqr: f64, factor: &Array2<S>, mttkrp: &Array2<S>) -> f64 {
    let inner: f64 = factor
        .iter()
        .zip(mttkrp.iter())
        .map(|(&a, &m)| (a.conj() * m).to_c64().re)
        .sum();
    0.5 * (norm_sqr - inner)
}

/// The structured cross term `[G]_(n) (KR of other factors)` built through
/// the TT, with plain transposes throughout (no conjugation): for real data
/// this is the data term of the cost gradient `dD/dA^(n) = A^(n) Gamma - M`.
pub fn structured_gradient<S: Field>(
    x: &TTTensor<S>,
    factors: &[Array2<S>],
    mode: usize,
) -> Result<Array2<S>> {
    let order = x.order();
    if mode == 0 || mode > order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    if factors.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "{} factors for an order-{order} tensor",
            factors.len()
        )));
    }
    let rank = factors[0].ncols();
    let mut psi_r: Array2<S> = Array2::ones((1, rank));
    for k in (mode..order).rev() {
        psi_r = step_right(x.core(k), &factors[k], &psi_r, false)?;
    }
    let mut psi_l: Array2<S> = Array2::ones((1, rank));
    for n in 2..=mode {
        psi_l = step_left(x.core(n - 2), &factors[n - 2], &psi_l, false)?;
    }
    factor_mttkrp(x.core(mode - 1), &psi_r, &psi_l)
}

/// Initialization strategy for [`fit_tt2cp`].
#[derive(Debug, Clone)]
pub enum FitInit<S: Field> {
    /// Try the exact conversion, fall back to the sequential one, then to
    /// random factors.
    Staged,
    ExactConvert,
    SequentialConvert,
    Random(u64),
    Given(Vec<Array2<S>>),
}

#[derive(Debug, Clone)]
pub struct FitOptions<S: Field> {
    pub max_sweeps: usize,
    /// Stop when the half-sweep cost changes by less than `tol * |G|^2`
    /// between consecutive sweeps.
    pub tol: f64,
    pub init: FitInit<S>,
    /// Controls for the order-3 decompositions inside the conversion inits.
    pub cpd3: Cpd3Options,
}

impl<S: Field> Default for FitOptions<S> {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            tol: 1e-14,
            init: FitInit::Staged,
            cpd3: Cpd3Options::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxSweeps,
}

/// Outcome of a fit: the cost `0.5 |G - model|^2` after every half-sweep,
/// the initialization that was actually used, and whether any normal
/// equation needed regularization.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub cost_trace: Vec<f64>,
    pub sweeps: usize,
    pub termination: Termination,
    pub final_rel_error: f64,
    pub regularized: bool,
    pub init: String,
}

fn gram<S: Field>(f: &Array2<S>) -> Array2<S> {
    f.mapv(|x| x.conj()).t().dot(f)
}

fn gamma_excluding<S: Field>(grams: &[Array2<S>], skip: usize, rank: usize) -> Result<Array2<S>> {
    let mut g: Array2<S> = Array2::ones((rank, rank));
    for (k, gr) in grams.iter().enumerate() {
        if k != skip {
            g = hadamard(&g, gr)?;
        }
    }
    Ok(g)
}

/// Rescale every factor column to unit norm, folding the accumulated scale
/// into the factor at `target` (0-based). Zero columns are left untouched.
fn normalize_into<S: Field>(factors: &mut [Array2<S>], target: usize) {
    let rank = factors[0].ncols();
    let mut scales = vec![1.0f64; rank];
    for (k, f) in factors.iter_mut().enumerate() {
        if k == target {
            continue;
        }
        let norms = column_norms(f);
        for (r, mut col) in f.columns_mut().into_iter().enumerate() {
            if norms[r] > 0.0 {
                col.mapv_inplace(|x| x.scale(1.0 / norms[r]));
                scales[r] *= norms[r];
            }
        }
    }
    for (r, mut col) in factors[target].columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|x| x.scale(scales[r]));
    }
}

fn kt_into_factors<S: Field>(kt: KruskalTensor<S>) -> Vec<Array2<S>> {
    let weights = kt.weights().clone();
    let mut factors = kt.factors().to_vec();
    for (r, mut col) in factors[0].columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|x| x.scale(weights[r]));
    }
    factors
}

fn initial_factors<S: Field>(
    x: &TTTensor<S>,
    rank: usize,
    opts: &FitOptions<S>,
) -> Result<(Vec<Array2<S>>, String)> {
    let extents = x.extents();
    match &opts.init {
        FitInit::Given(factors) => {
            if factors.len() != x.order() {
                return Err(Error::ShapeMismatch(format!(
                    "{} initial factors for an order-{} tensor",
                    factors.len(),
                    x.order()
                )));
            }
            for (n, f) in factors.iter().enumerate() {
                if f.nrows() != extents[n] || f.ncols() != rank {
                    return Err(Error::ShapeMismatch(format!(
                        "initial factor {} is {}x{}, expected {}x{rank}",
                        n + 1,
                        f.nrows(),
                        f.ncols(),
                        extents[n]
                    )));
                }
            }
            Ok((factors.clone(), "given".into()))
        }
        FitInit::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((random_factors::<S>(&extents, rank, &mut rng), "random".into()))
        }
        FitInit::ExactConvert => {
            let conv = tt_to_cp_exact(x, rank, &opts.cpd3)?;
            Ok((kt_into_factors(conv.ktensor), "exact_convert".into()))
        }
        FitInit::SequentialConvert => {
            let kt = tt_to_cp_sequential(x, rank, &opts.cpd3)?;
            Ok((kt_into_factors(kt), "sequential_convert".into()))
        }
        FitInit::Staged => {
            if let Ok(conv) = tt_to_cp_exact(x, rank, &opts.cpd3) {
                return Ok((kt_into_factors(conv.ktensor), "exact_convert".into()));
            }
            if let Ok(kt) = tt_to_cp_sequential(x, rank, &opts.cpd3) {
                return Ok((kt_into_factors(kt), "sequential_convert".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.cpd3.seed);
            Ok((random_factors::<S>(&extents, rank, &mut rng), "random".into()))
        }
    }
}

/// Fit a rank-`rank` CP model to a TT tensor by two-side ALS sweeps.
///
/// Every sweep runs left-to-right over modes `1..N-1` and right-to-left over
/// `N..2`; each half-sweep ends with a cost sample and a renormalization
/// that folds the column scales into the factor updated last. The
/// contraction caches are rebuilt on the side the renormalization
/// invalidated, keeping the per-sweep cost at `O(N I R^3)`.
pub fn fit_tt2cp<S: Field>(
    x: &TTTensor<S>,
    rank: usize,
    opts: &FitOptions<S>,
) -> Result<(KruskalTensor<S>, FitReport)> {
    let order = x.order();
    if order < 3 {
        return Err(Error::InvalidArgument(format!(
            "fit_tt2cp needs order >= 3, got {order}"
        )));
    }
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm("cannot fit a zero tensor".into()));
    }
    let norm_sqr = norm * norm;

    let (mut factors, init_used) = initial_factors(x, rank, opts)?;
    let mut grams: Vec<Array2<S>> = factors.iter().map(gram).collect();
    let mut cache = ContractionCache::new(order, rank);
    cache.rebuild_right(x, &factors)?;

    let mut cost_trace: Vec<f64> = Vec::new();
    let mut regularized = false;
    let mut sweeps = 0usize;
    let mut termination = Termination::MaxSweeps;

    for sweep in 0..opts.max_sweeps {
        sweeps = sweep + 1;

        // left-to-right half-sweep over modes 1..N-1
        let mut last_m: Option<Array2<S>> = None;
        for n in 1..order {
            let psi_r = cache.right[n].as_ref().expect("right cache valid in L2R");
            let psi_l = cache.left[n].as_ref().expect("left cache valid in L2R");
            let m = factor_mttkrp(x.core(n - 1), psi_r, psi_l)?;
            let gamma = gamma_excluding(&grams, n - 1, rank)?;
            let gamma = maybe_ridge(gamma, &mut regularized)?;
            // A Gamma^T = M  =>  Gamma A^T = M^T (Gamma is Hermitian)
            let a = solve(gamma.view(), m.t())?.t().to_owned();
            grams[n - 1] = gram(&a);
            factors[n - 1] = a;
            let psi_l = cache.left[n].as_ref().unwrap();
            cache.left[n + 1] = Some(psi_left_step(x.core(n - 1), &factors[n - 1], psi_l)?);
            last_m = Some(m);
        }
        cost_trace.push(fast_cost(
            norm_sqr,
            &factors[order - 2],
            last_m.as_ref().unwrap(),
        ));
        normalize_into(&mut factors, order - 2);
        for (k, f) in factors.iter().enumerate() {
            grams[k] = gram(f);
        }
        // the rescale stales Psi<; Psi> is rebuilt incrementally below
        cache.rebuild_left(x, &factors)?;

        // right-to-left half-sweep over modes N..2
        let mut last_m: Option<Array2<S>> = None;
        for n in (2..=order).rev() {
            let psi_r = cache.right[n].as_ref().expect("right cache valid in R2L");
            let psi_l = cache.left[n].as_ref().expect("left cache valid in R2L");
            let m = factor_mttkrp(x.core(n - 1), psi_r, psi_l)?;
            let gamma = gamma_excluding(&grams, n - 1, rank)?;
            let gamma = maybe_ridge(gamma, &mut regularized)?;
            let a = solve(gamma.view(), m.t())?.t().to_owned();
            grams[n - 1] = gram(&a);
            factors[n - 1] = a;
            let psi_r = cache.right[n].as_ref().unwrap();
            cache.right[n - 1] = Some(psi_right_step(x.core(n - 1), &factors[n - 1], psi_r)?);
            last_m = Some(m);
        }
        cost_trace.push(fast_cost(norm_sqr, &factors[1], last_m.as_ref().unwrap()));
        normalize_into(&mut factors, 1);
        for (k, f) in factors.iter().enumerate() {
            grams[k] = gram(f);
        }
        cache.rebuild_right(x, &factors)?;

        if sweep > 0 {
            let len = cost_trace.len();
            let prev = cost_trace[len - 3];
            let cur = cost_trace[len - 1];
            if (prev - cur).abs() < opts.tol * norm_sqr {
                termination = Termination::Converged;
                break;
            }
        }
    }

    let final_cost = cost_trace.last().copied().unwrap_or(0.5 * norm_sqr);
    let final_rel_error = (2.0 * final_cost).max(0.0).sqrt() / norm;

    let mut kt = KruskalTensor::from_factors(factors)?;
    kt.normalize()?;
    Ok((
        kt,
        FitReport {
            cost_trace,
            sweeps,
            termination,
            final_rel_error,
            regularized,
            init: init_used,
        },
    ))
}
