//! Benchmark harness: synthetic problem generators, angular-error metrics
//! and the Monte-Carlo experiment driver behind the `tt2cp` CLI.
//!
//! The quality metric is the squared angular error in decibels,
//!
//! ```text
//!   SAE(x, xhat) = -20 log10 arccos( |<x, xhat>| / (|x| |xhat|) )
//! ```
//!
//! taken with the magnitude of the cosine so it is invariant to sign and
//! phase; MSAE averages the per-column SAE of a factor matrix after a
//! one-to-one column matching. An experiment runs the three-stage pipeline
//! (TT-SVD compression, TT-to-CP conversion, CP fitting on the TT) over
//! noisy trials and emits one CSV row per algorithm per trial.

use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpd3::{cp_als, random_factors, CpAlsOptions};
use crate::convert::{tt_to_cp_exact, tt_to_cp_sequential};
use crate::error::{Error, Result};
use crate::fit::{fit_tt2cp, FitInit, FitOptions};
use crate::kruskal::KruskalTensor;
use crate::scalar::Field;
use crate::tensor::DenseTensor;
use crate::tt::{tt_svd, TTOptions};

/// SAE is capped here: an exact match has zero angle and infinite SAE.
pub const SAE_CAP_DB: f64 = 300.0;

/// Element-count gate above which the dense ALS baseline is skipped.
pub const DENSE_BASELINE_MAX_ELEMENTS: usize = 10_000_000;

/// A random Kruskal tensor with independent standard-normal factor entries,
/// normalized to unit factor columns. Deterministic under `seed`.
pub fn gen_random_kt<S: Field>(
    extents: &[usize],
    rank: usize,
    seed: u64,
) -> Result<KruskalTensor<S>> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kt = KruskalTensor::from_factors(random_factors::<S>(extents, rank, &mut rng))?;
    kt.normalize()?;
    Ok(kt)
}

/// Add i.i.d. Gaussian noise scaled after sampling so that
/// `10 log10(|y|^2 / |e|^2)` equals `snr_db` exactly. An infinite `snr_db`
/// returns the input unchanged.
pub fn add_noise<S: Field>(y: &DenseTensor<S>, snr_db: f64, seed: u64) -> Result<DenseTensor<S>> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(y.clone());
    }
    let norm_y = y.fro_norm();
    if norm_y == 0.0 {
        return Err(Error::ZeroNorm("cannot add relative noise to zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e: Vec<S> = (0..y.len()).map(|_| S::sample_standard(&mut rng)).collect();
    let norm_e = e.iter().map(|x| x.square()).sum::<f64>().sqrt();
    let scale = norm_y / (norm_e * 10f64.powf(snr_db / 20.0));
    for v in &mut e {
        *v = v.scale(scale);
    }
    let data = y
        .data()
        .iter()
        .zip(e.iter())
        .map(|(&a, &b)| a + b)
        .collect();
    DenseTensor::new(y.shape().to_vec(), data)
}

fn cos_abs<S: Field>(x: &[S], xhat: &[S]) -> Result<f64> {
    let nx = x.iter().map(|v| v.square()).sum::<f64>().sqrt();
    let ny = xhat.iter().map(|v| v.square()).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm("zero vector in angular error".into()));
    }
    let inner = x
        .iter()
        .zip(xhat.iter())
        .fold(num_complex::Complex64::new(0.0, 0.0), |acc, (&a, &b)| {
            acc + a.to_c64() * b.to_c64().conj()
        });
    Ok((inner.norm() / (nx * ny)).min(1.0))
}

fn sae_from_cos(c: f64) -> f64 {
    let angle = c.clamp(-1.0, 1.0).acos();
    if angle <= 0.0 {
        return SAE_CAP_DB;
    }
    (-20.0 * angle.log10()).min(SAE_CAP_DB)
}

/// Squared angular error in dB between two vectors, sign/phase invariant
/// and capped at [`SAE_CAP_DB`].
pub fn sae<S: Field>(x: &Array1<S>, xhat: &Array1<S>) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::ShapeMismatch(format!(
            "sae: lengths {} vs {}",
            x.len(),
            xhat.len()
        )));
    }
    Ok(sae_from_cos(cos_abs(
        x.as_slice().unwrap(),
        xhat.as_slice().unwrap(),
    )?))
}

/// SAE between two same-shape dense tensors, treated as long vectors.
pub fn sae_dense<S: Field>(x: &DenseTensor<S>, xhat: &DenseTensor<S>) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::ShapeMismatch(format!(
            "sae: shapes {:?} vs {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    Ok(sae_from_cos(cos_abs(x.data(), xhat.data())?))
}

/// Mean SAE over the columns of two factor matrices after greedy one-to-one
/// matching by maximal |cosine|.
pub fn msae<S: Field>(a: &Array2<S>, ahat: &Array2<S>) -> Result<f64> {
    let r = a.ncols();
    if r != ahat.ncols() || a.nrows() != ahat.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "msae: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            ahat.nrows(),
            ahat.ncols()
        )));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("msae of empty matrices".into()));
    }
    let mut cos = Array2::<f64>::zeros((r, r));
    for i in 0..r {
        let ci = a.column(i).to_owned();
        for j in 0..r {
            let cj = ahat.column(j).to_owned();
            cos[[i, j]] = cos_abs(ci.as_slice().unwrap(), cj.as_slice().unwrap())?;
        }
    }
    let mut row_used = vec![false; r];
    let mut col_used = vec![false; r];
    let mut total = 0.0f64;
    for _ in 0..r {
        let mut best = (0usize, 0usize, -1.0f64);
        for i in 0..r {
            if row_used[i] {
                continue;
            }
            for j in 0..r {
                if !col_used[j] && cos[[i, j]] > best.2 {
                    best = (i, j, cos[[i, j]]);
                }
            }
        }
        row_used[best.0] = true;
        col_used[best.1] = true;
        total += sae_from_cos(best.2);
    }
    Ok(total / r as f64)
}

/// Mean MSAE across all modes of two Kruskal tensors of equal shape/rank.
pub fn mean_msae<S: Field>(a: &KruskalTensor<S>, ahat: &KruskalTensor<S>) -> Result<f64> {
    if a.order() != ahat.order() {
        return Err(Error::ShapeMismatch(format!(
            "mean_msae: orders {} vs {}",
            a.order(),
            ahat.order()
        )));
    }
    let mut total = 0.0;
    for n in 0..a.order() {
        total += msae(a.factor(n), ahat.factor(n))?;
    }
    Ok(total / a.order() as f64)
}

/// The order-`n` Hilbert tensor with entries `1 / (i_1 + ... + i_N - N + 1)`
/// in 1-based indices.
pub fn hilbert_tensor(order: usize, extent: usize) -> DenseTensor<f64> {
    DenseTensor::from_fn(vec![extent; order], |idx| {
        let s: usize = idx.iter().sum(); // 0-based sum = 1-based sum - N
        1.0 / (s as f64 + 1.0)
    })
}

/// Multiway Hankel tensorization: `T(i_1, ..., i_N) = y(i_1 + ... + i_N - N + 1)`
/// in 1-based indices, requiring `sum(extents) - N + 1` samples. Exponential
/// signals map to rank-one tensors exactly.
pub fn hankel_tensorize<S: Field>(signal: &[S], extents: &[usize]) -> Result<DenseTensor<S>> {
    let n = extents.len();
    if n == 0 || extents.iter().any(|&e| e == 0) {
        return Err(Error::InvalidArgument(format!(
            "invalid extents {extents:?}"
        )));
    }
    let need: usize = extents.iter().sum::<usize>() - n + 1;
    if signal.len() != need {
        return Err(Error::ShapeMismatch(format!(
            "signal has {} samples, extents {extents:?} need {need}",
            signal.len()
        )));
    }
    Ok(DenseTensor::from_fn(extents.to_vec(), |idx| {
        signal[idx.iter().sum::<usize>()]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Recovery of a random normalized Kruskal tensor under additive noise.
    RandomCp,
    /// Rank-`R` approximation of the Hilbert tensor (noise-free).
    Hilbert,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub order: usize,
    pub extent: usize,
    pub rank: usize,
    /// TT-SVD bond-rank cap; defaults to `rank`.
    #[serde(default)]
    pub max_rank: Option<usize>,
    #[serde(default)]
    pub rel_error: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// SNR grid in dB; `null` entries mean noise-free.
    pub snr_db: Vec<Option<f64>>,
    pub trials: usize,
    pub seed: u64,
    /// Include the dense-ALS baseline (still gated on element count).
    #[serde(default = "default_true")]
    pub dense_baseline: bool,
    /// Directory for `metrics.csv` and `report.json`; defaults to the
    /// current directory.
    #[serde(default)]
    pub output: Option<std::path::PathBuf>,
}

fn default_max_sweeps() -> usize {
    200
}

fn default_tol() -> f64 {
    1e-12
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.order < 3 || self.extent == 0 || self.rank == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad problem size: order {}, extent {}, rank {}",
                self.order, self.extent, self.rank
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidArgument("empty SNR list".into()));
        }
        for s in &self.snr_db {
            if let Some(v) = s {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite SNR {v}; use null for noise-free"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One emitted measurement. Failed trials carry NaN metrics so a batch
/// never aborts on a single degenerate instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub trial: usize,
    /// `inf` for noise-free runs.
    pub snr_db: f64,
    pub algorithm: String,
    pub msae_db: f64,
    pub rel_error: f64,
    pub sweeps: usize,
    pub wall_time_s: f64,
}

fn sentinel_row(trial: usize, snr_db: f64, algorithm: &str) -> MetricRow {
    MetricRow {
        trial,
        snr_db,
        algorithm: algorithm.into(),
        msae_db: f64::NAN,
        rel_error: f64::NAN,
        sweeps: 0,
        wall_time_s: 0.0,
    }
}

fn rel_error(model: &KruskalTensor<f64>, reference: &DenseTensor<f64>) -> f64 {
    match model.full() {
        Ok(full) => match full.sub(reference) {
            Ok(diff) => diff.fro_norm() / reference.fro_norm(),
            Err(_) => f64::NAN,
        },
        Err(_) => f64::NAN,
    }
}

fn model_metrics(
    model: &KruskalTensor<f64>,
    truth: Option<&KruskalTensor<f64>>,
    clean: &DenseTensor<f64>,
) -> (f64, f64) {
    let msae_db = match truth {
        Some(t) => mean_msae(t, model).unwrap_or(f64::NAN),
        None => f64::NAN,
    };
    (msae_db, rel_error(model, clean))
}

/// Run the three-stage pipeline for one noisy instance, returning rows for
/// the conversion output ("convert"), the fitted output ("fit") and, when
/// enabled and small enough, the dense ALS baseline ("dense_als").
fn run_trial(cfg: &ExperimentConfig, trial: usize, snr: Option<f64>) -> Vec<MetricRow> {
    let snr_db = snr.unwrap_or(f64::INFINITY);
    let trial_seed = cfg.seed.wrapping_add(trial as u64);
    let extents = vec![cfg.extent; cfg.order];

    let (clean, truth): (DenseTensor<f64>, Option<KruskalTensor<f64>>) = match cfg.kind {
        ExperimentKind::RandomCp => {
            let kt = match gen_random_kt::<f64>(&extents, cfg.rank, trial_seed) {
                Ok(kt) => kt,
                Err(_) => return vec![sentinel_row(trial, snr_db, "convert")],
            };
            match kt.full() {
                Ok(full) => (full, Some(kt)),
                Err(_) => return vec![sentinel_row(trial, snr_db, "convert")],
            }
        }
        ExperimentKind::Hilbert => (hilbert_tensor(cfg.order, cfg.extent), None),
    };
    let data = match add_noise(&clean, snr_db, trial_seed ^ 0x5eed_0000) {
        Ok(d) => d,
        Err(_) => return vec![sentinel_row(trial, snr_db, "convert")],
    };

    let mut rows = Vec::new();
    let tt_opts = TTOptions {
        max_rank: Some(cfg.max_rank.unwrap_or(cfg.rank)),
        rel_error: cfg.rel_error,
    };

    let start = Instant::now();
    let tt = match tt_svd(&data, &tt_opts) {
        Ok(tt) => tt,
        Err(_) => return vec![sentinel_row(trial, snr_db, "convert")],
    };
    let tt_time = start.elapsed().as_secs_f64();

    // Stage 2: structure-exploiting conversion, exact first
    let start = Instant::now();
    let converted = tt_to_cp_exact(&tt, cfg.rank, &Default::default())
        .map(|c| c.ktensor)
        .or_else(|_| tt_to_cp_sequential(&tt, cfg.rank, &Default::default()));
    let convert_time = tt_time + start.elapsed().as_secs_f64();
    let converted = match converted {
        Ok(kt) => {
            let (msae_db, rel) = model_metrics(&kt, truth.as_ref(), &clean);
            rows.push(MetricRow {
                trial,
                snr_db,
                algorithm: "convert".into(),
                msae_db,
                rel_error: rel,
                sweeps: 0,
                wall_time_s: convert_time,
            });
            Some(kt)
        }
        Err(_) => {
            rows.push(sentinel_row(trial, snr_db, "convert"));
            None
        }
    };

    // Stage 3: ALS on the TT, seeded by the conversion when it succeeded
    let start = Instant::now();
    let init = match &converted {
        Some(kt) => {
            let mut factors = kt.factors().to_vec();
            for (r, mut col) in factors[0].columns_mut().into_iter().enumerate() {
                col.mapv_inplace(|x| x * kt.weights()[r]);
            }
            FitInit::Given(factors)
        }
        None => FitInit::Random(trial_seed),
    };
    let fit_opts = FitOptions {
        max_sweeps: cfg.max_sweeps,
        tol: cfg.tol,
        init,
        ..FitOptions::default()
    };
    match fit_tt2cp(&tt, cfg.rank, &fit_opts) {
        Ok((kt, report)) => {
            let (msae_db, rel) = model_metrics(&kt, truth.as_ref(), &clean);
            rows.push(MetricRow {
                trial,
                snr_db,
                algorithm: "fit".into(),
                msae_db,
                rel_error: rel,
                sweeps: report.sweeps,
                wall_time_s: tt_time + start.elapsed().as_secs_f64(),
            });
        }
        Err(_) => rows.push(sentinel_row(trial, snr_db, "fit")),
    }

    // dense baseline: plain ALS on the materialized tensor
    if cfg.dense_baseline && data.len() <= DENSE_BASELINE_MAX_ELEMENTS {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed ^ 0xa15_0000);
        let init = random_factors::<f64>(data.shape(), cfg.rank, &mut rng);
        let als_opts = CpAlsOptions {
            max_iters: cfg.max_sweeps,
            tol: cfg.tol,
        };
        match cp_als(&data, init, &als_opts) {
            Ok((kt, report)) => {
                let (msae_db, rel) = model_metrics(&kt, truth.as_ref(), &clean);
                rows.push(MetricRow {
                    trial,
                    snr_db,
                    algorithm: "dense_als".into(),
                    msae_db,
                    rel_error: rel,
                    sweeps: report.iterations,
                    wall_time_s: start.elapsed().as_secs_f64(),
                });
            }
            Err(_) => rows.push(sentinel_row(trial, snr_db, "dense_als")),
        }
    }
    rows
}

/// Run all `trials x SNR` cells of an experiment concurrently (capped by the
/// `TT2CP_THREADS` environment variable) and return the rows in a
/// deterministic order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, Option<f64>)> = (0..cfg.trials)
        .flat_map(|t| cfg.snr_db.iter().map(move |&s| (t, s)))
        .collect();

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Ok(v) = std::env::var("TT2CP_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    builder = builder.num_threads(n);
                }
            }
        }
        builder
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
    };

    let results: Vec<Vec<MetricRow>> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(trial, snr)| run_trial(cfg, trial, snr))
            .collect()
    });
    Ok(results.into_iter().flatten().collect())
}

/// Write rows as CSV with a header line.
pub fn write_csv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())
        .map_err(|e| Error::InvalidArgument(format!("csv open: {e}")))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
