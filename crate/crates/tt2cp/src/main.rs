//! `tt2cp` — CP decomposition of dense tensors through a tensor-train:
//! compress with TT-SVD, convert the train to Kruskal form, polish with
//! TT-constrained ALS. Subcommands run Monte-Carlo experiment grids from a
//! JSON config, the Hilbert-tensor approximation study, or a one-shot
//! decomposition of a TNSR file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tt2cp::bench::{hilbert_tensor, run_experiment, write_csv, ExperimentConfig, MetricRow};
use tt2cp::convert::{tt_to_cp_exact, tt_to_cp_sequential};
use tt2cp::fit::{fit_tt2cp, FitOptions};
use tt2cp::io::{load_dense, save_dense};
use tt2cp::tensor::DenseTensor;
use tt2cp::tt::{tt_svd, TTOptions};
use tt2cp::{KruskalTensor, Result};

#[derive(Parser)]
#[command(name = "tt2cp", version, about = "CP tensor decomposition via tensor-train compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment grid described by a JSON config.
    Run {
        /// Path to an ExperimentConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output` field).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Approximate the order-N Hilbert tensor at a given CP rank.
    Hilbert {
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Extent of every mode.
        #[arg(long, default_value_t = 20)]
        dim: usize,
        #[arg(long, default_value_t = 7)]
        rank: usize,
        #[arg(long, default_value_t = 5000)]
        max_sweeps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Decompose a dense TNSR file into a rank-R Kruskal tensor.
    Decompose {
        /// Input dense tensor in TNSR format (f64).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = Method::Fit)]
        method: Method,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Sequential,
    Fit,
}

/// Write the factors and weights of a model under `<dir>/ktensor/`.
fn save_ktensor_dir(dir: &Path, kt: &KruskalTensor<f64>) -> Result<()> {
    let kdir = dir.join("ktensor");
    fs::create_dir_all(&kdir)?;
    for (n, f) in kt.factors().iter().enumerate() {
        let path = kdir.join(format!("factor_{}.tnsr", n + 1));
        save_dense(&path, &DenseTensor::from_matrix(f))?;
    }
    let weights = json!({ "weights": kt.weights().to_vec() });
    fs::write(kdir.join("weights.json"), serde_json::to_string_pretty(&weights)?)?;
    Ok(())
}

fn summarize(rows: &[MetricRow]) -> serde_json::Value {
    // mean metrics per (snr, algorithm) cell, skipping sentinel rows
    let mut cells: Vec<(f64, String)> = rows
        .iter()
        .map(|r| (r.snr_db, r.algorithm.clone()))
        .collect();
    cells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cells.dedup();
    let summary: Vec<serde_json::Value> = cells
        .into_iter()
        .map(|(snr, alg)| {
            let sel: Vec<&MetricRow> = rows
                .iter()
                .filter(|r| r.snr_db == snr && r.algorithm == alg && r.rel_error.is_finite())
                .collect();
            let failed = rows
                .iter()
                .filter(|r| r.snr_db == snr && r.algorithm == alg && !r.rel_error.is_finite())
                .count();
            let mean = |f: &dyn Fn(&MetricRow) -> f64| -> f64 {
                if sel.is_empty() {
                    f64::NAN
                } else {
                    sel.iter().map(|r| f(r)).sum::<f64>() / sel.len() as f64
                }
            };
            json!({
                "snr_db": if snr.is_finite() { json!(snr) } else { json!("inf") },
                "algorithm": alg,
                "trials": sel.len(),
                "failed": failed,
                "mean_msae_db": mean(&|r| r.msae_db),
                "mean_rel_error": mean(&|r| r.rel_error),
                "mean_wall_time_s": mean(&|r| r.wall_time_s),
            })
        })
        .collect();
    json!(summary)
}

fn cmd_run(config: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(&config)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    let out = output
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;

    let rows = run_experiment(&cfg)?;
    write_csv(out.join("metrics.csv"), &rows)?;
    let report = json!({
        "config": cfg,
        "rows": rows.len(),
        "summary": summarize(&rows),
    });
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_hilbert(
    order: usize,
    dim: usize,
    rank: usize,
    max_sweeps: usize,
    output: Option<PathBuf>,
) -> Result<()> {
    let t = hilbert_tensor(order, dim);
    let tt = tt_svd(
        &t,
        &TTOptions {
            max_rank: Some(rank),
            rel_error: None,
        },
    )?;
    let opts = FitOptions {
        max_sweeps,
        tol: 1e-16,
        ..FitOptions::default()
    };
    let (kt, report) = fit_tt2cp(&tt, rank, &opts)?;
    let rel = kt.full()?.sub(&t)?.fro_norm() / t.fro_norm();
    println!(
        "hilbert order {order} dim {dim} rank {rank}: rel error {rel:.3e} after {} sweeps ({:?})",
        report.sweeps, report.termination
    );
    if let Some(out) = output {
        fs::create_dir_all(&out)?;
        let doc = json!({
            "order": order, "dim": dim, "rank": rank,
            "rel_error": rel,
            "fit": report,
        });
        fs::write(out.join("report.json"), serde_json::to_string_pretty(&doc)?)?;
        save_ktensor_dir(&out, &kt)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_decompose(
    input: PathBuf,
    rank: usize,
    method: Method,
    output: PathBuf,
    max_sweeps: usize,
) -> Result<()> {
    let t = load_dense::<f64>(&input)?;
    let tt = tt_svd(
        &t,
        &TTOptions {
            max_rank: Some(rank),
            rel_error: None,
        },
    )?;
    let (kt, detail) = match method {
        Method::Exact => {
            let conv = tt_to_cp_exact(&tt, rank, &Default::default())?;
            let detail = json!({
                "method": "exact",
                "low_confidence": conv.low_confidence,
                "max_repair_residual": conv.max_repair_residual,
            });
            (conv.ktensor, detail)
        }
        Method::Sequential => {
            let kt = tt_to_cp_sequential(&tt, rank, &Default::default())?;
            (kt, json!({ "method": "sequential" }))
        }
        Method::Fit => {
            let opts = FitOptions {
                max_sweeps,
                ..FitOptions::default()
            };
            let (kt, report) = fit_tt2cp(&tt, rank, &opts)?;
            (kt, json!({ "method": "fit", "fit": report }))
        }
    };
    let rel = kt.full()?.sub(&t)?.fro_norm() / t.fro_norm();
    fs::create_dir_all(&output)?;
    let doc = json!({
        "input": input.display().to_string(),
        "shape": t.shape(),
        "rank": rank,
        "tt_ranks": tt.ranks(),
        "rel_error": rel,
        "detail": detail,
    });
    fs::write(output.join("report.json"), serde_json::to_string_pretty(&doc)?)?;
    save_ktensor_dir(&output, &kt)?;
    println!("rank-{rank} model: rel error {rel:.3e}; wrote {}", output.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => cmd_run(config, output),
        Command::Hilbert {
            order,
            dim,
            rank,
            max_sweeps,
            output,
        } => cmd_hilbert(order, dim, rank, max_sweeps, output),
        Command::Decompose {
            input,
            rank,
            method,
            output,
            max_sweeps,
        } => cmd_decompose(input, rank, method, output, max_sweeps),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
