//! `bqq` — quantize matrices, sweep trade-off curves, and inspect the
//! error-bound and inference-cost models from the command line.

mod input;
mod sweep;

use anyhow::{bail, Context, Result};
use bqq_core::amfd::AnnealParams;
use bqq_core::bqq::{bqq_quantize_with_dim, dequantize, error_upper_bound, inference_cost, CostWeights};
use bqq_core::codec::{decode_code, encode_code};
use bqq_core::io::{rawmat, text, tsplib};
use bqq_core::matrix::{destandardize, mse, standardize, DenseMatrix};
use bqq_core::method::{dequantize_any, footprint_any, quantize_grouped, MethodKind, MethodSpec};
use bqq_core::synth::{gen_gaussian, gen_lowrank_noise, gen_random_cities};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use input::{load_matrix, InputFormat};

#[derive(Parser)]
#[command(
    name = "bqq",
    version,
    about = "Matrix quantization benchmark toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a matrix with one method and write the serialized code.
    Quantize(QuantizeArgs),
    /// Reconstruct a matrix from a serialized code.
    Dequantize(DequantizeArgs),
    /// Run a config-driven trade-off sweep and emit CSV and JSON tables.
    Sweep(SweepArgs),
    /// Print the one-stack error upper bound next to the achieved error.
    Bound(BoundArgs),
    /// Print the inference-cost comparison for a layer shape.
    Cost(CostArgs),
    /// Generate synthetic inputs (matrices or city instances) to files.
    Gen(GenArgs),
}

/// Errors that should exit with the usage status (2) instead of 1.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

#[derive(Args)]
struct AnnealArgs {
    /// Annealing steps per stack.
    #[arg(long, default_value_t = AnnealParams::default().n_step)]
    steps: usize,
    #[arg(long, default_value_t = AnnealParams::default().t_init)]
    t_init: f64,
    #[arg(long, default_value_t = AnnealParams::default().t_fin)]
    t_fin: f64,
    #[arg(long, default_value_t = AnnealParams::default().eta)]
    eta: f64,
    #[arg(long, default_value_t = AnnealParams::default().zeta)]
    zeta: f64,
}

impl AnnealArgs {
    fn to_params(&self) -> Result<AnnealParams> {
        let params = AnnealParams {
            t_init: self.t_init,
            t_fin: self.t_fin,
            n_step: self.steps,
            eta: self.eta,
            zeta: self.zeta,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args)]
struct QuantizeArgs {
    /// Input matrix file.
    input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: MethodKind,
    /// Output path for the serialized code.
    #[arg(short, long)]
    output: PathBuf,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    /// Standardize to zero mean and unit variance before quantizing.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bits charged per stored scalar in the footprint report.
    #[arg(long, default_value_t = 32)]
    scalar_bits: u32,

    /// Bit width (uq, svd-uq).
    #[arg(long, default_value_t = 2)]
    bits: u32,
    /// Stacks (bqq) or rounds (bcq).
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Rank (svd, svd-uq).
    #[arg(long)]
    rank: Option<usize>,
    /// Vector length (vq, vq-uq).
    #[arg(long, default_value_t = 8)]
    vec_dim: usize,
    /// Codebook size (vq, vq-uq).
    #[arg(long, default_value_t = 256)]
    k: usize,
    /// Codebook bit width (vq-uq).
    #[arg(long, default_value_t = 2)]
    centroid_bits: u32,
    /// Residual rounds (e8).
    #[arg(long, default_value_t = 1)]
    n_bits: usize,
    /// Scale bit width (e8).
    #[arg(long, default_value_t = 2)]
    scale_bits: u32,
    /// Grid divisions for UQ searches.
    #[arg(long, default_value_t = 100)]
    n_split: usize,
    /// Intermediate-dimension scale (bqq).
    #[arg(long, default_value_t = 1.0)]
    l_scale: f64,

    #[command(flatten)]
    anneal: AnnealArgs,

    /// Group-wise quantization tile height (defaults to the full matrix).
    #[arg(long)]
    group_rows: Option<usize>,
    /// Group-wise quantization tile width.
    #[arg(long)]
    group_cols: Option<usize>,
}

#[derive(Args)]
struct DequantizeArgs {
    /// Serialized code file.
    code: PathBuf,
    /// Output matrix path (.rawmat or .csv).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
    #[arg(short, long)]
    output: PathBuf,
    /// Emit only one of the two tables.
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(clap::ValueEnum, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct BoundArgs {
    /// Input matrix file.
    input: PathBuf,
    /// Intermediate dimension for the bound and the BQQ run.
    #[arg(long)]
    l: usize,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    anneal: AnnealArgs,
}

#[derive(Args)]
struct CostArgs {
    /// Weight matrix rows.
    m: usize,
    /// Weight matrix columns.
    n: usize,
    /// BQQ intermediate dimension.
    l: usize,
    /// Input batch width.
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    w_and: f64,
    #[arg(long, default_value_t = 1.0)]
    w_add: f64,
    #[arg(long, default_value_t = 1.0)]
    w_mul: f64,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
}

#[derive(Subcommand)]
enum GenCommand {
    /// I.i.d. standard Gaussian matrix.
    Gaussian {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sum of random rank-1 terms plus Gaussian noise.
    Lowrank {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Random EUC_2D city instance (TSPLIB text).
    Cities {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_method(s: &str) -> std::result::Result<MethodKind, String> {
    s.parse::<MethodKind>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Quantize(args) => cmd_quantize(args),
        Command::Dequantize(args) => cmd_dequantize(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Cost(args) => cmd_cost(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

// ---------------------------------------------------------------------------
// quantize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct QuantizeSummary {
    method: &'static str,
    params: String,
    shape: [usize; 2],
    seed: u64,
    standardized: bool,
    group_rows: Option<usize>,
    group_cols: Option<usize>,
    memory_bits: u64,
    kilobytes: f64,
    /// MSE against the original input, recomputed from the serialized code.
    mse: f64,
    /// MSE in standardized units, when standardization was applied.
    mse_standardized: Option<f64>,
    output: String,
}

fn build_method_spec(args: &QuantizeArgs) -> Result<MethodSpec> {
    Ok(match args.method {
        MethodKind::Bqq => MethodSpec::Bqq {
            p: args.p,
            l_scale: args.l_scale,
            anneal: args.anneal.to_params()?,
        },
        MethodKind::Uq => MethodSpec::Uq {
            bits: args.bits,
            n_split: args.n_split,
        },
        MethodKind::Bcq => MethodSpec::Bcq { p: args.p },
        MethodKind::Svd => MethodSpec::Svd {
            rank: args
                .rank
                .ok_or_else(|| UsageError("--rank is required for method 'svd'".into()))?,
        },
        MethodKind::SvdUq => MethodSpec::SvdUq {
            rank: args
                .rank
                .ok_or_else(|| UsageError("--rank is required for method 'svd-uq'".into()))?,
            bits: args.bits,
            n_split: args.n_split,
        },
        MethodKind::Vq => MethodSpec::Vq {
            vec_dim: args.vec_dim,
            k: args.k,
            centroid_bits: None,
        },
        MethodKind::VqUq => MethodSpec::Vq {
            vec_dim: args.vec_dim,
            k: args.k,
            centroid_bits: Some(args.centroid_bits),
        },
        MethodKind::E8 => MethodSpec::E8 {
            n_bits: args.n_bits,
            scale_bits: Some(args.scale_bits),
        },
    })
}

fn cmd_quantize(args: QuantizeArgs) -> Result<()> {
    let original = load_matrix(&args.input, args.input_format)?;
    let spec = build_method_spec(&args)?;

    let (work, record) = if args.standardize {
        let (standardized, record) = standardize(&original);
        (standardized, Some(record))
    } else {
        (original.clone(), None)
    };

    let group_rows = args.group_rows.unwrap_or(work.rows());
    let group_cols = args.group_cols.unwrap_or(work.cols());
    let code = quantize_grouped(&spec, &work, group_rows, group_cols, args.seed)?;

    let bytes = encode_code(&code, record.as_ref());
    std::fs::write(&args.output, &bytes)
        .with_context(|| format!("writing {}", args.output.display()))?;

    // Report the error of what was actually stored: decode the bytes back.
    let (decoded, decoded_record) = decode_code(&bytes)?;
    let reconstructed = dequantize_any(&decoded);
    let final_matrix = match &decoded_record {
        Some(rec) => destandardize(&reconstructed, rec),
        None => reconstructed.clone(),
    };
    let mse_original = mse(&original, &final_matrix)?;
    let mse_standardized = if args.standardize {
        Some(mse(&work, &reconstructed)?)
    } else {
        None
    };
    let footprint = footprint_any(&decoded, args.scalar_bits);

    let summary = QuantizeSummary {
        method: spec.id(),
        params: spec.params_string(),
        shape: [original.rows(), original.cols()],
        seed: args.seed,
        standardized: args.standardize,
        group_rows: args.group_rows,
        group_cols: args.group_cols,
        memory_bits: footprint.total_bits(),
        kilobytes: footprint.kilobytes(),
        mse: mse_original,
        mse_standardized,
        output: args.output.display().to_string(),
    };
    let rendered = serde_json::to_string_pretty(&summary)?;
    match &args.summary {
        Some(path) => std::fs::write(path, format!("{rendered}\n"))
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{rendered}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dequantize
// ---------------------------------------------------------------------------

fn write_matrix(path: &Path, matrix: &DenseMatrix) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "csv" | "txt" => std::fs::write(path, text::write_csv_matrix(matrix))
            .with_context(|| format!("writing {}", path.display()))?,
        _ => std::fs::write(path, rawmat::write_raw_matrix(matrix))
            .with_context(|| format!("writing {}", path.display()))?,
    }
    Ok(())
}

fn cmd_dequantize(args: DequantizeArgs) -> Result<()> {
    let bytes =
        std::fs::read(&args.code).with_context(|| format!("reading {}", args.code.display()))?;
    let (code, record) = decode_code(&bytes)?;
    let mut matrix = dequantize_any(&code);
    if let Some(rec) = &record {
        matrix = destandardize(&matrix, rec);
    }
    write_matrix(&args.output, &matrix)?;
    println!(
        "{}",
        serde_json::json!({
            "rows": matrix.rows(),
            "cols": matrix.cols(),
            "output": args.output.display().to_string(),
        })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = sweep::load_config(&args.config)?;
    let records = sweep::run_sweep(&config)?;

    let csv_path = args.output.with_extension("csv");
    let json_path = args.output.with_extension("json");
    let mut written = Vec::new();
    if args.format != Some(OutputFormat::Json) {
        std::fs::write(&csv_path, sweep::records_to_csv(&records))
            .with_context(|| format!("writing {}", csv_path.display()))?;
        written.push(csv_path.display().to_string());
    }
    if args.format != Some(OutputFormat::Csv) {
        std::fs::write(&json_path, sweep::records_to_json(&records))
            .with_context(|| format!("writing {}", json_path.display()))?;
        written.push(json_path.display().to_string());
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{}",
        serde_json::json!({
            "records": records.len(),
            "failed_cells": failed,
            "outputs": written,
        })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// bound / cost
// ---------------------------------------------------------------------------

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let w = load_matrix(&args.input, args.input_format)?;
    let params = args.anneal.to_params()?;
    let upper = error_upper_bound(&w, args.l)?;
    let code = bqq_quantize_with_dim(&w, 1, args.l, &params, args.seed)?;
    let achieved = dequantize(&code);
    let achieved_mse = mse(&w, &achieved)?;
    let achieved_frobenius = (achieved_mse * w.len() as f64).sqrt();
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "shape": [w.rows(), w.cols()],
            "l": args.l,
            "upper_bound_frobenius": upper,
            "achieved_frobenius": achieved_frobenius,
            "achieved_mse": achieved_mse,
            "achieved_sqrt_mse": achieved_mse.sqrt(),
        }))?
    );
    Ok(())
}

fn cmd_cost(args: CostArgs) -> Result<()> {
    if args.m == 0 || args.n == 0 || args.l == 0 || args.d == 0 {
        bail!(UsageError("cost arguments must be positive".into()));
    }
    let weights = CostWeights {
        w_and: args.w_and,
        w_add: args.w_add,
        w_mul: args.w_mul,
    };
    let report = inference_cost(args.m, args.n, args.l, args.d, &weights);
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "m": args.m,
            "n": args.n,
            "l": args.l,
            "d": args.d,
            "first_order": {
                "and_ops": report.first_order.and_ops,
                "add_ops": report.first_order.add_ops,
                "mul_ops": report.first_order.mul_ops,
            },
            "bqq": {
                "and_ops": report.bqq.and_ops,
                "add_ops": report.bqq.add_ops,
                "mul_ops": report.bqq.mul_ops,
            },
            "ratio": report.ratio,
        }))?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<()> {
    match args.what {
        GenCommand::Gaussian {
            rows,
            cols,
            seed,
            output,
        } => {
            if rows == 0 || cols == 0 {
                bail!(UsageError("dimensions must be positive".into()));
            }
            write_matrix(&output, &gen_gaussian(rows, cols, seed))?;
            println!("{}", serde_json::json!({"output": output.display().to_string()}));
        }
        GenCommand::Lowrank {
            rows,
            cols,
            rank,
            noise_std,
            seed,
            output,
        } => {
            if rows == 0 || cols == 0 || rank == 0 || rank > rows.min(cols) {
                bail!(UsageError(
                    "lowrank needs positive dims and 1 <= rank <= min(rows, cols)".into()
                ));
            }
            if !noise_std.is_finite() || noise_std < 0.0 {
                bail!(UsageError("noise-std must be a finite non-negative number".into()));
            }
            write_matrix(&output, &gen_lowrank_noise(rows, cols, rank, noise_std, seed))?;
            println!("{}", serde_json::json!({"output": output.display().to_string()}));
        }
        GenCommand::Cities { n, seed, output } => {
            if n < 2 {
                bail!(UsageError("an instance needs at least two cities".into()));
            }
            let instance = gen_random_cities(n, seed);
            std::fs::write(&output, tsplib::write_tsplib(&instance))
                .with_context(|| format!("writing {}", output.display()))?;
            println!("{}", serde_json::json!({"output": output.display().to_string()}));
        }
    }
    Ok(())
}
