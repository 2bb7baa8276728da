//! Trade-off sweep: a TOML config describes one input matrix, per-method
//! parameter grids, and seeds; every (method, parameter point, seed) cell
//! is quantized and measured. Cells run on a bounded worker pool
//! (`BQQ_THREADS`) and are gathered by cell index, so parallelism never
//! changes the output. Runs are reproducible byte for byte unless timing
//! recording is switched on.

use anyhow::{bail, Context, Result};
use bqq_core::amfd::AnnealParams;
use bqq_core::matrix::{destandardize, mse, standardize, DenseMatrix};
use bqq_core::method::{dequantize_any, footprint_any, quantize_grouped, MethodSpec};
use bqq_core::synth::{gen_gaussian, gen_lowrank_noise};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use crate::input::{load_matrix, InputFormat};

/// Output CSV header, fixed.
pub const CSV_HEADER: &str = "method,params,seed,memory_bits,mse,wall_time_ms";

// ---------------------------------------------------------------------------
// Config schema (unknown keys are errors everywhere)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub input: InputSpec,
    pub seeds: Vec<u64>,
    #[serde(default = "default_scalar_bits")]
    pub scalar_bits: u32,
    #[serde(default)]
    pub mse_scale: MseScale,
    /// Off by default so identical configs produce byte-identical output.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub group_rows: Option<usize>,
    #[serde(default)]
    pub group_cols: Option<usize>,
    pub methods: MethodGrids,
}

fn default_scalar_bits() -> u32 {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MseScale {
    #[default]
    Standardized,
    Original,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub kind: InputKind,
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub cols: Option<usize>,
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Gaussian,
    Lowrank,
    File,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodGrids {
    #[serde(default)]
    pub bqq: Option<BqqGrid>,
    #[serde(default)]
    pub uq: Option<UqGrid>,
    #[serde(default)]
    pub bcq: Option<BcqGrid>,
    #[serde(default)]
    pub svd: Option<SvdGrid>,
    #[serde(default, rename = "svd-uq")]
    pub svd_uq: Option<SvdUqGrid>,
    #[serde(default)]
    pub vq: Option<VqGrid>,
    #[serde(default, rename = "vq-uq")]
    pub vq_uq: Option<VqUqGrid>,
    #[serde(default)]
    pub e8: Option<E8Grid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BqqGrid {
    pub p: Vec<usize>,
    #[serde(default = "default_l_scale")]
    pub l_scale: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_t_init")]
    pub t_init: f64,
    #[serde(default = "default_t_fin")]
    pub t_fin: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
}

fn default_l_scale() -> Vec<f64> {
    vec![1.0]
}
fn default_steps() -> usize {
    AnnealParams::default().n_step
}
fn default_t_init() -> f64 {
    AnnealParams::default().t_init
}
fn default_t_fin() -> f64 {
    AnnealParams::default().t_fin
}
fn default_eta() -> f64 {
    AnnealParams::default().eta
}
fn default_zeta() -> f64 {
    AnnealParams::default().zeta
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqGrid {
    pub bits: Vec<u32>,
    #[serde(default = "default_n_split")]
    pub n_split: usize,
}

fn default_n_split() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcqGrid {
    pub p: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvdGrid {
    pub rank: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvdUqGrid {
    pub rank: Vec<usize>,
    pub bits: Vec<u32>,
    #[serde(default = "default_n_split")]
    pub n_split: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqGrid {
    pub vec_dim: Vec<usize>,
    pub k: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqUqGrid {
    pub vec_dim: Vec<usize>,
    pub k: Vec<usize>,
    pub centroid_bits: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E8Grid {
    pub n_bits: Vec<usize>,
    #[serde(default)]
    pub scale_bits: Option<u32>,
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One benchmark point. `mse` is `None` (CSV: the literal `error`) when the
/// cell failed; the JSON record then carries the message.
#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRecord {
    pub method: String,
    pub params: String,
    pub seed: u64,
    pub memory_bits: u64,
    pub mse: Option<f64>,
    pub error: Option<String>,
    pub wall_time_ms: u64,
}

impl TradeoffRecord {
    pub fn csv_line(&self) -> String {
        let mse = match self.mse {
            Some(v) => format!("{v}"),
            None => "error".to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.method, self.params, self.seed, self.memory_bits, mse, self.wall_time_ms
        )
    }
}

pub fn records_to_csv(records: &[TradeoffRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.csv_line());
        out.push('\n');
    }
    out
}

pub fn records_to_json(records: &[TradeoffRecord]) -> String {
    let mut out = serde_json::to_string_pretty(records).expect("records serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: SweepConfig =
        toml::from_str(&content).with_context(|| format!("parsing config {}", path.display()))?;
    if config.seeds.is_empty() {
        bail!("config must list at least one seed");
    }
    Ok(config)
}

pub fn load_input(spec: &InputSpec) -> Result<DenseMatrix> {
    match spec.kind {
        InputKind::Gaussian => {
            let rows = spec.rows.context("input.rows is required for gaussian")?;
            let cols = spec.cols.context("input.cols is required for gaussian")?;
            if rows == 0 || cols == 0 {
                bail!("input dimensions must be positive");
            }
            Ok(gen_gaussian(rows, cols, spec.seed.unwrap_or(0)))
        }
        InputKind::Lowrank => {
            let rows = spec.rows.context("input.rows is required for lowrank")?;
            let cols = spec.cols.context("input.cols is required for lowrank")?;
            let rank = spec.rank.context("input.rank is required for lowrank")?;
            if rows == 0 || cols == 0 || rank == 0 || rank > rows.min(cols) {
                bail!("lowrank input needs positive dims and 1 <= rank <= min(rows, cols)");
            }
            Ok(gen_lowrank_noise(
                rows,
                cols,
                rank,
                spec.noise_std.unwrap_or(0.0),
                spec.seed.unwrap_or(0),
            ))
        }
        InputKind::File => {
            let path = spec.path.as_ref().context("input.path is required for file")?;
            let format = match spec.format.as_deref() {
                None | Some("auto") => InputFormat::Auto,
                Some("rawmat") => InputFormat::Rawmat,
                Some("fvecs") => InputFormat::Fvecs,
                Some("tsplib") => InputFormat::Tsplib,
                Some("csv") => InputFormat::Csv,
                Some(other) => bail!("unknown input.format '{other}'"),
            };
            load_matrix(Path::new(path), format)
        }
    }
}

/// Expand the per-method grids into concrete method specs, in a fixed order.
pub fn expand_methods(grids: &MethodGrids) -> Result<Vec<MethodSpec>> {
    let mut specs = Vec::new();
    if let Some(g) = &grids.bqq {
        let anneal_base = AnnealParams {
            t_init: g.t_init,
            t_fin: g.t_fin,
            n_step: g.steps,
            eta: g.eta,
            zeta: g.zeta,
        };
        anneal_base.validate()?;
        for &p in &g.p {
            for &l_scale in &g.l_scale {
                specs.push(MethodSpec::Bqq {
                    p,
                    l_scale,
                    anneal: anneal_base,
                });
            }
        }
    }
    if let Some(g) = &grids.uq {
        for &bits in &g.bits {
            specs.push(MethodSpec::Uq {
                bits,
                n_split: g.n_split,
            });
        }
    }
    if let Some(g) = &grids.bcq {
        for &p in &g.p {
            specs.push(MethodSpec::Bcq { p });
        }
    }
    if let Some(g) = &grids.svd {
        for &rank in &g.rank {
            specs.push(MethodSpec::Svd { rank });
        }
    }
    if let Some(g) = &grids.svd_uq {
        for &rank in &g.rank {
            for &bits in &g.bits {
                specs.push(MethodSpec::SvdUq {
                    rank,
                    bits,
                    n_split: g.n_split,
                });
            }
        }
    }
    if let Some(g) = &grids.vq {
        for &vec_dim in &g.vec_dim {
            for &k in &g.k {
                specs.push(MethodSpec::Vq {
                    vec_dim,
                    k,
                    centroid_bits: None,
                });
            }
        }
    }
    if let Some(g) = &grids.vq_uq {
        for &vec_dim in &g.vec_dim {
            for &k in &g.k {
                for &bits in &g.centroid_bits {
                    specs.push(MethodSpec::Vq {
                        vec_dim,
                        k,
                        centroid_bits: Some(bits),
                    });
                }
            }
        }
    }
    if let Some(g) = &grids.e8 {
        for &n_bits in &g.n_bits {
            specs.push(MethodSpec::E8 {
                n_bits,
                scale_bits: Some(g.scale_bits.unwrap_or(2)),
            });
        }
    }
    if specs.is_empty() {
        bail!("config must enable at least one method");
    }
    Ok(specs)
}

struct Cell {
    spec: MethodSpec,
    seed: u64,
}

fn run_cell(
    cell: &Cell,
    original: &DenseMatrix,
    standardized: &DenseMatrix,
    record: &bqq_core::matrix::StandardizationRecord,
    config: &SweepConfig,
) -> TradeoffRecord {
    let started = Instant::now();
    let group_rows = config.group_rows.unwrap_or(standardized.rows());
    let group_cols = config.group_cols.unwrap_or(standardized.cols());
    let outcome = quantize_grouped(&cell.spec, standardized, group_rows, group_cols, cell.seed)
        .map(|code| {
            let reconstructed = dequantize_any(&code);
            let mse_value = match config.mse_scale {
                MseScale::Standardized => mse(standardized, &reconstructed),
                MseScale::Original => mse(original, &destandardize(&reconstructed, record)),
            };
            (footprint_any(&code, config.scalar_bits).total_bits(), mse_value)
        });
    let wall_time_ms = if config.record_timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    match outcome {
        Ok((memory_bits, Ok(mse_value))) => TradeoffRecord {
            method: cell.spec.id().to_string(),
            params: cell.spec.params_string(),
            seed: cell.seed,
            memory_bits,
            mse: Some(mse_value),
            error: None,
            wall_time_ms,
        },
        Ok((_, Err(e))) | Err(e) => TradeoffRecord {
            method: cell.spec.id().to_string(),
            params: cell.spec.params_string(),
            seed: cell.seed,
            memory_bits: 0,
            mse: None,
            error: Some(e.to_string()),
            wall_time_ms,
        },
    }
}

/// Run the whole sweep; records come back sorted by
/// `(method, memory_bits, params, seed)`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<TradeoffRecord>> {
    let original = load_input(&config.input)?;
    // The benchmark protocol standardizes every input before quantization.
    let (standardized, record) = standardize(&original);
    let specs = expand_methods(&config.methods)?;

    let mut cells = Vec::new();
    for spec in &specs {
        for &seed in &config.seeds {
            cells.push(Cell {
                spec: spec.clone(),
                seed,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .context("building worker pool")?;
    let mut records: Vec<TradeoffRecord> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|cell| run_cell(cell, &original, &standardized, &record, config))
            .collect()
    });

    records.sort_by(|a, b| {
        (a.method.as_str(), a.memory_bits, a.params.as_str(), a.seed).cmp(&(
            b.method.as_str(),
            b.memory_bits,
            b.params.as_str(),
            b.seed,
        ))
    });
    Ok(records)
}

/// Worker pool size: `BQQ_THREADS` when set and valid, otherwise the number
/// of available CPUs (rayon's choice when 0 is passed).
fn worker_count() -> usize {
    std::env::var("BQQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(0)
}
