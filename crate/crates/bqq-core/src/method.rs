//! One dispatch surface over every quantization method, so the CLI and the
//! serialization container can treat them uniformly.

use crate::amfd::AnnealParams;
use crate::baselines::bcq::{bcq, BcqCode};
use crate::baselines::e8::{e8_lvq, E8Code};
use crate::baselines::svd::{svd_lowrank, svd_uq, SvdCode};
use crate::baselines::uq::{uq_grid, UqCode};
use crate::baselines::vq::{vq_kmeans, VqCode};
use crate::bqq::{bqq_quantize, dequantize as bqq_dequantize, BqqCode};
use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::group::{groupwise_dequantize, groupwise_quantize, GroupedCode};
use crate::matrix::DenseMatrix;

/// A quantization method with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Bqq {
        p: usize,
        l_scale: f64,
        anneal: AnnealParams,
    },
    Uq {
        bits: u32,
        n_split: usize,
    },
    Bcq {
        p: usize,
    },
    Svd {
        rank: usize,
    },
    SvdUq {
        rank: usize,
        bits: u32,
        n_split: usize,
    },
    Vq {
        vec_dim: usize,
        k: usize,
        centroid_bits: Option<u32>,
    },
    E8 {
        n_bits: usize,
        scale_bits: Option<u32>,
    },
}

impl MethodSpec {
    /// Stable method identifier used in benchmark records and the CLI.
    pub fn id(&self) -> &'static str {
        match self {
            MethodSpec::Bqq { .. } => "bqq",
            MethodSpec::Uq { .. } => "uq",
            MethodSpec::Bcq { .. } => "bcq",
            MethodSpec::Svd { .. } => "svd",
            MethodSpec::SvdUq { .. } => "svd-uq",
            MethodSpec::Vq {
                centroid_bits: None,
                ..
            } => "vq",
            MethodSpec::Vq {
                centroid_bits: Some(_),
                ..
            } => "vq-uq",
            MethodSpec::E8 { .. } => "e8",
        }
    }

    /// Canonical `key=value` parameter rendering (`;`-separated, fixed key
    /// order), stable across runs so benchmark output is reproducible.
    pub fn params_string(&self) -> String {
        match self {
            MethodSpec::Bqq { p, l_scale, anneal } => format!(
                "p={p};l_scale={l_scale};steps={};t_init={};t_fin={};eta={};zeta={}",
                anneal.n_step, anneal.t_init, anneal.t_fin, anneal.eta, anneal.zeta
            ),
            MethodSpec::Uq { bits, n_split } => format!("bits={bits};n_split={n_split}"),
            MethodSpec::Bcq { p } => format!("p={p}"),
            MethodSpec::Svd { rank } => format!("rank={rank}"),
            MethodSpec::SvdUq {
                rank,
                bits,
                n_split,
            } => format!("rank={rank};bits={bits};n_split={n_split}"),
            MethodSpec::Vq {
                vec_dim,
                k,
                centroid_bits,
            } => match centroid_bits {
                None => format!("vec_dim={vec_dim};k={k}"),
                Some(bits) => format!("vec_dim={vec_dim};k={k};centroid_bits={bits}"),
            },
            MethodSpec::E8 { n_bits, scale_bits } => match scale_bits {
                None => format!("n_bits={n_bits}"),
                Some(bits) => format!("n_bits={n_bits};scale_bits={bits}"),
            },
        }
    }
}

/// Any quantized representation, including group-wise tilings of one.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCode {
    Bqq(BqqCode),
    Uq(UqCode),
    Bcq(BcqCode),
    Svd(SvdCode),
    Vq(VqCode),
    E8(E8Code),
    Grouped(Box<GroupedCode<AnyCode>>),
}

impl AnyCode {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyCode::Bqq(c) => (c.rows, c.cols),
            AnyCode::Uq(c) => (c.rows, c.cols),
            AnyCode::Bcq(c) => (c.rows, c.cols),
            AnyCode::Svd(c) => (c.rows(), c.cols()),
            AnyCode::Vq(c) => (c.rows, c.cols),
            AnyCode::E8(c) => (c.rows, c.cols),
            AnyCode::Grouped(g) => (g.rows, g.cols),
        }
    }
}

/// Per-block seed derivation for grouped runs.
fn block_seed(seed: u64, block: usize) -> u64 {
    seed ^ (block as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Quantize a whole matrix with one method.
pub fn quantize_with(spec: &MethodSpec, w: &DenseMatrix, seed: u64) -> Result<AnyCode> {
    Ok(match spec {
        MethodSpec::Bqq { p, l_scale, anneal } => {
            AnyCode::Bqq(bqq_quantize(w, *p, *l_scale, anneal, seed)?)
        }
        MethodSpec::Uq { bits, n_split } => AnyCode::Uq(uq_grid(w, *bits, *n_split)?),
        MethodSpec::Bcq { p } => AnyCode::Bcq(bcq(w, *p)?),
        MethodSpec::Svd { rank } => AnyCode::Svd(svd_lowrank(w, *rank)?),
        MethodSpec::SvdUq {
            rank,
            bits,
            n_split,
        } => AnyCode::Svd(svd_uq(w, *rank, *bits, *n_split)?),
        MethodSpec::Vq {
            vec_dim,
            k,
            centroid_bits,
        } => AnyCode::Vq(vq_kmeans(w, *vec_dim, *k, seed, *centroid_bits)?),
        MethodSpec::E8 { n_bits, scale_bits } => AnyCode::E8(e8_lvq(w, *n_bits, *scale_bits)?),
    })
}

/// Quantize block-wise; a group covering the whole matrix degenerates to a
/// plain (non-grouped) code.
pub fn quantize_grouped(
    spec: &MethodSpec,
    w: &DenseMatrix,
    group_rows: usize,
    group_cols: usize,
    seed: u64,
) -> Result<AnyCode> {
    if group_rows >= w.rows() && group_cols >= w.cols() {
        return quantize_with(spec, w, seed);
    }
    let grouped = groupwise_quantize(w, group_rows, group_cols, |tile, idx| {
        quantize_with(spec, tile, block_seed(seed, idx))
    })?;
    Ok(AnyCode::Grouped(Box::new(grouped)))
}

pub fn dequantize_any(code: &AnyCode) -> DenseMatrix {
    match code {
        AnyCode::Bqq(c) => bqq_dequantize(c),
        AnyCode::Uq(c) => c.dequantize(),
        AnyCode::Bcq(c) => c.dequantize(),
        AnyCode::Svd(c) => c.dequantize(),
        AnyCode::Vq(c) => c.dequantize(),
        AnyCode::E8(c) => c.dequantize(),
        AnyCode::Grouped(g) => groupwise_dequantize(g, dequantize_any),
    }
}

pub fn footprint_any(code: &AnyCode, scalar_bits: u32) -> MemoryFootprint {
    match code {
        AnyCode::Bqq(c) => c.footprint(scalar_bits),
        AnyCode::Uq(c) => c.footprint(scalar_bits),
        AnyCode::Bcq(c) => c.footprint(scalar_bits),
        AnyCode::Svd(c) => c.footprint(scalar_bits),
        AnyCode::Vq(c) => c.footprint(scalar_bits),
        AnyCode::E8(c) => c.footprint(scalar_bits),
        AnyCode::Grouped(g) => g.footprint(|c| footprint_any(c, scalar_bits)),
    }
}

/// Parse a method id; errors list the known methods.
pub fn known_method_ids() -> &'static [&'static str] {
    &["bqq", "uq", "bcq", "svd", "svd-uq", "vq", "vq-uq", "e8"]
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bqq" => Ok(MethodKind::Bqq),
            "uq" => Ok(MethodKind::Uq),
            "bcq" => Ok(MethodKind::Bcq),
            "svd" => Ok(MethodKind::Svd),
            "svd-uq" => Ok(MethodKind::SvdUq),
            "vq" => Ok(MethodKind::Vq),
            "vq-uq" => Ok(MethodKind::VqUq),
            "e8" => Ok(MethodKind::E8),
            other => Err(Error::invalid(format!(
                "unknown method '{other}'; known methods: {}",
                known_method_ids().join(", ")
            ))),
        }
    }
}

/// Bare method names (no parameters), for CLI parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Bqq,
    Uq,
    Bcq,
    Svd,
    SvdUq,
    Vq,
    VqUq,
    E8,
}
