//! Matrix loading: file formats are inferred from the extension unless
//! forced with `--input-format`.

use anyhow::{bail, Context, Result};
use bqq_core::io::{fvecs, rawmat, text, tsplib};
use bqq_core::matrix::DenseMatrix;
use clap::ValueEnum;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Infer from the file extension.
    Auto,
    /// Raw binary matrix (`.rawmat`).
    Rawmat,
    /// fvecs vector file, one matrix row per vector (`.fvecs`).
    Fvecs,
    /// TSPLIB EUC_2D instance, loaded as its distance matrix (`.tsp`).
    Tsplib,
    /// Delimited text (`.csv`, `.txt`, `.tsv`).
    Csv,
}

fn infer(path: &Path) -> Result<InputFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    Ok(match ext.as_str() {
        "rawmat" | "bqm" => InputFormat::Rawmat,
        "fvecs" => InputFormat::Fvecs,
        "tsp" | "tsplib" => InputFormat::Tsplib,
        "csv" | "txt" | "tsv" => InputFormat::Csv,
        other => bail!(
            "cannot infer input format from extension '{other}'; pass --input-format"
        ),
    })
}

pub fn load_matrix(path: &Path, format: InputFormat) -> Result<DenseMatrix> {
    let format = match format {
        InputFormat::Auto => infer(path)?,
        other => other,
    };
    let matrix = match format {
        InputFormat::Auto => unreachable!(),
        InputFormat::Rawmat => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            rawmat::read_raw_matrix(&bytes)?
        }
        InputFormat::Fvecs => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            fvecs::parse_fvecs(&bytes)?.to_matrix()?
        }
        InputFormat::Tsplib => {
            let content = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let instance = tsplib::parse_tsplib(&content)?;
            tsplib::distance_matrix(&instance)
        }
        InputFormat::Csv => {
            let content = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            text::parse_delimited(&content)?
        }
    };
    Ok(matrix)
}
