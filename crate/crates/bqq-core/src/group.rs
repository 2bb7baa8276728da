//! Group-wise quantization: tile a matrix into blocks of at most
//! `group_rows x group_cols` (trailing blocks keep their natural ragged
//! size), quantize each block independently with its own scaling factors,
//! and reassemble on dequantization.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::matrix::DenseMatrix;

/// One tile and its code.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBlock<C> {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
    pub code: C,
}

/// A tiling of codes covering the full matrix exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedCode<C> {
    pub rows: usize,
    pub cols: usize,
    pub group_rows: usize,
    pub group_cols: usize,
    pub blocks: Vec<GroupBlock<C>>,
}

impl<C> GroupedCode<C> {
    pub fn footprint(&self, per_block: impl Fn(&C) -> MemoryFootprint) -> MemoryFootprint {
        let mut total: Option<MemoryFootprint> = None;
        for block in &self.blocks {
            let f = per_block(&block.code);
            total = Some(match total {
                None => f,
                Some(acc) => acc.combine(&f),
            });
        }
        total.expect("a grouped code has at least one block")
    }
}

/// Quantize each tile with `quantize(block_matrix, block_index)`.
///
/// Blocks are visited in row-major tile order, so block indices (and any
/// per-block seeds derived from them) are deterministic.
pub fn groupwise_quantize<C>(
    w: &DenseMatrix,
    group_rows: usize,
    group_cols: usize,
    mut quantize: impl FnMut(&DenseMatrix, usize) -> Result<C>,
) -> Result<GroupedCode<C>> {
    if group_rows == 0 || group_cols == 0 {
        return Err(Error::invalid("group dimensions must be at least 1"));
    }
    let mut blocks = Vec::new();
    let mut index = 0usize;
    let mut row0 = 0;
    while row0 < w.rows() {
        let rows = group_rows.min(w.rows() - row0);
        let mut col0 = 0;
        while col0 < w.cols() {
            let cols = group_cols.min(w.cols() - col0);
            let tile = w.submatrix(row0, col0, rows, cols)?;
            let code = quantize(&tile, index)?;
            blocks.push(GroupBlock {
                row0,
                col0,
                rows,
                cols,
                code,
            });
            index += 1;
            col0 += cols;
        }
        row0 += rows;
    }
    Ok(GroupedCode {
        rows: w.rows(),
        cols: w.cols(),
        group_rows,
        group_cols,
        blocks,
    })
}

/// Reassemble the exact tiling from per-block dequantizations.
pub fn groupwise_dequantize<C>(
    grouped: &GroupedCode<C>,
    dequantize: impl Fn(&C) -> DenseMatrix,
) -> DenseMatrix {
    let mut values = vec![0.0f64; grouped.rows * grouped.cols];
    for block in &grouped.blocks {
        let tile = dequantize(&block.code);
        debug_assert_eq!(tile.shape(), (block.rows, block.cols));
        for i in 0..block.rows {
            let dst = (block.row0 + i) * grouped.cols + block.col0;
            values[dst..dst + block.cols].copy_from_slice(tile.row(i));
        }
    }
    DenseMatrix::from_vec_unchecked(grouped.rows, grouped.cols, values)
}
