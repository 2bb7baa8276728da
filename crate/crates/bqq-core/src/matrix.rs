//! Dense and bit-packed matrix types, standardization, and error metrics.
//!
//! Everything downstream (the BQQ solver and all baseline quantizers) works
//! on [`DenseMatrix`] and stores binary factors in [`BitMatrix`]. Both types
//! are immutable after construction and safe to share across threads.

use crate::error::{Error, Result};

/// Real-valued row-major matrix with 64-bit entries.
///
/// Construction validates that the shape is non-empty, the buffer length
/// matches `rows * cols`, and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::invalid("matrix dimensions overflow"))?;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                rows,
                cols,
                expected,
                got: values.len(),
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self { rows, cols, values })
    }

    /// Build from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.saturating_mul(cols));
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, values)
    }

    /// Build from nested row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::TextParse {
                    line: i + 1,
                    message: format!("row has {} entries, expected {}", r.len(), cols),
                });
            }
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), cols, values)
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::constant(rows, cols, 0.0)
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && values.len() == rows * cols);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction forbids empty matrices
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Copy of the block starting at `(row0, col0)` with the given shape.
    pub fn submatrix(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<DenseMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if row0 + rows > self.rows || col0 + cols > self.cols {
            return Err(Error::invalid(format!(
                "block ({row0}, {col0}) + {rows}x{cols} exceeds the {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let start = (row0 + i) * self.cols + col0;
            values.extend_from_slice(&self.values[start..start + cols]);
        }
        Ok(DenseMatrix::from_vec_unchecked(rows, cols, values))
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        DenseMatrix::from_vec_unchecked(self.cols, self.rows, values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sum of squared entries (squared Frobenius norm).
    pub fn frob_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix::from_vec_unchecked(
            self.rows,
            self.cols,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_vec_unchecked(self.rows, self.cols, values))
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseMatrix::from_vec_unchecked(self.rows, self.cols, values))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = vec![0.0; self.rows * other.cols];
        // i-k-j loop order keeps the inner accumulation on contiguous rows.
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(DenseMatrix::from_vec_unchecked(self.rows, other.cols, out))
    }

    pub(crate) fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }
}

/// Space-efficient `{0,1}` matrix, bit-packed row-major, LSB first.
///
/// The packed byte layout is also the on-disk layout used by the code
/// serialization format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let nbytes = (rows * cols).div_ceil(8);
        Ok(Self {
            rows,
            cols,
            bits: vec![0u8; nbytes],
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set_true(i, j);
                }
            }
        }
        Ok(m)
    }

    /// Convert from a dense matrix whose entries are exactly 0 or 1.
    pub fn from_dense(dense: &DenseMatrix) -> Result<Self> {
        let mut m = Self::zeros(dense.rows(), dense.cols())?;
        for i in 0..dense.rows() {
            for j in 0..dense.cols() {
                let v = dense.get(i, j);
                if v == 1.0 {
                    m.set_true(i, j);
                } else if v != 0.0 {
                    return Err(Error::NotBinary {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(m)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut values = vec![0.0; self.rows * self.cols];
        for (idx, v) in values.iter_mut().enumerate() {
            if self.get_linear(idx) {
                *v = 1.0;
            }
        }
        DenseMatrix::from_vec_unchecked(self.rows, self.cols, values)
    }

    /// Reconstruct from packed bytes (LSB-first, row-major).
    pub fn from_packed(rows: usize, cols: usize, bytes: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let nbits = rows * cols;
        let nbytes = nbits.div_ceil(8);
        if bytes.len() != nbytes {
            return Err(Error::LengthMismatch {
                rows,
                cols,
                expected: nbytes,
                got: bytes.len(),
            });
        }
        // Padding bits beyond rows*cols must be zero.
        if !nbits.is_multiple_of(8) {
            let last = bytes[nbytes - 1];
            let used = nbits % 8;
            if last >> used != 0 {
                return Err(Error::BinaryParse {
                    offset: nbytes - 1,
                    message: "nonzero padding bits in packed bit matrix".into(),
                });
            }
        }
        Ok(Self { rows, cols, bits: bytes })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.get_linear(row * self.cols + col)
    }

    #[inline]
    fn get_linear(&self, idx: usize) -> bool {
        (self.bits[idx / 8] >> (idx % 8)) & 1 == 1
    }

    fn set_true(&mut self, row: usize, col: usize) {
        let idx = row * self.cols + col;
        self.bits[idx / 8] |= 1 << (idx % 8);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn packed_bytes(&self) -> &[u8] {
        &self.bits
    }

    /// Total stored bits (`rows * cols`), the memory-accounting quantity.
    pub fn bit_len(&self) -> usize {
        self.rows * self.cols
    }
}

/// Record of the affine map applied by [`standardize`].
///
/// `std` is the population standard deviation; for a constant input it is
/// recorded as 1 and `constant` is set, so destandardization stays exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizationRecord {
    pub mean: f64,
    pub std: f64,
    pub constant: bool,
}

/// Shift and scale a matrix to zero mean and unit population variance.
///
/// A constant matrix maps to all zeros with the `constant` flag set; it is
/// still exactly recoverable through [`destandardize`].
pub fn standardize(w: &DenseMatrix) -> (DenseMatrix, StandardizationRecord) {
    let n = w.len() as f64;
    let mean = w.mean();
    let var = w.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        let record = StandardizationRecord {
            mean,
            std: 1.0,
            constant: true,
        };
        let out = DenseMatrix::from_vec_unchecked(w.rows(), w.cols(), vec![0.0; w.len()]);
        return (out, record);
    }
    let std = var.sqrt();
    let values = w.values().iter().map(|v| (v - mean) / std).collect();
    let out = DenseMatrix::from_vec_unchecked(w.rows(), w.cols(), values);
    (
        out,
        StandardizationRecord {
            mean,
            std,
            constant: false,
        },
    )
}

/// Invert [`standardize`]: `x * std + mean`.
pub fn destandardize(x: &DenseMatrix, record: &StandardizationRecord) -> DenseMatrix {
    let values = x
        .values()
        .iter()
        .map(|v| v * record.std + record.mean)
        .collect();
    DenseMatrix::from_vec_unchecked(x.rows(), x.cols(), values)
}

/// Mean squared error between two equally shaped matrices.
pub fn mse(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_gaussian;

    #[test]
    fn from_vec_rejects_empty_and_bad_lengths() {
        assert!(matches!(
            DenseMatrix::from_vec(0, 3, vec![]),
            Err(Error::EmptyMatrix)
        ));
        assert!(matches!(
            DenseMatrix::from_vec(2, 2, vec![1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn standardize_two_point_symmetric() {
        let w = DenseMatrix::from_vec(2, 2, vec![1.0, 3.0, 1.0, 3.0]).unwrap();
        let (out, rec) = standardize(&w);
        assert_eq!(out.values(), &[-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(rec.mean, 2.0);
        assert_eq!(rec.std, 1.0);
        assert!(!rec.constant);
    }

    #[test]
    fn standardize_constant_flags_and_zeroes() {
        let w = DenseMatrix::constant(2, 2, 5.0).unwrap();
        let (out, rec) = standardize(&w);
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert!(rec.constant);
        assert_eq!(rec.std, 1.0);
        let back = destandardize(&out, &rec);
        assert_eq!(back.values(), w.values());
    }

    #[test]
    fn standardize_gaussian_moments() {
        let w = gen_gaussian(128, 128, 7);
        let (out, rec) = standardize(&w);
        let mean = out.mean();
        let var = out.frob_sq() / out.len() as f64 - mean * mean;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        let back = destandardize(&out, &rec);
        for (a, b) in back.values().iter().zip(w.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mse_hand_cases() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let z = DenseMatrix::zeros(2, 2).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &z).unwrap(), 7.5);
        let u = DenseMatrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let v = DenseMatrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(mse(&u, &v).unwrap(), 1.0);
        assert!(mse(&a, &u).is_err());
    }

    #[test]
    fn bitmatrix_roundtrip_and_packing() {
        let d = DenseMatrix::from_vec(3, 3, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0])
            .unwrap();
        let b = BitMatrix::from_dense(&d).unwrap();
        assert_eq!(b.to_dense(), d);
        assert_eq!(b.count_ones(), 5);
        let packed = b.packed_bytes().to_vec();
        let back = BitMatrix::from_packed(3, 3, packed).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn bitmatrix_rejects_non_binary() {
        let d = DenseMatrix::from_vec(1, 2, vec![0.5, 1.0]).unwrap();
        assert!(matches!(
            BitMatrix::from_dense(&d),
            Err(Error::NotBinary { .. })
        ));
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.values(), &[58.0, 64.0, 139.0, 154.0]);
    }
}
