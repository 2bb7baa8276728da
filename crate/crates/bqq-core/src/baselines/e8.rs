//! E8 lattice vector quantization with residual greedy rounds.
//!
//! The codebook is the 240 minimal vectors of the E8 lattice (norm sqrt 2):
//! 112 integer vectors with two entries +-1, and 128 half-integer vectors
//! (+-1/2)^8 with an even number of minus signs. Each 8-dimensional input
//! row picks the max-cosine-similarity centroid with a per-row least-squares
//! scale; rounds repeat on the residual. Scales are uniform-quantized per
//! round (2 bits by default) so the scalar overhead stays negligible.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::matrix::DenseMatrix;

use super::uq::{uq_grid, UqCode};

/// All 240 norm-sqrt(2) lattice vectors, in a fixed deterministic order.
pub fn e8_codebook() -> Vec<[f64; 8]> {
    let mut codebook = Vec::with_capacity(240);
    // Integer type: +-e_i +- e_j for i < j.
    for i in 0..8 {
        for j in (i + 1)..8 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = [0.0f64; 8];
                v[i] = si;
                v[j] = sj;
                codebook.push(v);
            }
        }
    }
    // Half-integer type: (+-1/2)^8 with an even number of minus signs.
    for mask in 0u16..256 {
        if mask.count_ones() % 2 == 0 {
            let mut v = [0.5f64; 8];
            for (bit, slot) in v.iter_mut().enumerate() {
                if (mask >> bit) & 1 == 1 {
                    *slot = -0.5;
                }
            }
            codebook.push(v);
        }
    }
    debug_assert_eq!(codebook.len(), 240);
    codebook
}

/// Per-round scale storage.
#[derive(Debug, Clone, PartialEq)]
pub enum E8Scales {
    Raw(Vec<f64>),
    Quantized(UqCode),
}

impl E8Scales {
    fn values(&self) -> Vec<f64> {
        match self {
            E8Scales::Raw(v) => v.clone(),
            E8Scales::Quantized(code) => code.dequantize().values().to_vec(),
        }
    }
}

/// Residual multi-round E8 code.
#[derive(Debug, Clone, PartialEq)]
pub struct E8Code {
    pub rows: usize,
    pub cols: usize,
    pub pad_len: usize,
    /// Per round, one codebook index per 8-dimensional vector.
    pub indices: Vec<Vec<u8>>,
    /// Per round, one scale per vector (possibly quantized).
    pub scales: Vec<E8Scales>,
}

impl E8Code {
    pub fn rounds(&self) -> usize {
        self.indices.len()
    }

    pub fn dequantize(&self) -> DenseMatrix {
        let codebook = e8_codebook();
        let n_vec = self.indices.first().map_or(0, |r| r.len());
        let mut flat = vec![0.0f64; n_vec * 8];
        for (round_indices, round_scales) in self.indices.iter().zip(&self.scales) {
            let alphas = round_scales.values();
            for (r, (&idx, &alpha)) in round_indices.iter().zip(&alphas).enumerate() {
                let c = &codebook[idx as usize];
                for d in 0..8 {
                    flat[r * 8 + d] += alpha * c[d];
                }
            }
        }
        flat.truncate(self.rows * self.cols);
        DenseMatrix::from_vec_unchecked(self.rows, self.cols, flat)
    }

    /// Indices cost 8 bits each (240 < 256); quantized scales cost their
    /// bit width plus the two grid scalars per round.
    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        let mut binary = 0u64;
        let mut scalars = 0u64;
        for (round_indices, round_scales) in self.indices.iter().zip(&self.scales) {
            binary += round_indices.len() as u64 * 8;
            match round_scales {
                E8Scales::Raw(v) => scalars += v.len() as u64,
                E8Scales::Quantized(code) => {
                    let f = code.footprint(scalar_bits);
                    binary += f.binary_bits;
                    scalars += f.scalar_count;
                }
            }
        }
        MemoryFootprint::new(binary, scalars, scalar_bits)
    }
}

/// Residual greedy E8 lattice quantization.
///
/// `scale_bits = None` stores raw per-row scales; `Some(bits)` quantizes the
/// per-round scale vector with grid-search UQ, which is what the memory
/// model assumes.
pub fn e8_lvq(w: &DenseMatrix, n_bits: usize, scale_bits: Option<u32>) -> Result<E8Code> {
    if n_bits == 0 {
        return Err(Error::invalid("n_bits must be at least 1"));
    }
    let codebook = e8_codebook();
    let mut flat = w.values().to_vec();
    let rem = flat.len() % 8;
    let pad_len = if rem == 0 { 0 } else { 8 - rem };
    flat.resize(flat.len() + pad_len, 0.0);
    let n_vec = flat.len() / 8;

    let mut indices = Vec::with_capacity(n_bits);
    let mut scales = Vec::with_capacity(n_bits);
    for _ in 0..n_bits {
        let mut round_idx = Vec::with_capacity(n_vec);
        let mut round_alpha = Vec::with_capacity(n_vec);
        for r in 0..n_vec {
            let row = &flat[r * 8..(r + 1) * 8];
            // Every centroid has norm sqrt(2), so the max-cosine centroid is
            // the max-inner-product one; ties keep the lowest index.
            let mut best = 0usize;
            let mut best_dot = f64::NEG_INFINITY;
            for (k, c) in codebook.iter().enumerate() {
                let dot: f64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
                if dot > best_dot {
                    best_dot = dot;
                    best = k;
                }
            }
            round_idx.push(best as u8);
            // Least-squares scale: <row, c> / ||c||^2 with ||c||^2 = 2.
            round_alpha.push(best_dot / 2.0);
        }

        let stored = match scale_bits {
            None => E8Scales::Raw(round_alpha.clone()),
            Some(bits) => {
                let alpha_mat =
                    DenseMatrix::from_vec(1, n_vec, round_alpha.clone()).expect("finite scales");
                E8Scales::Quantized(uq_grid(&alpha_mat, bits, 100)?)
            }
        };
        let effective = stored.values();
        for (r, (&idx, &alpha)) in round_idx.iter().zip(&effective).enumerate() {
            let c = &codebook[idx as usize];
            for d in 0..8 {
                flat[r * 8 + d] -= alpha * c[d];
            }
        }
        indices.push(round_idx);
        scales.push(stored);
    }

    Ok(E8Code {
        rows: w.rows(),
        cols: w.cols(),
        pad_len,
        indices,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::mse;
    use crate::synth::gen_gaussian;

    #[test]
    fn codebook_has_240_norm_sqrt2_distinct_vectors() {
        let cb = e8_codebook();
        assert_eq!(cb.len(), 240);
        for v in &cb {
            let norm_sq: f64 = v.iter().map(|x| x * x).sum();
            assert_eq!(norm_sq, 2.0); // exact in binary floating point
        }
        for (i, a) in cb.iter().enumerate() {
            for b in cb.iter().skip(i + 1) {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn codebook_is_closed_under_negation() {
        let cb = e8_codebook();
        for v in &cb {
            let neg: [f64; 8] = std::array::from_fn(|i| -v[i]);
            assert!(cb.contains(&neg), "missing negation of {v:?}");
        }
    }

    #[test]
    fn scaled_codebook_row_is_exact_in_one_round() {
        let cb = e8_codebook();
        let target: Vec<f64> = cb[17].iter().map(|v| v * 3.0).collect();
        let w = DenseMatrix::from_vec(1, 8, target).unwrap();
        let code = e8_lvq(&w, 1, None).unwrap();
        assert_eq!(code.indices[0], vec![17]);
        let err = mse(&w, &code.dequantize()).unwrap();
        assert!(err < 1e-25, "err = {err}");
    }

    #[test]
    fn residual_norm_strictly_decreases_across_rounds() {
        let w = gen_gaussian(16, 16, 33);
        let mut previous = f64::INFINITY;
        for rounds in 1..=4 {
            let code = e8_lvq(&w, rounds, Some(2)).unwrap();
            let err = mse(&w, &code.dequantize()).unwrap();
            assert!(err < previous, "rounds = {rounds}: {err} >= {previous}");
            previous = err;
        }
    }

    #[test]
    fn zero_matrix_is_handled() {
        let w = DenseMatrix::zeros(4, 4).unwrap();
        let code = e8_lvq(&w, 2, Some(2)).unwrap();
        assert_eq!(mse(&w, &code.dequantize()).unwrap(), 0.0);
    }

    #[test]
    fn padding_reconstructs_original_shape() {
        let w = gen_gaussian(3, 5, 2); // 15 values -> pad 1
        let code = e8_lvq(&w, 1, Some(2)).unwrap();
        assert_eq!(code.pad_len, 1);
        assert_eq!(code.dequantize().shape(), (3, 5));
    }
}
