//! Baseline quantizers the BQQ method is benchmarked against: grid-search
//! uniform quantization, greedy binary coding quantization, SVD low-rank
//! (optionally with quantized factors), k-means vector quantization, and
//! E8 lattice vector quantization.
//!
//! All codes report memory through the same [`crate::footprint`] convention:
//! one bit per binary/sign element, `scalar_bits` per stored scalar, and the
//! index width per vector-quantizer index.

pub mod bcq;
pub mod e8;
pub mod svd;
pub mod uq;
pub mod vq;
