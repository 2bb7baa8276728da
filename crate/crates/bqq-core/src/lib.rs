//! Matrix quantization by binary quadratic expressions, with the annealed
//! mean-field PUBO solver that fits them, the standard quantizers they are
//! benchmarked against, and the file formats of the benchmark harness.
//!
//! Entry points:
//! - [`bqq::bqq_quantize`] / [`bqq::dequantize`]: the quantizer itself.
//! - [`amfd`] and [`pubo`]: the general-purpose annealed mean-field solver.
//! - [`baselines`]: UQ, BCQ, SVD, VQ, and E8 lattice quantizers.
//! - [`method`]: one enum over every method, plus group-wise tiling.
//! - [`codec`]: the serialized code container.
//! - [`io`] and [`synth`]: matrix sources.

pub mod amfd;
pub mod baselines;
pub mod bqq;
pub mod codec;
pub mod error;
pub mod footprint;
pub mod group;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod method;
pub mod pubo;
pub mod synth;

pub use error::{Error, Result};
pub use footprint::{bqq_footprint, MemoryFootprint, DEFAULT_SCALAR_BITS};
pub use matrix::{destandardize, mse, standardize, BitMatrix, DenseMatrix, StandardizationRecord};
