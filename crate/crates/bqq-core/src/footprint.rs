//! Memory accounting shared by all quantizers.
//!
//! Convention: binary/sign elements cost 1 bit, stored scalars cost
//! `scalar_bits_each` bits (32 by default), vector-quantizer indices cost
//! their index width. No entropy coding.

/// Number of bits assumed per stored scalar unless overridden.
pub const DEFAULT_SCALAR_BITS: u32 = 32;

/// Bit-level footprint of a quantized representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryFootprint {
    pub binary_bits: u64,
    pub scalar_count: u64,
    pub scalar_bits_each: u32,
}

impl MemoryFootprint {
    pub fn new(binary_bits: u64, scalar_count: u64, scalar_bits_each: u32) -> Self {
        Self {
            binary_bits,
            scalar_count,
            scalar_bits_each,
        }
    }

    pub fn total_bits(&self) -> u64 {
        self.binary_bits + self.scalar_count * self.scalar_bits_each as u64
    }

    /// Size in kilobytes (1 KB = 1000 bytes), the unit used for reporting.
    pub fn kilobytes(&self) -> f64 {
        self.total_bits() as f64 / 8.0 / 1000.0
    }

    /// Component-wise sum, used for grouped codes.
    pub fn combine(&self, other: &MemoryFootprint) -> MemoryFootprint {
        debug_assert_eq!(self.scalar_bits_each, other.scalar_bits_each);
        MemoryFootprint {
            binary_bits: self.binary_bits + other.binary_bits,
            scalar_count: self.scalar_count + other.scalar_count,
            scalar_bits_each: self.scalar_bits_each,
        }
    }
}

/// Footprint of a BQQ code: `p` stacks of an `m x l` and an `l x n` binary
/// matrix, plus `3p + 1` scalars (r, s, t per stack and one global bias).
pub fn bqq_footprint(m: usize, n: usize, l: usize, p: usize, scalar_bits: u32) -> MemoryFootprint {
    let binary_bits = (p as u64) * (l as u64) * (m as u64 + n as u64);
    let scalar_count = 3 * p as u64 + 1;
    MemoryFootprint::new(binary_bits, scalar_count, scalar_bits)
}
