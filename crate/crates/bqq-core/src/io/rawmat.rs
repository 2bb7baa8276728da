//! Raw binary matrix files: a small header plus a little-endian `f64`
//! row-major payload. Used by the CLI to pass matrices between commands.
//!
//! Layout: magic `BQMX`, version `u16`, rows `u32`, cols `u32`, element
//! width `u8` (always 8), then `rows * cols` values.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use byteorder::{ByteOrder, LittleEndian};

pub const RAW_MATRIX_MAGIC: &[u8; 4] = b"BQMX";
pub const RAW_MATRIX_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 1;

pub fn write_raw_matrix(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.len() * 8);
    out.extend_from_slice(RAW_MATRIX_MAGIC);
    let mut b2 = [0u8; 2];
    LittleEndian::write_u16(&mut b2, RAW_MATRIX_VERSION);
    out.extend_from_slice(&b2);
    let mut b4 = [0u8; 4];
    LittleEndian::write_u32(&mut b4, m.rows() as u32);
    out.extend_from_slice(&b4);
    LittleEndian::write_u32(&mut b4, m.cols() as u32);
    out.extend_from_slice(&b4);
    out.push(8);
    let mut b8 = [0u8; 8];
    for &v in m.values() {
        LittleEndian::write_f64(&mut b8, v);
        out.extend_from_slice(&b8);
    }
    out
}

pub fn read_raw_matrix(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::BinaryParse {
            offset: 0,
            message: format!("file too short for header ({} bytes)", bytes.len()),
        });
    }
    if &bytes[0..4] != RAW_MATRIX_MAGIC {
        return Err(Error::BinaryParse {
            offset: 0,
            message: "bad magic, not a raw matrix file".into(),
        });
    }
    let version = LittleEndian::read_u16(&bytes[4..6]);
    if version != RAW_MATRIX_VERSION {
        return Err(Error::BinaryParse {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let rows = LittleEndian::read_u32(&bytes[6..10]) as usize;
    let cols = LittleEndian::read_u32(&bytes[10..14]) as usize;
    let width = bytes[14];
    if width != 8 {
        return Err(Error::BinaryParse {
            offset: 14,
            message: format!("unsupported element width {width}"),
        });
    }
    let expected = HEADER_LEN + rows.saturating_mul(cols).saturating_mul(8);
    if bytes.len() != expected {
        return Err(Error::BinaryParse {
            offset: HEADER_LEN,
            message: format!(
                "payload is {} bytes, expected {} for {rows}x{cols}",
                bytes.len() - HEADER_LEN,
                expected - HEADER_LEN
            ),
        });
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(LittleEndian::read_f64)
        .collect();
    DenseMatrix::from_vec(rows, cols, values)
}
