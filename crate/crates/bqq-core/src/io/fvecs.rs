//! fvecs vector files: each record is a little-endian `u32` dimension
//! followed by that many little-endian `f32` values.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use byteorder::{ByteOrder, LittleEndian};

/// A parsed fvecs file: uniform-dimension vectors.
///
/// `dim` is `None` only for an empty file.
#[derive(Debug, Clone, PartialEq)]
pub struct FvecsRecordSet {
    pub dim: Option<usize>,
    pub vectors: Vec<Vec<f64>>,
}

impl FvecsRecordSet {
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Stack the vectors as matrix rows (one row per vector).
    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        let dim = self.dim.ok_or(Error::EmptyMatrix)?;
        let values = self.vectors.iter().flatten().copied().collect();
        DenseMatrix::from_vec(self.vectors.len(), dim, values)
    }
}

pub fn parse_fvecs(bytes: &[u8]) -> Result<FvecsRecordSet> {
    let mut offset = 0usize;
    let mut dim: Option<usize> = None;
    let mut vectors = Vec::new();
    while offset < bytes.len() {
        if bytes.len() - offset < 4 {
            return Err(Error::BinaryParse {
                offset,
                message: format!(
                    "{} trailing bytes do not form an fvecs record header",
                    bytes.len() - offset
                ),
            });
        }
        let d = LittleEndian::read_u32(&bytes[offset..offset + 4]) as usize;
        if d == 0 {
            return Err(Error::BinaryParse {
                offset,
                message: "record dimension must be positive".into(),
            });
        }
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::BinaryParse {
                    offset,
                    message: format!("record dimension {d} differs from first record's {expected}"),
                });
            }
            _ => {}
        }
        offset += 4;
        let payload = d * 4;
        if bytes.len() - offset < payload {
            return Err(Error::BinaryParse {
                offset,
                message: format!(
                    "truncated record: need {payload} value bytes, found {}",
                    bytes.len() - offset
                ),
            });
        }
        let mut vector = Vec::with_capacity(d);
        for k in 0..d {
            let raw = LittleEndian::read_f32(&bytes[offset + 4 * k..offset + 4 * k + 4]);
            if !raw.is_finite() {
                return Err(Error::BinaryParse {
                    offset: offset + 4 * k,
                    message: format!("non-finite value {raw}"),
                });
            }
            vector.push(raw as f64);
        }
        offset += payload;
        vectors.push(vector);
    }
    Ok(FvecsRecordSet { dim, vectors })
}

/// Serialize vectors to fvecs bytes. Values are stored as `f32`.
pub fn write_fvecs(vectors: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let dim = vectors.first().map(|v| v.len());
    for (i, vector) in vectors.iter().enumerate() {
        if vector.is_empty() || Some(vector.len()) != dim {
            return Err(Error::invalid(format!(
                "vector {i} has length {}, expected {:?}",
                vector.len(),
                dim
            )));
        }
        let mut header = [0u8; 4];
        LittleEndian::write_u32(&mut header, vector.len() as u32);
        out.extend_from_slice(&header);
        for &v in vector {
            let mut buf = [0u8; 4];
            LittleEndian::write_f32(&mut buf, v as f32);
            out.extend_from_slice(&buf);
        }
    }
    Ok(out)
}
