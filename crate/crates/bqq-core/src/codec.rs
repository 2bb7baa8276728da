//! Serialized code container, shared by every quantizer.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! magic "BQQC" | version u16 | standardization u8 (0 none / 1 plain / 2 constant)
//! [mean f64 | std f64]      when standardization != 0
//! method tag u8 | method payload
//! ```
//!
//! The BQQ payload carries its own standardization slot (the record is part
//! of the code), shape, `l`, `p`, the `3p + 1` scalars as 32-bit floats
//! (r, s, t per stack, then the aggregated bias), and the bit-packed `Y`/`Z`
//! matrices per stack, row-major, LSB first. Scalars of every method are
//! stored as `f32`, matching the memory-accounting convention.
//!
//! The per-stack bias split is not stored (only the aggregate counts toward
//! memory); decoding assigns the aggregate to the first stack.

use crate::baselines::bcq::BcqCode;
use crate::baselines::e8::{E8Code, E8Scales};
use crate::baselines::svd::{SvdCode, SvdFactor};
use crate::baselines::uq::UqCode;
use crate::baselines::vq::{VqCode, VqCodebook};
use crate::bqq::{BqqCode, BqqStack};
use crate::error::{Error, Result};
use crate::group::{GroupBlock, GroupedCode};
use crate::matrix::{BitMatrix, DenseMatrix, StandardizationRecord};
use crate::method::AnyCode;
use byteorder::{ByteOrder, LittleEndian};

pub const CODE_MAGIC: &[u8; 4] = b"BQQC";
pub const CODE_VERSION: u16 = 1;

const TAG_BQQ: u8 = 1;
const TAG_UQ: u8 = 2;
const TAG_BCQ: u8 = 3;
const TAG_SVD: u8 = 4;
const TAG_VQ: u8 = 6;
const TAG_E8: u8 = 7;
const TAG_GROUPED: u8 = 8;

// ---------------------------------------------------------------------------
// Byte cursor helpers
// ---------------------------------------------------------------------------

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        let mut b = [0u8; 2];
        LittleEndian::write_u16(&mut b, v);
        self.buf.extend_from_slice(&b);
    }

    fn u32(&mut self, v: u32) {
        let mut b = [0u8; 4];
        LittleEndian::write_u32(&mut b, v);
        self.buf.extend_from_slice(&b);
    }

    fn f32(&mut self, v: f64) {
        let mut b = [0u8; 4];
        LittleEndian::write_f32(&mut b, v as f32);
        self.buf.extend_from_slice(&b);
    }

    fn f64(&mut self, v: f64) {
        let mut b = [0u8; 8];
        LittleEndian::write_f64(&mut b, v);
        self.buf.extend_from_slice(&b);
    }

    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::BinaryParse {
                offset: self.pos,
                message: format!(
                    "unexpected end of data: need {n} bytes, {} left",
                    self.buf.len() - self.pos
                ),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(LittleEndian::read_u16(self.take(2)?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn usize32(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn f32(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f32(self.take(4)?) as f64)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }

    /// Guard allocations against corrupted counts: `count` items of at
    /// least `min_bytes_each` serialized bytes must still fit in the
    /// remaining buffer.
    fn check_count(&self, count: usize, min_bytes_each: usize) -> Result<()> {
        let remaining = self.buf.len() - self.pos;
        if count.saturating_mul(min_bytes_each.max(1)) > remaining {
            return Err(Error::BinaryParse {
                offset: self.pos,
                message: format!(
                    "count {count} is implausible for the {remaining} remaining bytes"
                ),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bit packing for narrow indices
// ---------------------------------------------------------------------------

fn pack_indices(values: &[u32], bits: u32) -> Vec<u8> {
    debug_assert!((1..=32).contains(&bits));
    let total_bits = values.len() * bits as usize;
    let mut out = vec![0u8; total_bits.div_ceil(8)];
    let mut bit_pos = 0usize;
    for &v in values {
        for b in 0..bits as usize {
            if (v >> b) & 1 == 1 {
                out[bit_pos / 8] |= 1 << (bit_pos % 8);
            }
            bit_pos += 1;
        }
    }
    out
}

fn unpack_indices(bytes: &[u8], bits: u32, count: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    let mut bit_pos = 0usize;
    for _ in 0..count {
        let mut v = 0u32;
        for b in 0..bits as usize {
            if (bytes[bit_pos / 8] >> (bit_pos % 8)) & 1 == 1 {
                v |= 1 << b;
            }
            bit_pos += 1;
        }
        out.push(v);
    }
    out
}

/// Element-count sanity cap shared by the payload readers, so corrupted
/// headers fail cleanly instead of attempting absurd allocations.
const MAX_ELEMENTS: usize = 1 << 31;

fn check_elements(rows: usize, cols: usize, offset: usize) -> Result<usize> {
    let elements = rows.saturating_mul(cols);
    if elements > MAX_ELEMENTS {
        return Err(Error::BinaryParse {
            offset,
            message: format!("implausible matrix size {rows}x{cols}"),
        });
    }
    Ok(elements)
}

fn index_bits_for(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        64 - ((k - 1) as u64).leading_zeros()
    }
}

// ---------------------------------------------------------------------------
// Standardization slot
// ---------------------------------------------------------------------------

fn write_standardization(w: &mut Writer, record: Option<&StandardizationRecord>) {
    match record {
        None => w.u8(0),
        Some(rec) => {
            w.u8(if rec.constant { 2 } else { 1 });
            w.f64(rec.mean);
            w.f64(rec.std);
        }
    }
}

fn read_standardization(r: &mut Reader) -> Result<Option<StandardizationRecord>> {
    match r.u8()? {
        0 => Ok(None),
        flag @ (1 | 2) => {
            let mean = r.f64()?;
            let std = r.f64()?;
            Ok(Some(StandardizationRecord {
                mean,
                std,
                constant: flag == 2,
            }))
        }
        other => Err(Error::BinaryParse {
            offset: r.pos - 1,
            message: format!("invalid standardization flag {other}"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Per-method payloads
// ---------------------------------------------------------------------------

fn write_bitmatrix(w: &mut Writer, m: &BitMatrix) {
    w.bytes(m.packed_bytes());
}

fn read_bitmatrix(r: &mut Reader, rows: usize, cols: usize) -> Result<BitMatrix> {
    let nbytes = (rows * cols).div_ceil(8);
    let bytes = r.take(nbytes)?.to_vec();
    BitMatrix::from_packed(rows, cols, bytes)
}

fn write_bqq(w: &mut Writer, code: &BqqCode) {
    write_standardization(w, code.standardization.as_ref());
    w.u32(code.rows as u32);
    w.u32(code.cols as u32);
    w.u32(code.l as u32);
    w.u32(code.stacks.len() as u32);
    for stack in &code.stacks {
        w.f32(stack.r);
        w.f32(stack.s);
        w.f32(stack.t);
    }
    w.f32(code.u_total);
    for stack in &code.stacks {
        write_bitmatrix(w, &stack.y);
        write_bitmatrix(w, &stack.z);
    }
}

fn read_bqq(r: &mut Reader) -> Result<BqqCode> {
    let standardization = read_standardization(r)?;
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    let l = r.usize32()?;
    let p = r.usize32()?;
    if p == 0 || rows == 0 || cols == 0 || l == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "BQQ header fields must be positive".into(),
        });
    }
    r.check_count(p, 12)?;
    check_elements(rows, l, r.pos)?;
    check_elements(l, cols, r.pos)?;
    let mut rst = Vec::with_capacity(p);
    for _ in 0..p {
        let rr = r.f32()?;
        let ss = r.f32()?;
        let tt = r.f32()?;
        rst.push((rr, ss, tt));
    }
    let u_total = r.f32()?;
    let mut stacks = Vec::with_capacity(p);
    for (i, (rr, ss, tt)) in rst.into_iter().enumerate() {
        let y = read_bitmatrix(r, rows, l)?;
        let z = read_bitmatrix(r, l, cols)?;
        // The per-stack bias split is not serialized; the aggregate lands
        // on the first stack so the code invariant still holds.
        let u = if i == 0 { u_total } else { 0.0 };
        stacks.push(BqqStack {
            y,
            z,
            r: rr,
            s: ss,
            t: tt,
            u,
        });
    }
    Ok(BqqCode {
        stacks,
        u_total,
        rows,
        cols,
        l,
        standardization,
    })
}

fn write_uq(w: &mut Writer, code: &UqCode) {
    w.u32(code.rows as u32);
    w.u32(code.cols as u32);
    w.u32(code.bits);
    w.f32(code.scale);
    w.f32(code.bias);
    w.bytes(&pack_indices(&code.indices, code.bits));
}

fn read_uq(r: &mut Reader) -> Result<UqCode> {
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    let bits = r.u32()?;
    if bits == 0 || bits > 24 || rows == 0 || cols == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "invalid UQ header".into(),
        });
    }
    let scale = r.f32()?;
    let bias = r.f32()?;
    let count = check_elements(rows, cols, r.pos)?;
    let nbytes = (count * bits as usize).div_ceil(8);
    let indices = unpack_indices(r.take(nbytes)?, bits, count);
    let max = (1u64 << bits) - 1;
    if indices.iter().any(|&q| q as u64 > max) {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "UQ index out of range".into(),
        });
    }
    Ok(UqCode {
        bits,
        rows,
        cols,
        indices,
        scale,
        bias,
    })
}

fn write_bcq(w: &mut Writer, code: &BcqCode) {
    w.u32(code.rows as u32);
    w.u32(code.cols as u32);
    w.u32(code.bases.len() as u32);
    for &a in &code.scales {
        w.f32(a);
    }
    for basis in &code.bases {
        write_bitmatrix(w, basis);
    }
}

fn read_bcq(r: &mut Reader) -> Result<BcqCode> {
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    let p = r.usize32()?;
    if rows == 0 || cols == 0 || p == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "invalid BCQ header".into(),
        });
    }
    r.check_count(p, 4)?;
    check_elements(rows, cols, r.pos)?;
    let mut scales = Vec::with_capacity(p);
    for _ in 0..p {
        scales.push(r.f32()?);
    }
    let mut bases = Vec::with_capacity(p);
    for _ in 0..p {
        bases.push(read_bitmatrix(r, rows, cols)?);
    }
    Ok(BcqCode {
        rows,
        cols,
        bases,
        scales,
    })
}

fn write_dense_f32(w: &mut Writer, m: &DenseMatrix) {
    w.u32(m.rows() as u32);
    w.u32(m.cols() as u32);
    for &v in m.values() {
        w.f32(v);
    }
}

fn read_dense_f32(r: &mut Reader) -> Result<DenseMatrix> {
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    if rows == 0 || cols == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "empty dense block".into(),
        });
    }
    check_elements(rows, cols, r.pos)?;
    r.check_count(rows * cols, 4)?;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        values.push(r.f32()?);
    }
    DenseMatrix::from_vec(rows, cols, values)
}

fn write_svd(w: &mut Writer, code: &SvdCode) {
    w.u32(code.rank as u32);
    for factor in [&code.left, &code.right] {
        match factor {
            SvdFactor::Real(m) => {
                w.u8(0);
                write_dense_f32(w, m);
            }
            SvdFactor::Quantized(q) => {
                w.u8(1);
                write_uq(w, q);
            }
        }
    }
}

fn read_svd(r: &mut Reader) -> Result<SvdCode> {
    let rank = r.usize32()?;
    let mut factors = Vec::with_capacity(2);
    for _ in 0..2 {
        let factor = match r.u8()? {
            0 => SvdFactor::Real(read_dense_f32(r)?),
            1 => SvdFactor::Quantized(read_uq(r)?),
            other => {
                return Err(Error::BinaryParse {
                    offset: r.pos - 1,
                    message: format!("invalid SVD factor tag {other}"),
                })
            }
        };
        factors.push(factor);
    }
    let right = factors.pop().unwrap();
    let left = factors.pop().unwrap();
    Ok(SvdCode { rank, left, right })
}

fn write_vq(w: &mut Writer, code: &VqCode) {
    w.u32(code.rows as u32);
    w.u32(code.cols as u32);
    w.u32(code.vec_dim as u32);
    w.u32(code.pad_len as u32);
    w.u32(code.num_centroids() as u32);
    match &code.codebook {
        VqCodebook::Real(m) => {
            w.u8(0);
            write_dense_f32(w, m);
        }
        VqCodebook::Quantized(q) => {
            w.u8(1);
            write_uq(w, q);
        }
    }
    let bits = index_bits_for(code.num_centroids());
    if bits > 0 {
        w.bytes(&pack_indices(&code.assignments, bits));
    }
}

fn read_vq(r: &mut Reader) -> Result<VqCode> {
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    let vec_dim = r.usize32()?;
    let pad_len = r.usize32()?;
    let k = r.usize32()?;
    if rows == 0 || cols == 0 || vec_dim == 0 || k == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "invalid VQ header".into(),
        });
    }
    let codebook = match r.u8()? {
        0 => VqCodebook::Real(read_dense_f32(r)?),
        1 => VqCodebook::Quantized(read_uq(r)?),
        other => {
            return Err(Error::BinaryParse {
                offset: r.pos - 1,
                message: format!("invalid VQ codebook tag {other}"),
            })
        }
    };
    check_elements(rows, cols, r.pos)?;
    let n_vec = (rows * cols + pad_len) / vec_dim;
    if n_vec == 0 || !(rows * cols + pad_len).is_multiple_of(vec_dim) {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "VQ shape is not a whole number of vectors".into(),
        });
    }
    let bits = index_bits_for(k);
    let assignments = if bits == 0 {
        vec![0u32; n_vec]
    } else {
        let nbytes = (n_vec * bits as usize).div_ceil(8);
        let assignments = unpack_indices(r.take(nbytes)?, bits, n_vec);
        if assignments.iter().any(|&a| a as usize >= k) {
            return Err(Error::BinaryParse {
                offset: r.pos,
                message: "VQ assignment out of range".into(),
            });
        }
        assignments
    };
    Ok(VqCode {
        rows,
        cols,
        vec_dim,
        pad_len,
        codebook,
        assignments,
    })
}

fn write_e8(w: &mut Writer, code: &E8Code) {
    w.u32(code.rows as u32);
    w.u32(code.cols as u32);
    w.u32(code.pad_len as u32);
    w.u32(code.rounds() as u32);
    for (indices, scales) in code.indices.iter().zip(&code.scales) {
        w.bytes(indices);
        match scales {
            E8Scales::Raw(values) => {
                w.u8(0);
                for &v in values {
                    w.f32(v);
                }
            }
            E8Scales::Quantized(q) => {
                w.u8(1);
                write_uq(w, q);
            }
        }
    }
}

fn read_e8(r: &mut Reader) -> Result<E8Code> {
    let rows = r.usize32()?;
    let cols = r.usize32()?;
    let pad_len = r.usize32()?;
    let rounds = r.usize32()?;
    if rows == 0 || cols == 0 || rounds == 0 {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "invalid E8 header".into(),
        });
    }
    check_elements(rows, cols, r.pos)?;
    let n_vec = (rows * cols + pad_len) / 8;
    if !(rows * cols + pad_len).is_multiple_of(8) {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: "E8 payload is not a whole number of 8-vectors".into(),
        });
    }
    r.check_count(rounds.saturating_mul(n_vec), 1)?;
    let mut indices = Vec::with_capacity(rounds);
    let mut scales = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let idx = r.take(n_vec)?.to_vec();
        if idx.iter().any(|&i| i >= 240) {
            return Err(Error::BinaryParse {
                offset: r.pos,
                message: "E8 index out of range".into(),
            });
        }
        indices.push(idx);
        let s = match r.u8()? {
            0 => {
                let mut values = Vec::with_capacity(n_vec);
                for _ in 0..n_vec {
                    values.push(r.f32()?);
                }
                E8Scales::Raw(values)
            }
            1 => E8Scales::Quantized(read_uq(r)?),
            other => {
                return Err(Error::BinaryParse {
                    offset: r.pos - 1,
                    message: format!("invalid E8 scale tag {other}"),
                })
            }
        };
        scales.push(s);
    }
    Ok(E8Code {
        rows,
        cols,
        pad_len,
        indices,
        scales,
    })
}

fn write_any(w: &mut Writer, code: &AnyCode) {
    match code {
        AnyCode::Bqq(c) => {
            w.u8(TAG_BQQ);
            write_bqq(w, c);
        }
        AnyCode::Uq(c) => {
            w.u8(TAG_UQ);
            write_uq(w, c);
        }
        AnyCode::Bcq(c) => {
            w.u8(TAG_BCQ);
            write_bcq(w, c);
        }
        AnyCode::Svd(c) => {
            w.u8(TAG_SVD);
            write_svd(w, c);
        }
        AnyCode::Vq(c) => {
            w.u8(TAG_VQ);
            write_vq(w, c);
        }
        AnyCode::E8(c) => {
            w.u8(TAG_E8);
            write_e8(w, c);
        }
        AnyCode::Grouped(g) => {
            w.u8(TAG_GROUPED);
            w.u32(g.rows as u32);
            w.u32(g.cols as u32);
            w.u32(g.group_rows as u32);
            w.u32(g.group_cols as u32);
            w.u32(g.blocks.len() as u32);
            for block in &g.blocks {
                w.u32(block.row0 as u32);
                w.u32(block.col0 as u32);
                w.u32(block.rows as u32);
                w.u32(block.cols as u32);
                write_any(w, &block.code);
            }
        }
    }
}

fn read_any(r: &mut Reader) -> Result<AnyCode> {
    Ok(match r.u8()? {
        TAG_BQQ => AnyCode::Bqq(read_bqq(r)?),
        TAG_UQ => AnyCode::Uq(read_uq(r)?),
        TAG_BCQ => AnyCode::Bcq(read_bcq(r)?),
        TAG_SVD => AnyCode::Svd(read_svd(r)?),
        TAG_VQ => AnyCode::Vq(read_vq(r)?),
        TAG_E8 => AnyCode::E8(read_e8(r)?),
        TAG_GROUPED => {
            let rows = r.usize32()?;
            let cols = r.usize32()?;
            let group_rows = r.usize32()?;
            let group_cols = r.usize32()?;
            let count = r.usize32()?;
            r.check_count(count, 17)?;
            let mut blocks = Vec::with_capacity(count);
            for _ in 0..count {
                let row0 = r.usize32()?;
                let col0 = r.usize32()?;
                let brows = r.usize32()?;
                let bcols = r.usize32()?;
                let code = read_any(r)?;
                if matches!(code, AnyCode::Grouped(_)) {
                    return Err(Error::BinaryParse {
                        offset: r.pos,
                        message: "nested grouped codes are not allowed".into(),
                    });
                }
                blocks.push(GroupBlock {
                    row0,
                    col0,
                    rows: brows,
                    cols: bcols,
                    code,
                });
            }
            AnyCode::Grouped(Box::new(GroupedCode {
                rows,
                cols,
                group_rows,
                group_cols,
                blocks,
            }))
        }
        other => {
            return Err(Error::BinaryParse {
                offset: r.pos - 1,
                message: format!("unknown method tag {other}"),
            })
        }
    })
}

// ---------------------------------------------------------------------------
// Container entry points
// ---------------------------------------------------------------------------

/// Serialize a code, with an optional container-level standardization
/// record (used for methods whose code types do not carry one; BQQ codes
/// keep theirs inside the payload).
pub fn encode_code(code: &AnyCode, standardization: Option<&StandardizationRecord>) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(CODE_MAGIC);
    w.u16(CODE_VERSION);
    write_standardization(&mut w, standardization);
    write_any(&mut w, code);
    w.buf
}

/// Decode a serialized code and its container-level standardization record.
pub fn decode_code(bytes: &[u8]) -> Result<(AnyCode, Option<StandardizationRecord>)> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != CODE_MAGIC {
        return Err(Error::BinaryParse {
            offset: 0,
            message: "bad magic, not a code file".into(),
        });
    }
    let version = r.u16()?;
    if version != CODE_VERSION {
        return Err(Error::BinaryParse {
            offset: 4,
            message: format!("unsupported code version {version}"),
        });
    }
    let standardization = read_standardization(&mut r)?;
    let code = read_any(&mut r)?;
    if !r.done() {
        return Err(Error::BinaryParse {
            offset: r.pos,
            message: format!("{} trailing bytes after the payload", bytes.len() - r.pos),
        });
    }
    Ok((code, standardization))
}
