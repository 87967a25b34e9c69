//! NMT1 tensor files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset      | size      | field                              |
//! |-------------|-----------|------------------------------------|
//! | 0           | 4         | magic `NMT1`                       |
//! | 4           | 2         | version (u16, currently 1)         |
//! | 6           | 1         | dtype (u8, 0 = f64)                |
//! | 7           | 1         | ndim (u8, 2..=8)                   |
//! | 8           | 8 · ndim  | extents (u64 each)                 |
//! | 8 + 8·ndim  | 8 · len   | values, last index fastest         |
//! | end − 4     | 4         | CRC-32 (IEEE) of all bytes before  |

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, MAX_MODES};

use super::{read_file, write_atomic};

pub const TENSOR_MAGIC: &[u8; 4] = b"NMT1";
pub const TENSOR_VERSION: u16 = 1;
pub const DTYPE_F64: u8 = 0;

pub fn encode_tensor(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.ndim() + 8 * t.len() + 4);
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.push(DTYPE_F64);
    out.push(t.ndim() as u8);
    for &d in t.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    if let Some(off) = (0..4).find(|&i| bytes.get(i) != Some(&TENSOR_MAGIC[i])) {
        if off >= bytes.len() {
            return Err(Error::Truncated(format!("{} bytes cannot hold a tensor header", bytes.len())));
        }
        return Err(Error::Format {
            offset: off as u64,
            message: "bad magic, expected NMT1".into(),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::Truncated(format!("{} bytes cannot hold a tensor header", bytes.len())));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TENSOR_VERSION {
        return Err(Error::Version {
            found: version,
            expected: TENSOR_VERSION,
        });
    }
    if bytes[6] != DTYPE_F64 {
        return Err(Error::Format {
            offset: 6,
            message: format!("unsupported dtype code {}", bytes[6]),
        });
    }
    let ndim = bytes[7] as usize;
    if !(2..=MAX_MODES).contains(&ndim) {
        return Err(Error::Format {
            offset: 7,
            message: format!("ndim {ndim} outside 2..={MAX_MODES}"),
        });
    }
    let header = 8 + 8 * ndim;
    if bytes.len() < header {
        return Err(Error::Truncated(format!("header needs {header} bytes, file has {}", bytes.len())));
    }
    let mut dims = Vec::with_capacity(ndim);
    for k in 0..ndim {
        let at = 8 + 8 * k;
        let d = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"));
        let d = usize::try_from(d).ok().filter(|&d| d > 0).ok_or_else(|| Error::Format {
            offset: at as u64,
            message: format!("extent {d} of mode {} is zero or too large", k + 1),
        })?;
        dims.push(d);
    }
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(header + 4))
        .ok_or_else(|| Error::Format {
            offset: 8,
            message: format!("dims {dims:?} overflow the addressable size"),
        })?;
    if bytes.len() != payload {
        return Err(Error::Truncated(format!(
            "dims {dims:?} need {payload} bytes, file has {}",
            bytes.len()
        )));
    }
    let body = &bytes[..payload - 4];
    let stored = u32::from_le_bytes(bytes[payload - 4..].try_into().expect("4-byte slice"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let data = body[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseTensor::new(dims, data)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    decode_tensor(&read_file(path)?)
}

/// A matrix as a 2-mode tensor (rows × cols).
pub fn matrix_to_tensor(m: &DMatrix<f64>) -> Result<DenseTensor> {
    DenseTensor::new(vec![m.nrows(), m.ncols()], m.transpose().as_slice().to_vec())
}

pub fn tensor_to_matrix(t: &DenseTensor) -> Result<DMatrix<f64>> {
    match *t.dims() {
        [r, c] => Ok(DMatrix::from_row_slice(r, c, t.data())),
        _ => Err(Error::Shape(format!("expected a 2-mode tensor, got dims {:?}", t.dims()))),
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_tensor(path, &matrix_to_tensor(m)?)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    tensor_to_matrix(&read_tensor(path)?)
}
