//! Self-describing little-endian array container.
//!
//! ```text
//! offset 0   8 bytes   magic "FSYN0001"
//! offset 8   4 bytes   header length L, u32 little-endian
//! offset 12  L bytes   JSON {"dtype":"f32"|"c64","shape":[...],"order":"row-major"}
//! offset 12+L          payload, row-major, little-endian f32
//!                      (c64 = interleaved real, imaginary f32 pairs)
//! ```

use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FSYN0001";

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F32(ArrayD<f32>),
    C64(ArrayD<Complex32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
    order: String,
}

impl ArrayData {
    pub fn dtype(&self) -> &'static str {
        match self {
            ArrayData::F32(_) => "f32",
            ArrayData::C64(_) => "c64",
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            ArrayData::F32(a) => a.shape(),
            ArrayData::C64(a) => a.shape(),
        }
    }

    pub fn into_f32(self) -> Result<ArrayD<f32>> {
        match self {
            ArrayData::F32(a) => Ok(a),
            other => Err(Error::UnsupportedDtype(format!(
                "expected f32, found {}",
                other.dtype()
            ))),
        }
    }

    pub fn into_c64(self) -> Result<ArrayD<Complex32>> {
        match self {
            ArrayData::C64(a) => Ok(a),
            other => Err(Error::UnsupportedDtype(format!(
                "expected c64, found {}",
                other.dtype()
            ))),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let shape = self.shape().to_vec();
        check_shape(&shape)?;
        let header = serde_json::to_vec(&Header {
            dtype: self.dtype().to_string(),
            shape,
            order: "row-major".to_string(),
        })?;
        let elems: usize = self.shape().iter().product();
        let elem_size = element_size(self.dtype()).expect("known dtype");
        let mut out = Vec::with_capacity(12 + header.len() + elems * elem_size);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        match self {
            ArrayData::F32(a) => {
                for v in a.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            ArrayData::C64(a) => {
                for v in a.iter() {
                    out.extend_from_slice(&v.re.to_le_bytes());
                    out.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let header_end = 12usize
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len())
            .ok_or(Error::TruncatedPayload {
                expected: 12 + hlen,
                found: bytes.len(),
            })?;
        let header: Header = serde_json::from_slice(&bytes[12..header_end])?;
        if header.order != "row-major" {
            return Err(Error::UnsupportedDtype(format!("order {}", header.order)));
        }
        check_shape(&header.shape)?;
        let elem_size = element_size(&header.dtype)
            .ok_or_else(|| Error::UnsupportedDtype(header.dtype.clone()))?;
        let elems: usize = header.shape.iter().product();
        let payload = &bytes[header_end..];
        if payload.len() != elems * elem_size {
            return Err(Error::TruncatedPayload {
                expected: elems * elem_size,
                found: payload.len(),
            });
        }
        let floats: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let shape = IxDyn(&header.shape);
        Ok(match header.dtype.as_str() {
            "f32" => ArrayData::F32(ArrayD::from_shape_vec(shape, floats).expect("length checked")),
            _ => {
                let vals = floats
                    .chunks_exact(2)
                    .map(|p| Complex32::new(p[0], p[1]))
                    .collect();
                ArrayData::C64(ArrayD::from_shape_vec(shape, vals).expect("length checked"))
            }
        })
    }
}

fn element_size(dtype: &str) -> Option<usize> {
    match dtype {
        "f32" => Some(4),
        "c64" => Some(8),
        _ => None,
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::BadShape(shape.to_vec()));
    }
    Ok(())
}

/// Write `x` to `path`; returns the number of bytes written.
pub fn write_array(x: &ArrayData, path: &Path) -> Result<usize> {
    let bytes = x.to_bytes()?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

pub fn read_array(path: &Path) -> Result<ArrayData> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ArrayData::from_bytes(&bytes)
}
