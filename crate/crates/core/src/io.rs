//! Binary tensor (`CTEN1`) and mask (`CMSK1`) file formats.
//!
//! ```text
//! CTEN1: b"CTEN1\0" | u32 N | N x u64 dims | prod(dims) x (f64 re, f64 im)
//! CMSK1: b"CMSK1\0" | u32 N | N x u64 dims | u64 count | count x N x u64 index
//! ```
//!
//! All integers and floats are little-endian; tensor data is in canonical
//! (first index fastest) order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, SamplingMask, C64};

pub const TENSOR_MAGIC: &[u8; 6] = b"CTEN1\0";
pub const MASK_MAGIC: &[u8; 6] = b"CMSK1\0";

// Guards allocation when a header is corrupt.
const MAX_ELEMENTS: u64 = 1 << 34;

fn format_err(format: &'static str, reason: impl Into<String>) -> Error {
    Error::Format { format, reason: reason.into() }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], format: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| format_err(format, format!("truncated input: {e}")))
}

fn read_u32<R: Read>(r: &mut R, format: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, format)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, format: &'static str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, format)?;
    Ok(u64::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 6], format: &'static str) -> Result<Vec<usize>> {
    let mut m = [0u8; 6];
    read_exact(r, &mut m, format)?;
    if &m != magic {
        return Err(format_err(format, "bad magic bytes"));
    }
    let order = read_u32(r, format)?;
    if order == 0 || order > 64 {
        return Err(format_err(format, format!("implausible order {order}")));
    }
    let mut dims = Vec::with_capacity(order as usize);
    let mut total: u64 = 1;
    for _ in 0..order {
        let d = read_u64(r, format)?;
        if d == 0 {
            return Err(format_err(format, "zero dimension"));
        }
        total = total
            .checked_mul(d)
            .filter(|&t| t <= MAX_ELEMENTS)
            .ok_or_else(|| format_err(format, "tensor too large"))?;
        dims.push(d as usize);
    }
    Ok(dims)
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 6], dims: &[usize]) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

pub fn write_tensor<W: Write>(w: &mut W, x: &ComplexTensor) -> std::io::Result<()> {
    write_header(w, TENSOR_MAGIC, x.dims())?;
    for z in x.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<ComplexTensor> {
    const F: &str = "CTEN1";
    let dims = read_header(r, TENSOR_MAGIC, F)?;
    let len: usize = dims.iter().product();
    let mut data = Vec::with_capacity(len);
    let mut b = [0u8; 16];
    for _ in 0..len {
        read_exact(r, &mut b, F)?;
        let re = f64::from_le_bytes(b[..8].try_into().unwrap());
        let im = f64::from_le_bytes(b[8..].try_into().unwrap());
        data.push(C64::new(re, im));
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| format_err(F, e.to_string()))? != 0 {
        return Err(format_err(F, "trailing bytes after tensor data"));
    }
    ComplexTensor::new(dims, data)
}

pub fn write_mask<W: Write>(w: &mut W, mask: &SamplingMask) -> std::io::Result<()> {
    write_header(w, MASK_MAGIC, mask.dims())?;
    w.write_all(&(mask.len() as u64).to_le_bytes())?;
    for idx in mask.multi_indices() {
        for i in idx {
            w.write_all(&(i as u64).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_mask<R: Read>(r: &mut R) -> Result<SamplingMask> {
    const F: &str = "CMSK1";
    let dims = read_header(r, MASK_MAGIC, F)?;
    let total: u64 = dims.iter().map(|&d| d as u64).product();
    let count = read_u64(r, F)?;
    if count > total {
        return Err(format_err(F, format!("count {count} exceeds {total} grid cells")));
    }
    let mut indices = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut idx = Vec::with_capacity(dims.len());
        for _ in 0..dims.len() {
            idx.push(read_u64(r, F)? as usize);
        }
        indices.push(idx);
    }
    let mask = SamplingMask::new(&dims, &indices)?;
    if mask.len() as u64 != count {
        return Err(format_err(F, "duplicate indices"));
    }
    Ok(mask)
}

pub fn save_tensor(path: impl AsRef<Path>, x: &ComplexTensor) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_tensor(&mut w, x).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<ComplexTensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tensor(&mut BufReader::new(file))
}

pub fn save_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_mask(&mut w, mask).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<SamplingMask> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_mask(&mut BufReader::new(file))
}
