//! Binary MPS files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic      4 bytes  "LMPS"
//! version    u32
//! n_sites    u64
//! log_norm   f64
//! center     i64      (-1 when not canonical)
//! per site:  u64 left, u64 phys, u64 right, then left·phys·right f64 (row-major)
//! ```

use std::io::{Read, Write};

use super::MpsState;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MPS_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"LMPS";
// guards against absurd allocations from corrupt headers
const MAX_ELEMENTS: u64 = 1 << 32;

pub fn write_mps<W: Write>(w: &mut W, state: &MpsState) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&MPS_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(state.n_sites() as u64).to_le_bytes())?;
    w.write_all(&state.log_norm().to_le_bytes())?;
    let center = state.center().map_or(-1i64, |c| c as i64);
    w.write_all(&center.to_le_bytes())?;
    for t in state.tensors() {
        for &d in t.dims() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated MPS file: {e}")))?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

pub fn read_mps<R: Read>(r: &mut R) -> Result<MpsState> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an MPS file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(r)?);
    if version != MPS_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported MPS format version {version} (expected {MPS_FORMAT_VERSION})"
        )));
    }
    let n_sites = read_u64(r)?;
    if n_sites == 0 || n_sites > 1 << 20 {
        return Err(Error::Format(format!("implausible site count {n_sites}")));
    }
    let log_norm = f64::from_le_bytes(read_array(r)?);
    let center = i64::from_le_bytes(read_array(r)?);
    let mut tensors = Vec::with_capacity(n_sites as usize);
    for k in 0..n_sites {
        let dims = [read_u64(r)?, read_u64(r)?, read_u64(r)?];
        let count = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
        let count = match count {
            Some(c) if c <= MAX_ELEMENTS => c as usize,
            _ => return Err(Error::Format(format!("site {k}: implausible dims {dims:?}"))),
        };
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(read_array(r)?));
        }
        let dims: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
        tensors.push(Tensor::from_vec(&dims, data)?);
    }
    let mut state = MpsState::from_tensors(tensors, log_norm).map_err(|e| Error::Format(e.to_string()))?;
    let center = match center {
        -1 => None,
        c if c >= 0 && (c as u64) < n_sites => Some(c as usize),
        c => return Err(Error::Format(format!("center {c} out of range"))),
    };
    state.set_center(center);
    Ok(state)
}
