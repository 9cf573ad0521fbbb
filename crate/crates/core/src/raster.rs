//! Binary raster dumps of a single field.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content            |
//! |--------|------|--------------------|
//! | 0      | 4    | magic `TIGR`       |
//! | 4      | 4    | u32 version (1)    |
//! | 8      | 4    | u32 dim            |
//! | 12     | 4    | u32 nx             |
//! | 16     | 4    | u32 ny             |
//! | 20     | 4    | zero padding       |
//! | 24     | 8    | f64 time           |
//! | 32     | 8·N  | f64 values, row-major, `j` slow |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: &[u8; 4] = b"TIGR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_raster<W: Write>(mut out: W, field: &ScalarField, time: f64) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(g.nx() as u32).to_le_bytes());
    header[16..20].copy_from_slice(&(g.ny() as u32).to_le_bytes());
    header[24..32].copy_from_slice(&time.to_le_bytes());
    out.write_all(&header)?;

    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a raster back; returns the field and its snapshot time.
pub fn read_raster<R: Read>(mut input: R) -> Result<(ScalarField, f64)> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let grid = Grid::new(word(8) as usize, word(12) as usize, word(16) as usize)?;
    let time = f64::from_le_bytes(header[24..32].try_into().unwrap());

    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            8 * grid.len(),
            body.len()
        )));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((ScalarField::from_vec(grid, values)?, time))
}
