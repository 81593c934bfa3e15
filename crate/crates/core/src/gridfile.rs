//! `HGF1` grid-function files.
//!
//! Layout: the magic bytes `HGF1`, then little-endian `u32` values `n`,
//! r-count and t-count, then the r nodes, the t nodes and the values as
//! little-endian `f64`. Values are row-major in `r`, i.e. node `(i, j)` is at
//! offset `i * t_count + j`, matching [`AxiGrid::index`].

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{AxiGrid, GridFn};
use crate::group::Dim;

pub const MAGIC: &[u8; 4] = b"HGF1";

/// Refuse headers that would need more than this many nodes.
const MAX_NODES: u64 = 1 << 28;

pub fn write_gridfn<W: Write>(mut w: W, grid: &AxiGrid, u: &GridFn) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::Grid(format!(
            "grid function has {} values, grid has {} nodes",
            u.len(),
            grid.len()
        )));
    }
    let mut buf = Vec::with_capacity(16 + 8 * (grid.nr() + grid.nt() + grid.len()));
    buf.extend_from_slice(MAGIC);
    for v in [grid.dim().n(), grid.nr(), grid.nt()] {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for x in grid.r_nodes().iter().chain(grid.t_nodes()).chain(&u.values) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_gridfn<R: Read>(mut r: R) -> Result<(AxiGrid, GridFn)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse(&bytes)
}

pub fn save(path: &Path, grid: &AxiGrid, u: &GridFn) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_gridfn(std::io::BufWriter::new(file), grid, u)
}

pub fn load(path: &Path) -> Result<(AxiGrid, GridFn)> {
    parse(&std::fs::read(path)?)
}

fn parse(bytes: &[u8]) -> Result<(AxiGrid, GridFn)> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not an HGF1 file (bad magic bytes)".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as u64;
    let (n, nr, nt) = (word(0), word(1), word(2));
    if nr.saturating_mul(nt) > MAX_NODES {
        return Err(Error::Format(format!("grid {nr}x{nt} is too large")));
    }
    let count = nr + nt + nr * nt;
    let expected = 16 + 8 * count;
    if bytes.len() as u64 != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for a {nr}x{nt} grid, found {}",
            bytes.len()
        )));
    }
    let floats: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if floats.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite value in grid file".into()));
    }
    let (nr, nt) = (nr as usize, nt as usize);
    let dim = Dim::new(n as usize)?;
    let grid = AxiGrid::from_nodes(dim, floats[..nr].to_vec(), floats[nr..nr + nt].to_vec())?;
    Ok((grid, GridFn::new(floats[nr + nt..].to_vec())))
}
