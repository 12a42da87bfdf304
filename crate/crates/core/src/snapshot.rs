//! Binary snapshot container for full states.
//!
//! Layout, all little-endian: an 8-byte magic string, a u32 version, the
//! grid size N (u32), the half-width L (f64), the band J (u32), the time
//! t (f64), then for j = -J..=J in order the row-major mode field as
//! interleaved re/im f64 pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::Field2;
use crate::grid::SpatialGrid;
use crate::resonance::ModeBand;
use crate::state::VectorField;

pub const MAGIC: &[u8; 8] = b"RNLSSNAP";
pub const VERSION: u32 = 1;

pub fn write_snapshot(mut w: impl Write, state: &VectorField, t: f64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(state.grid().n() as u32).to_le_bytes())?;
    w.write_all(&state.grid().half_width().to_le_bytes())?;
    w.write_all(&(state.band().j_max() as u32).to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for (_, field) in state.modes() {
        for v in field.as_slice() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<(VectorField, f64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CoreError::BadSnapshot("wrong magic string".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CoreError::BadSnapshot(format!(
            "unsupported version {version}"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let half_width = read_f64(&mut r)?;
    let j_max = read_u32(&mut r)?;
    let t = read_f64(&mut r)?;

    let grid = SpatialGrid::new(half_width, n)
        .map_err(|e| CoreError::BadSnapshot(format!("bad grid header: {e}")))?;
    let band = ModeBand::new(j_max)
        .map_err(|e| CoreError::BadSnapshot(format!("bad band header: {e}")))?;
    let state = read_modes(&mut r, &grid, band, t)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(CoreError::BadSnapshot("trailing bytes after payload".into()));
    }
    Ok((state, t))
}

fn read_modes(
    r: &mut impl Read,
    grid: &Arc<SpatialGrid>,
    band: ModeBand,
    _t: f64,
) -> Result<VectorField> {
    let n = grid.n();
    let mut modes = Vec::with_capacity(band.mode_count());
    let mut buf = vec![0u8; n * n * 16];
    for _ in 0..band.mode_count() {
        r.read_exact(&mut buf).map_err(|_| {
            CoreError::BadSnapshot("truncated mode payload".into())
        })?;
        let mut data = Vec::with_capacity(n * n);
        for chunk in buf.chunks_exact(16) {
            let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        modes.push(Field2::from_vec(n, data));
    }
    Ok(VectorField::from_modes(grid.clone(), band, modes))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_snapshot_file(path: impl AsRef<Path>, state: &VectorField, t: f64) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_snapshot(&mut w, state, t)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_file(path: impl AsRef<Path>) -> Result<(VectorField, f64)> {
    let file = File::open(path)?;
    read_snapshot(BufReader::new(file))
}
