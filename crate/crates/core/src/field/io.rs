//! Flat little-endian binary format.
//!
//! Layout: d as u64, then d extents (u64), d lower corners (f64), d upper
//! corners (f64), d spacings (f64), then all voxel values (f64) in row-major
//! order with the last axis fastest.

use super::{Grid, ScalarField, DEFAULT_VOXEL_BUDGET};
use crate::error::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_field(f: &ScalarField, path: &Path) -> Result<()> {
    let dense = f.to_dense(DEFAULT_VOXEL_BUDGET)?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let g = &dense.grid;
    w.write_all(&(g.dim() as u64).to_le_bytes())?;
    for &n in &g.shape {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in g.lo.iter().chain(&g.hi).chain(&g.spacing) {
        w.write_all(&v.to_le_bytes())?;
    }
    if let super::Storage::Dense(vals) = &dense.storage {
        for v in vals {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let d = read_u64(&mut r)? as usize;
    if !(2..=16).contains(&d) {
        return Err(Error::Format(format!("dimension {d}")));
    }
    let shape = (0..d).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let mut reals = (0..3 * d).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let spacing = reals.split_off(2 * d);
    let hi = reals.split_off(d);
    let mut grid = Grid::new(reals, hi, shape).map_err(|e| Error::Format(e.to_string()))?;
    grid.spacing = spacing;
    super::guard(&grid, DEFAULT_VOXEL_BUDGET)?;
    let n = grid.voxel_count() as usize;
    let values = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    ScalarField::dense(grid, values).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Grid::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0], vec![4, 3, 5]).unwrap();
        let f = ScalarField::from_fn(g, |y| (y[0] + y[1] * y[2]).abs()).unwrap();
        let path = std::env::temp_dir().join(format!("momentlab-io-{}.bin", std::process::id()));
        write_field(&f, &path).unwrap();
        let back = read_field(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back, f);
        let bytes = 8 + 3 * 8 + 9 * 8 + 60 * 8;
        assert_eq!(f.grid.voxel_count() * 8 + 104, bytes as u128);
    }
}
