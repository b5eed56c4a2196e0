//! Flat binary and CSV layouts for sampled fields.
//!
//! Binary layout (little endian): a 64-byte header
//!
//! | offset | size | content                   |
//! |--------|------|---------------------------|
//! | 0      | 8    | magic `QLPDFLD\0`         |
//! | 8      | 4    | version (u32, currently 1) |
//! | 12     | 4    | dim (u32)                 |
//! | 16     | 4    | N (u32)                   |
//! | 20     | 4    | components (u32)          |
//! | 24     | 8    | M, number of frames (u64) |
//! | 32     | 8    | L (f64)                   |
//! | 40     | 24   | zero padding              |
//!
//! followed by `M` times and then the frames, row-major, one after another.

use std::io::{BufRead, Read, Write};

use super::{Grid, SpaceTimeField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QLPDFLD\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

pub fn write_binary<W: Write>(field: &SpaceTimeField, mut w: W) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..8].copy_from_slice(MAGIC);
    header[8..12].copy_from_slice(&VERSION.to_le_bytes());
    header[12..16].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[16..20].copy_from_slice(&(g.n() as u32).to_le_bytes());
    header[20..24].copy_from_slice(&(field.components() as u32).to_le_bytes());
    header[24..32].copy_from_slice(&(field.len() as u64).to_le_bytes());
    header[32..40].copy_from_slice(&g.length().to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * (field.len() + field.frames().iter().map(Vec::len).sum::<usize>()));
    for t in field.times() {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for f in field.frames() {
        for v in f {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn to_binary(field: &SpaceTimeField) -> Vec<u8> {
    let mut out = Vec::new();
    write_binary(field, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SpaceTimeField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..8] != MAGIC {
        return Err(Error::InvalidParameter("not a field dump (bad magic)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::InvalidParameter(format!("unsupported field dump version {version}")));
    }
    let dim = u32_at(12) as usize;
    let n = u32_at(16) as usize;
    let components = u32_at(20) as usize;
    let m = u64::from_le_bytes(header[24..32].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(header[32..40].try_into().unwrap());
    let grid = Grid::new(dim, n, length)?;
    let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let times = read_f64s(m)?;
    let per = components * grid.cells();
    let frames = (0..m).map(|_| read_f64s(per)).collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(grid, times, components, frames)
}

/// CSV: a `# dim,N,L,M,components` header line, then one row per frame
/// starting with its time.
pub fn write_csv<W: Write>(field: &SpaceTimeField, mut w: W) -> Result<()> {
    let g = field.grid();
    writeln!(w, "# dim,N,L,M,components")?;
    writeln!(w, "# {},{},{:e},{},{}", g.dim(), g.n(), g.length(), field.len(), field.components())?;
    for (t, f) in field.times().iter().zip(field.frames()) {
        write!(w, "{t:e}")?;
        for v in f {
            write!(w, ",{v:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<SpaceTimeField> {
    let bad = |m: &str| Error::InvalidParameter(format!("malformed field csv: {m}"));
    let mut lines = r.lines();
    lines.next().ok_or_else(|| bad("missing header"))??;
    let meta = lines.next().ok_or_else(|| bad("missing metadata"))??;
    let parts: Vec<&str> = meta.trim_start_matches('#').trim().split(',').collect();
    if parts.len() != 5 {
        return Err(bad("metadata needs five entries"));
    }
    let p = |i: usize| parts[i].trim().parse::<f64>().map_err(|_| bad("metadata not numeric"));
    let grid = Grid::new(p(0)? as usize, p(1)? as usize, p(2)?)?;
    let m = p(3)? as usize;
    let components = p(4)? as usize;
    let mut times = Vec::with_capacity(m);
    let mut frames = Vec::with_capacity(m);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut vals = line.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad("value not numeric")));
        times.push(vals.next().ok_or_else(|| bad("empty row"))??);
        frames.push(vals.collect::<Result<Vec<_>>>()?);
    }
    if times.len() != m {
        return Err(bad("frame count does not match header"));
    }
    SpaceTimeField::new(grid, times, components, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceTimeField {
        let g = Grid::new(2, 4, 1.5).unwrap();
        SpaceTimeField::from_fn(g, &[0.0, 0.25, 1.0], |t, x| t + x[0] * 3.0 - x[1]).unwrap()
    }

    #[test]
    fn header_is_64_bytes() {
        let bytes = to_binary(&sample());
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * (3 + 3 * 16));
    }

    #[test]
    fn binary_and_csv_reproduce_field() {
        let f = sample();
        let back = read_binary(&to_binary(&f)[..]).unwrap();
        assert_eq!(back, f);
        let mut csv = Vec::new();
        write_csv(&f, &mut csv).unwrap();
        let back = read_csv(&csv[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = to_binary(&sample());
        bytes[0] = b'X';
        assert!(read_binary(&bytes[..]).is_err());
    }
}
