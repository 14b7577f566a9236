//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `SBPF`                              |
//! | 4      | 4    | format version (u32, currently 1)         |
//! | 8      | 1    | dim                                       |
//! | 9      | 1    | space tag: 0 physical, 1 frequency        |
//! | 10     | 1    | dtype: 0 complex64 (2 x f32), 1 complex128 (2 x f64) |
//! | 11     | 1    | reserved, 0                               |
//! | 12     | 8    | n (u64)                                   |
//! | 20     | 8    | box length L (f64)                        |
//! | 28     | 8    | time (f64)                                |
//! | 36     | ...  | n^dim (re, im) pairs, row-major           |
//!
//! Exports default to complex64; checkpoints use complex128 so that a restart
//! is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, SbpError};
use crate::field::{ComplexField, Space};
use crate::grid::GridSpec;

pub const MAGIC: &[u8; 4] = b"SBPF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Complex64,
    Complex128,
}

impl Precision {
    fn tag(self) -> u8 {
        match self {
            Precision::Complex64 => 0,
            Precision::Complex128 => 1,
        }
    }
}

pub fn write_snapshot<W: Write>(
    mut w: W,
    field: &ComplexField,
    time: f64,
    precision: Precision,
) -> Result<()> {
    let g = field.grid();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.push(g.dim() as u8);
    header.push(match field.space() {
        Space::Physical => 0,
        Space::Frequency => 1,
    });
    header.push(precision.tag());
    header.push(0);
    header.extend_from_slice(&(g.n() as u64).to_le_bytes());
    header.extend_from_slice(&g.box_length().to_le_bytes());
    header.extend_from_slice(&time.to_le_bytes());
    w.write_all(&header)?;

    let width = match precision {
        Precision::Complex64 => 8,
        Precision::Complex128 => 16,
    };
    let mut body = Vec::with_capacity(field.values().len() * width);
    for v in field.values() {
        match precision {
            Precision::Complex64 => {
                body.extend_from_slice(&(v.re as f32).to_le_bytes());
                body.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            Precision::Complex128 => {
                body.extend_from_slice(&v.re.to_le_bytes());
                body.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(ComplexField, f64)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| SbpError::Format(format!("truncated header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(SbpError::Format("missing SBPF magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SbpError::Format(format!("unsupported version {version}")));
    }
    let dim = header[8] as usize;
    let space = match header[9] {
        0 => Space::Physical,
        1 => Space::Frequency,
        t => return Err(SbpError::Format(format!("unknown space tag {t}"))),
    };
    let precision = match header[10] {
        0 => Precision::Complex64,
        1 => Precision::Complex128,
        t => return Err(SbpError::Format(format!("unknown dtype {t}"))),
    };
    let n = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
    let box_length = f64::from_le_bytes(header[20..28].try_into().unwrap());
    let time = f64::from_le_bytes(header[28..36].try_into().unwrap());
    let grid = GridSpec::new(dim, n, box_length)?;

    let width = match precision {
        Precision::Complex64 => 8,
        Precision::Complex128 => 16,
    };
    let mut body = vec![0u8; grid.len() * width];
    r.read_exact(&mut body)
        .map_err(|e| SbpError::Format(format!("truncated body: {e}")))?;
    let data = body
        .chunks_exact(width)
        .map(|c| match precision {
            Precision::Complex64 => Complex64::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            ),
            Precision::Complex128 => Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            ),
        })
        .collect();
    Ok((ComplexField::from_vec(grid, space, data)?, time))
}

pub fn save(path: &Path, field: &ComplexField, time: f64, precision: Precision) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, field, time, precision)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(ComplexField, f64)> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComplexField {
        let g = GridSpec::new(2, 8, 3.0).unwrap();
        ComplexField::from_fn(g, |x| Complex64::new(x[0].sin() / 3.0, x[1] * 0.1))
    }

    #[test]
    fn complex128_roundtrip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.25, Precision::Complex128).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 64 * 16);
        let (g, t) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(g, f);
    }

    #[test]
    fn complex64_roundtrip_to_single_precision() {
        let f = sample();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 0.0, Precision::Complex64).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 64 * 8);
        let (g, _) = read_snapshot(buf.as_slice()).unwrap();
        assert!(g.rel_linf_distance(&f).unwrap() < 1e-6);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &sample(), 0.0, Precision::Complex64).unwrap();
        buf[0] = b'X';
        assert!(read_snapshot(buf.as_slice()).is_err());
        assert!(read_snapshot(&buf[..10]).is_err());
    }
}
