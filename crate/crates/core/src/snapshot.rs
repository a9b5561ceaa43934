//! Binary snapshot of the spectral state `(u1, u2, rho)`.
//!
//! Layout (little-endian): magic `MHDSNAP1`, version `u32`, `n_x u32`,
//! `n_y u32`, `l_x f64`, `t f64`, then three coefficient blocks (u1, u2,
//! rho), each `n_x * (n_y + 1)` pairs of `f64` (re, im) in `(j, q)`
//! row-major order.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use crate::basis::{Parity, Spectrum};
use crate::error::SimError;

const MAGIC: &[u8; 8] = b"MHDSNAP1";
const VERSION: u32 = 1;

/// A stored state with its time stamp.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u1: Spectrum,
    pub u2: Spectrum,
    pub rho: Spectrum,
}

fn write_block<W: Write>(w: &mut W, s: &Spectrum) -> Result<(), SimError> {
    for j in 0..s.n_x {
        for q in 0..=s.n_y {
            let c = s.coeffs[(j, q)];
            w.write_f64::<LittleEndian>(c.re)?;
            w.write_f64::<LittleEndian>(c.im)?;
        }
    }
    Ok(())
}

fn read_block<R: Read>(
    r: &mut R,
    parity: Parity,
    l_x: f64,
    n_x: usize,
    n_y: usize,
) -> Result<Spectrum, SimError> {
    let mut s = Spectrum::zeros(parity, l_x, n_x, n_y);
    for j in 0..n_x {
        for q in 0..=n_y {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            s.coeffs[(j, q)] = Complex64::new(re, im);
        }
    }
    Ok(s)
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<(), SimError> {
    let (u1, u2, rho) = (&snap.u1, &snap.u2, &snap.rho);
    for s in [u2, rho] {
        if s.n_x != u1.n_x || s.n_y != u1.n_y {
            return Err(SimError::GridMismatch {
                expected_nx: u1.n_x,
                expected_ny: u1.n_y,
                got_nx: s.n_x,
                got_ny: s.n_y,
            });
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(u1.n_x as u32)?;
    w.write_u32::<LittleEndian>(u1.n_y as u32)?;
    w.write_f64::<LittleEndian>(u1.l_x)?;
    w.write_f64::<LittleEndian>(snap.t)?;
    write_block(&mut w, u1)?;
    write_block(&mut w, u2)?;
    write_block(&mut w, rho)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SimError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SimError::SnapshotFormat("bad magic bytes".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(SimError::SnapshotFormat(format!(
            "unsupported version {version}"
        )));
    }
    let n_x = r.read_u32::<LittleEndian>()? as usize;
    let n_y = r.read_u32::<LittleEndian>()? as usize;
    if n_x == 0 || n_x % 2 != 0 || n_y == 0 || n_x > 1 << 20 || n_y > 1 << 20 {
        return Err(SimError::SnapshotFormat(format!(
            "implausible grid {n_x}x{n_y}"
        )));
    }
    let l_x = r.read_f64::<LittleEndian>()?;
    if !(l_x > 0.0) || !l_x.is_finite() {
        return Err(SimError::SnapshotFormat(format!("bad l_x {l_x}")));
    }
    let t = r.read_f64::<LittleEndian>()?;
    let u1 = read_block(&mut r, Parity::EvenY, l_x, n_x, n_y)?;
    let u2 = read_block(&mut r, Parity::OddY, l_x, n_x, n_y)?;
    let rho = read_block(&mut r, Parity::EvenY, l_x, n_x, n_y)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(SimError::SnapshotFormat("trailing bytes".into()));
    }
    Ok(Snapshot { t, u1, u2, rho })
}
