//! Little-endian binary container for lattice fields.
//!
//! Header: magic `GL3D`, version `u16`, kind `u8` (0 complex vertex field,
//! 1..=3 for k-forms), dims `3 x u64`, spacing `f64`, boundary `u8`
//! (0 box, 1 periodic). Payload: `f64` arrays in x-fastest order; complex
//! values interleave `(re, im)`, vector forms store their three padded
//! component arrays one after another.

use crate::error::{Error, Result};
use crate::grid::{Boundary, ComplexField, Form1, Form2, Form3, GridSpec};
use num_complex::Complex64;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"GL3D";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Complex(ComplexField),
    Form1(Form1),
    Form2(Form2),
    Form3(Form3),
}

impl Field {
    pub fn grid(&self) -> GridSpec {
        match self {
            Field::Complex(f) => f.grid,
            Field::Form1(f) => f.grid,
            Field::Form2(f) => f.grid,
            Field::Form3(f) => f.grid,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Field::Complex(_) => 0,
            Field::Form1(_) => 1,
            Field::Form2(_) => 2,
            Field::Form3(_) => 3,
        }
    }
}

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[field.kind()])?;
    for n in g.dims {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&g.spacing.to_le_bytes())?;
    w.write_all(&[match g.boundary {
        Boundary::Box => 0,
        Boundary::Periodic => 1,
    }])?;
    let mut buf = Vec::new();
    match field {
        Field::Complex(f) => {
            buf.reserve(f.data.len() * 16);
            for z in &f.data {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        Field::Form1(f) => f.comps.iter().flatten().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Field::Form2(f) => f.comps.iter().flatten().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Field::Form3(f) => f.data.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; N]> {
    let end = *pos + N;
    let s = bytes.get(*pos..end).ok_or_else(|| Error::InvalidInput("truncated field file".into()))?;
    *pos = end;
    Ok(s.try_into().unwrap())
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if &take::<4>(&bytes, &mut pos)? != MAGIC {
        return Err(Error::InvalidInput("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&bytes, &mut pos)?);
    if version != VERSION {
        return Err(Error::InvalidInput(format!("unsupported version {version}")));
    }
    let kind = take::<1>(&bytes, &mut pos)?[0];
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let n = u64::from_le_bytes(take(&bytes, &mut pos)?);
        *d = usize::try_from(n).map_err(|_| Error::SizeLimit(format!("dimension {n}")))?;
    }
    let spacing = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let boundary = match take::<1>(&bytes, &mut pos)?[0] {
        0 => Boundary::Box,
        1 => Boundary::Periodic,
        b => return Err(Error::InvalidInput(format!("unknown boundary mode {b}"))),
    };
    let g = GridSpec::new(dims, spacing, [0.0; 3], boundary)?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::SizeLimit("grid too large".into()))?;
    let count = match kind {
        0 => 2 * n,
        1 | 2 => 3 * n,
        3 => n,
        k => return Err(Error::InvalidInput(format!("unknown field kind {k}"))),
    };
    if bytes.len() - pos != count * 8 {
        return Err(Error::InvalidInput(format!(
            "payload has {} bytes, expected {}",
            bytes.len() - pos,
            count * 8
        )));
    }
    let vals: Vec<f64> = bytes[pos..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let split3 = |v: &[f64]| [v[..n].to_vec(), v[n..2 * n].to_vec(), v[2 * n..].to_vec()];
    Ok(match kind {
        0 => Field::Complex(ComplexField {
            grid: g,
            data: vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        }),
        1 => Field::Form1(Form1 { grid: g, comps: split3(&vals) }),
        2 => Field::Form2(Form2 { grid: g, comps: split3(&vals) }),
        _ => Field::Form3(Form3 { grid: g, data: vals }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_roundtrip_is_bit_exact() {
        let g = GridSpec::new([3, 4, 2], 0.125, [0.0; 3], Boundary::Periodic).unwrap();
        let f = ComplexField::from_fn(g, |p| Complex64::new(p[0].sin() + 1e-300, -p[1] / 3.0));
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::Complex(f.clone())).unwrap();
        assert_eq!(&buf[..4], b"GL3D");
        assert_eq!(read_field(&buf[..]).unwrap(), Field::Complex(f));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = GridSpec::new([2, 2, 2], 1.0, [0.0; 3], Boundary::Box).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::Form3(Form3::zeros(g))).unwrap();
        buf.pop();
        assert!(read_field(&buf[..]).is_err());
    }
}
