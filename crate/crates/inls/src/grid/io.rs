//! Field serialization.
//!
//! Binary layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `INLSFLD1` |
//! | 1 | kind: 0 Cartesian, 1 Radial, 2 Cylindrical |
//! | 1 | symmetry: 0 None, 1 Radial, 2 CylindricalSigmaN |
//! | 1 | spatial dimension `N` |
//! | 1 | axis count `k` |
//! | 24·k | per axis: `u64` points, `f64` extent, `f64` offset |
//! | 32 | `f64` weight_eps, map ratio, map width, cusp |
//! | 8 | `u64` sample count |
//! | 16·count | interleaved `f64` re, im |

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Field, GridKind, GridSpec, RadialMap, Symmetry};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"INLSFLD1";

pub fn write_field<W: Write>(f: &Field, w: &mut W) -> Result<()> {
    let grid = f.grid();
    let mut buf: Vec<u8> = Vec::with_capacity(96 + 16 * f.len());
    buf.extend_from_slice(MAGIC);
    buf.push(match grid.kind() {
        GridKind::Cartesian => 0,
        GridKind::Radial => 1,
        GridKind::Cylindrical => 2,
    });
    buf.push(match f.symmetry() {
        Symmetry::None => 0,
        Symmetry::Radial => 1,
        Symmetry::CylindricalSigmaN => 2,
    });
    buf.push(grid.dim() as u8);
    buf.push(grid.dims().len() as u8);
    for a in 0..grid.dims().len() {
        buf.extend_from_slice(&(grid.dims()[a] as u64).to_le_bytes());
        buf.extend_from_slice(&grid.extent()[a].to_le_bytes());
        buf.extend_from_slice(&grid.offset()[a].to_le_bytes());
    }
    for x in [grid.weight_eps(), grid.map().ratio, grid.map().width, grid.cusp()] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(f.len() as u64).to_le_bytes());
    for v in f.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<Field> {
    let bad = |m: &str| Error::InvalidField(format!("field file: {m}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut hdr = [0u8; 4];
    r.read_exact(&mut hdr)?;
    let kind = match hdr[0] {
        0 => GridKind::Cartesian,
        1 => GridKind::Radial,
        2 => GridKind::Cylindrical,
        _ => return Err(bad("unknown grid kind")),
    };
    let symmetry = match hdr[1] {
        0 => Symmetry::None,
        1 => Symmetry::Radial,
        2 => Symmetry::CylindricalSigmaN,
        _ => return Err(bad("unknown symmetry")),
    };
    let n = hdr[2] as usize;
    let k = hdr[3] as usize;
    if k == 0 || k > 3 {
        return Err(bad("axis count"));
    }
    let mut dims = Vec::with_capacity(k);
    let mut extent = Vec::with_capacity(k);
    let mut offset = Vec::with_capacity(k);
    for _ in 0..k {
        dims.push(read_u64(r)? as usize);
        extent.push(read_f64(r)?);
        offset.push(read_f64(r)?);
    }
    let eps = read_f64(r)?;
    let map = RadialMap {
        ratio: read_f64(r)?,
        width: read_f64(r)?,
    };
    let cusp = read_f64(r)?;
    let count = read_u64(r)? as usize;
    let spec = GridSpec {
        kind,
        n,
        dims,
        extent,
        offset: Some(offset),
        weight_eps: Some(eps),
        map: Some(map),
        cusp: Some(cusp),
    };
    let grid = spec.build()?;
    if count != grid.len() {
        return Err(bad("sample count does not match grid"));
    }
    let mut raw = vec![0u8; 16 * count];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let f = Field::new(grid, values)?;
    if symmetry == f.symmetry() {
        Ok(f)
    } else {
        f.with_symmetry(symmetry)
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn save_field(f: &Field, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(f, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<Field> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field(&mut file)
}

/// One row per point: native coordinates, then `re`, `im`.
pub fn write_csv<W: Write>(f: &Field, w: &mut W) -> Result<()> {
    let grid = f.grid();
    let names: Vec<String> = match grid.kind() {
        GridKind::Cartesian => (0..grid.dim()).map(|a| format!("x{}", a + 1)).collect(),
        GridKind::Radial => vec!["r".into()],
        GridKind::Cylindrical => vec!["tau".into(), format!("x{}", grid.dim())],
    };
    let ncoord = names.len();
    writeln!(w, "{},re,im", names.join(","))?;
    for (i, v) in f.values().iter().enumerate() {
        let c = grid.coords(i);
        let coords: Vec<String> = c[..ncoord].iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{},{:e},{:e}", coords.join(","), v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        for spec in [
            GridSpec::cartesian(2, &[8, 6], &[3.0, 2.0]).with_offset(&[0.1, -0.2]),
            GridSpec::radial(3, 32, 5.0).with_map(RadialMap::GRADED).with_cusp(0.5),
            GridSpec::cylindrical(3, [16, 8], [4.0, 4.0]),
        ] {
            let g = spec.build().unwrap();
            let f = Field::from_fn(g, |x| Complex64::new(x[0].sin(), x[1] - 0.3));
            let mut buf = Vec::new();
            write_field(&f, &mut buf).unwrap();
            let back = read_field(&mut buf.as_slice()).unwrap();
            assert_eq!(**back.grid(), **f.grid());
            assert_eq!(back.values(), f.values());
            assert_eq!(back.symmetry(), f.symmetry());
        }
    }

    #[test]
    fn truncated_input_is_an_error() {
        let g = GridSpec::radial(1, 16, 2.0).build().unwrap();
        let mut buf = Vec::new();
        write_field(&Field::zeros(g), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_field(&mut buf.as_slice()).is_err());
        assert!(read_field(&mut &b"NOTAFILE"[..]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = GridSpec::cartesian(1, &[4], &[1.0]).build().unwrap();
        let mut out = Vec::new();
        write_csv(&Field::zeros(g), &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert!(s.starts_with("x1,re,im"));
    }
}
