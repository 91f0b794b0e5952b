//! `LFSNAP v1` field snapshots.
//!
//! One ASCII header line
//! `LFSNAP v1 dim=<d> n=<N> L=<float> t=<float>` terminated by `\n`, then
//! `d * N^d` little-endian `f64` physical samples, component-major with
//! axis 0 fastest.

use std::io::{BufRead, Write};

use super::{SpectralError, SpectralGrid, VectorField};

pub const MAGIC: &str = "LFSNAP v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub field: VectorField,
}

pub fn write_snapshot<W: Write>(
    mut w: W,
    grid: &SpectralGrid,
    t: f64,
    field: &VectorField,
) -> Result<(), SpectralError> {
    if field.dim() != grid.dim() || field.components.iter().any(|c| c.len() != grid.n_points()) {
        return Err(SpectralError::ShapeMismatch {
            expected: (grid.dim(), grid.n_points()),
            got: (field.dim(), field.n_points()),
        });
    }
    writeln!(
        w,
        "{MAGIC} dim={} n={} L={} t={}",
        grid.dim(),
        grid.n(),
        grid.length(),
        t
    )?;
    let mut bytes = Vec::with_capacity(8 * grid.dim() * grid.n_points());
    for comp in &field.components {
        for x in comp {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut r: R) -> Result<Snapshot, SpectralError> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let header = header
        .strip_suffix('\n')
        .ok_or_else(|| SpectralError::Format("missing header terminator".into()))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| SpectralError::Format(format!("bad magic in header {header:?}")))?;
    let (mut dim, mut n, mut length, mut t) = (None, None, None, None);
    for item in rest.split_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| SpectralError::Format(format!("bad header field {item:?}")))?;
        let bad = || SpectralError::Format(format!("bad value for {key}: {value:?}"));
        match key {
            "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "L" => length = Some(value.parse::<f64>().map_err(|_| bad())?),
            "t" => t = Some(value.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(SpectralError::Format(format!("unknown header field {key}"))),
        }
    }
    let missing = |k: &str| SpectralError::Format(format!("header lacks {k}"));
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let n = n.ok_or_else(|| missing("n"))?;
    let length = length.ok_or_else(|| missing("L"))?;
    let t = t.ok_or_else(|| missing("t"))?;
    let points = n.pow(dim as u32);
    let mut bytes = vec![0u8; 8 * dim * points];
    r.read_exact(&mut bytes)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(SpectralError::Format("trailing bytes after samples".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let components = values.chunks(points).map(<[f64]>::to_vec).collect();
    Ok(Snapshot {
        dim,
        n,
        length,
        t,
        field: VectorField { components },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_component_major_axis0_fastest() {
        let g = SpectralGrid::new(2, 8, 2.5).unwrap();
        let f = VectorField::from_fn(&g, |x| vec![x[0], 100.0 + x[1]]);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, 0.125, &f).unwrap();
        let header_end = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&buf[..header_end]).unwrap(),
            "LFSNAP v1 dim=2 n=8 L=2.5 t=0.125"
        );
        let body = &buf[header_end + 1..];
        assert_eq!(body.len(), 2 * 64 * 8);
        let at = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().unwrap());
        let h = 2.5 / 8.0;
        assert_eq!(at(1), h); // x0 of point (1, 0)
        assert_eq!(at(8), 0.0); // x0 of point (0, 1)
        assert_eq!(at(64 + 8), 100.0 + h); // component 1 at point (0, 1)

        let snap = read_snapshot(&buf[..]).unwrap();
        assert_eq!(snap.field, f);
        assert_eq!((snap.dim, snap.n, snap.length, snap.t), (2, 8, 2.5, 0.125));
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_snapshot(&b"LFSNAP v2 dim=2\n"[..]).is_err());
        assert!(read_snapshot(&b"LFSNAP v1 dim=2 n=8 L=1 t=0\n\0\0"[..]).is_err());
        assert!(read_snapshot(&b"LFSNAP v1 dim=2 n=8 L=1\n"[..]).is_err());
    }
}
