//! Field serialization: CSV `(r, theta, value)` and a binary dump with a
//! 32-byte header (magic, n_r, n_theta, kind) followed by row-major `f64`.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridKind, PolarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"AMP2DFLD";

pub fn write_field_csv(field: &PolarField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "r,theta,value")?;
    let g = field.grid();
    for (j, r) in g.radii().iter().enumerate() {
        for (i, t) in g.thetas().iter().enumerate() {
            writeln!(w, "{r:.17e},{t:.17e},{:.17e}", field.get(j, i))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows of a field CSV.
pub fn read_field_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if parts.len() != 3 {
            return Err(Error::Config(format!("{}:{}: expected 3 columns", path.display(), n + 1)));
        }
        rows.push((parts[0], parts[1], parts[2]));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub kind: GridKind,
    pub n_r: usize,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

pub fn write_field_binary(field: &PolarField, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(g.n_r() as u64).to_le_bytes())?;
    w.write_all(&(g.n_theta() as u64).to_le_bytes())?;
    w.write_all(&g.kind().code().to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_binary(path: &Path) -> Result<FieldDump> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(Error::Config(format!("{}: not a field dump", path.display())));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let (n_r, n_theta) = (word(1) as usize, word(2) as usize);
    let kind = GridKind::from_code(word(3))
        .ok_or_else(|| Error::Config(format!("{}: unknown grid kind {}", path.display(), word(3))))?;
    if bytes.len() != 32 + 8 * n_r * n_theta {
        return Err(Error::Config(format!("{}: truncated field dump", path.display())));
    }
    let values = bytes[32..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FieldDump { kind, n_r, n_theta, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;

    #[test]
    fn binary_round_trip() {
        let g = PolarGrid::exterior(1.0, 16, 32, 40.0).unwrap();
        let f = PolarField::from_fn(&g, |r, t| r * t.cos());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write_field_binary(&f, &p).unwrap();
        let d = read_field_binary(&p).unwrap();
        assert_eq!(d.kind, GridKind::Exterior);
        assert_eq!((d.n_r, d.n_theta), (16, 32));
        assert_eq!(d.values, f.values());
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 32 + 8 * 16 * 32);
    }

    #[test]
    fn csv_round_trip() {
        let g = PolarGrid::global(8, 32, 32.0).unwrap();
        let f = PolarField::from_fn(&g, |r, t| r + t);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_field_csv(&f, &p).unwrap();
        let rows = read_field_csv(&p).unwrap();
        assert_eq!(rows.len(), 8 * 32);
        assert_eq!(rows[33].2, f.get(1, 1));
    }
}
