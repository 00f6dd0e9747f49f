use std::path::Path;

use super::SourceField;
use crate::error::{Error, Result};

/// Source sampled on a uniform lattice, read from CSV columns `x1,x2,f`.
///
/// Values are interpolated with Catmull–Rom bicubics; outside the lattice `f = 1`.
pub fn tabulated_source(path: &Path, c0: f64, beta: f64) -> Result<SourceField> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.chars().any(|c| c.is_ascii_alphabetic())) {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if vals.len() != 3 {
            return Err(Error::Config(format!("{}:{}: expected columns x1,x2,f", path.display(), n + 1)));
        }
        rows.push([vals[0], vals[1], vals[2]]);
    }
    let lattice = Lattice::from_rows(&rows).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(SourceField::from_deviation(move |x| lattice.deviation(x), c0, beta)
        .with_label(format!("tabulated({})", path.display())))
}

struct Lattice {
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    dev: Vec<f64>,
}

impl Lattice {
    fn from_rows(rows: &[[f64; 3]]) -> std::result::Result<Self, String> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        }
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 4 || ny < 4 || nx * ny != rows.len() {
            return Err(format!("samples do not form a full lattice ({nx} x {ny} vs {} rows)", rows.len()));
        }
        let hx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
        let hy = (ys[ny - 1] - ys[0]) / (ny - 1) as f64;
        let uniform = |v: &[f64], h: f64| v.iter().enumerate().all(|(k, x)| (x - v[0] - k as f64 * h).abs() < 1e-9 * (1.0 + h));
        if !uniform(&xs, hx) || !uniform(&ys, hy) {
            return Err("lattice spacing is not uniform".into());
        }
        let mut dev = vec![f64::NAN; nx * ny];
        for r in rows {
            let i = ((r[0] - xs[0]) / hx).round() as usize;
            let j = ((r[1] - ys[0]) / hy).round() as usize;
            dev[j * nx + i] = r[2] - 1.0;
        }
        if dev.iter().any(|v| !v.is_finite()) {
            return Err("lattice has missing or non-finite values".into());
        }
        Ok(Self { x0: xs[0], y0: ys[0], hx, hy, nx, ny, dev })
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            0.0
        } else {
            self.dev[j as usize * self.nx + i as usize]
        }
    }

    fn deviation(&self, x: [f64; 2]) -> f64 {
        let u = (x[0] - self.x0) / self.hx;
        let v = (x[1] - self.y0) / self.hy;
        if u < 0.0 || v < 0.0 || u > (self.nx - 1) as f64 || v > (self.ny - 1) as f64 {
            return 0.0;
        }
        let (i, j) = (u.floor() as isize, v.floor() as isize);
        let (s, t) = (u - i as f64, v - j as f64);
        let ws = catmull_rom(s);
        let wt = catmull_rom(t);
        let mut acc = 0.0;
        for (b, wb) in wt.iter().enumerate() {
            for (a, wa) in ws.iter().enumerate() {
                acc += wa * wb * self.at(i - 1 + a as isize, j - 1 + b as isize);
            }
        }
        acc
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn reproduces_lattice_values_and_is_one_outside() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let mut w = std::fs::File::create(&p).unwrap();
        writeln!(w, "x1,x2,f").unwrap();
        for j in 0..9 {
            for i in 0..9 {
                let (x, y) = (-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64);
                writeln!(w, "{x},{y},{}", 1.0 + 0.01 * x * y).unwrap();
            }
        }
        drop(w);
        let f = tabulated_source(&p, 2.0, 4.0).unwrap();
        assert!((f.eval([0.5, 1.0]) - 1.005).abs() < 1e-14);
        assert!((f.eval([0.25, 0.75]) - (1.0 + 0.01 * 0.25 * 0.75)).abs() < 1e-12);
        assert_eq!(f.eval([5.0, 0.0]), 1.0);
    }
}
