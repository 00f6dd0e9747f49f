use std::sync::Arc;

use num_complex::Complex64;

use super::PolarGrid;
use crate::error::{Error, Result};

/// Scalar field sampled at every `(r_j, θ_i)`, stored row-major by radius.
#[derive(Clone)]
pub struct PolarField {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
}

impl std::fmt::Debug for PolarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolarField")
            .field("grid", &self.grid)
            .field("sup", &self.sup_abs())
            .finish()
    }
}

impl PolarField {
    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.n_r() * grid.n_theta()] }
    }

    pub fn constant(grid: &Arc<PolarGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.n_r() * grid.n_theta()] }
    }

    pub fn from_fn(grid: &Arc<PolarGrid>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_r() * grid.n_theta());
        for &r in grid.radii() {
            for &t in grid.thetas() {
                values.push(f(r, t));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Field from a radial profile, constant in θ.
    pub fn from_radial(grid: &Arc<PolarGrid>, radial: &[f64]) -> Self {
        let nt = grid.n_theta();
        let mut values = Vec::with_capacity(grid.n_r() * nt);
        for &v in radial {
            values.extend(std::iter::repeat_n(v, nt));
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_r() * grid.n_theta() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_r() * grid.n_theta(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (j, i) = (k / grid.n_theta(), k % grid.n_theta());
            return Err(Error::InvalidGrid(format!("non-finite value at node ({j}, {i})")));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.grid.n_theta() + i]
    }

    #[inline]
    pub fn set(&mut self, j: usize, i: usize, v: f64) {
        let nt = self.grid.n_theta();
        self.values[j * nt + i] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nt = self.grid.n_theta();
        &self.values[j * nt..(j + 1) * nt]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup (1 + r)^τ |v|`.
    pub fn weighted_sup(&self, tau: f64) -> f64 {
        let nt = self.grid.n_theta();
        let mut m: f64 = 0.0;
        for (j, &r) in self.grid.radii().iter().enumerate() {
            let w = (1.0 + r).powf(tau);
            for v in &self.values[j * nt..(j + 1) * nt] {
                m = m.max(w * v.abs());
            }
        }
        m
    }

    /// Sup over nodes with `r <= r_hi`, skipping boundary nodes.
    pub fn sup_abs_interior(&self, r_hi: f64) -> f64 {
        let mut m: f64 = 0.0;
        for j in self.grid.interior_nodes() {
            if self.grid.radii()[j] <= r_hi {
                m = self.row(j).iter().fold(m, |m, v| m.max(v.abs()));
            }
        }
        m
    }

    /// Mean over θ at every radius (mode 0).
    pub fn theta_mean(&self) -> Vec<f64> {
        let nt = self.grid.n_theta() as f64;
        (0..self.grid.n_r()).map(|j| self.row(j).iter().sum::<f64>() / nt).collect()
    }

    /// Cyclic shift of the angular samples by `k` grid angles: `(Rv)(θ) = v(θ − kΔθ)`.
    pub fn rotate(&self, k: usize) -> Self {
        let nt = self.grid.n_theta();
        let mut out = self.values.clone();
        for j in 0..self.grid.n_r() {
            for i in 0..nt {
                out[j * nt + (i + k) % nt] = self.values[j * nt + i];
            }
        }
        Self { grid: self.grid.clone(), values: out }
    }

    pub fn modes(&self) -> Modes {
        let g = &self.grid;
        let (nr, nt, nm) = (g.n_r(), g.n_theta(), g.n_modes());
        let mut coef = Vec::with_capacity(nr * nm);
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        let inv = 1.0 / nt as f64;
        for j in 0..nr {
            for (b, &v) in buf.iter_mut().zip(self.row(j)) {
                *b = Complex64::new(v, 0.0);
            }
            g.fft_forward(&mut buf);
            coef.extend(buf[..nm].iter().map(|c| c * inv));
        }
        Modes { n_r: nr, n_theta: nt, coef }
    }

    /// Spectral θ-derivative of the given order.
    pub fn d_theta(&self, order: u32) -> Self {
        let mut modes = self.modes();
        modes.differentiate_theta(order);
        modes.recompose(&self.grid)
    }

    /// First and second radial derivatives on the grid stencils.
    pub fn d_r(&self) -> (Self, Self) {
        let g = &self.grid;
        let nt = g.n_theta();
        let half = nt / 2;
        let mut d1 = vec![0.0; self.values.len()];
        let mut d2 = vec![0.0; self.values.len()];
        for j in 0..g.n_r() {
            let out1 = &mut d1[j * nt..(j + 1) * nt];
            let out2 = &mut d2[j * nt..(j + 1) * nt];
            for e in g.stencil_at(j) {
                let src = &self.values[e.node * nt..(e.node + 1) * nt];
                for i in 0..nt {
                    let v = if e.reflected { src[(i + half) % nt] } else { src[i] };
                    out1[i] += e.d1 * v;
                    out2[i] += e.d2 * v;
                }
            }
        }
        (
            Self { grid: g.clone(), values: d1 },
            Self { grid: g.clone(), values: d2 },
        )
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator { grid: self.grid.clone(), modes: self.modes() }
    }
}

/// Angular Fourier coefficients `c_m(r_j) = (1/N) Σ_i v(r_j, θ_i) e^{-imθ_i}` for `m = 0..=N/2`.
#[derive(Debug, Clone)]
pub struct Modes {
    n_r: usize,
    n_theta: usize,
    coef: Vec<Complex64>,
}

impl Modes {
    pub fn zeros(grid: &PolarGrid) -> Self {
        Self {
            n_r: grid.n_r(),
            n_theta: grid.n_theta(),
            coef: vec![Complex64::new(0.0, 0.0); grid.n_r() * grid.n_modes()],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_theta / 2 + 1
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    #[inline]
    pub fn get(&self, j: usize, m: usize) -> Complex64 {
        self.coef[j * self.n_modes() + m]
    }

    #[inline]
    pub fn set(&mut self, j: usize, m: usize, c: Complex64) {
        let nm = self.n_modes();
        self.coef[j * nm + m] = c;
    }

    pub fn mode(&self, m: usize) -> Vec<Complex64> {
        (0..self.n_r).map(|j| self.get(j, m)).collect()
    }

    pub fn set_mode(&mut self, m: usize, values: &[Complex64]) {
        for (j, &c) in values.iter().enumerate() {
            self.set(j, m, c);
        }
    }

    /// Real amplitude of `cos(mθ)`/`sin(mθ)` content at radius `j`.
    pub fn amplitude(&self, j: usize, m: usize) -> f64 {
        let c = self.get(j, m).norm();
        if m == 0 || 2 * m == self.n_theta {
            c
        } else {
            2.0 * c
        }
    }

    pub fn differentiate_theta(&mut self, order: u32) {
        let nm = self.n_modes();
        let nyq = self.n_theta / 2;
        for j in 0..self.n_r {
            for m in 0..nm {
                let c = &mut self.coef[j * nm + m];
                if m == nyq && order % 2 == 1 {
                    *c = Complex64::new(0.0, 0.0);
                } else {
                    *c *= Complex64::new(0.0, m as f64).powu(order);
                }
            }
        }
    }

    pub fn recompose(&self, grid: &Arc<PolarGrid>) -> PolarField {
        let (nr, nt, nm) = (self.n_r, self.n_theta, self.n_modes());
        assert_eq!(nr, grid.n_r());
        assert_eq!(nt, grid.n_theta());
        let mut values = Vec::with_capacity(nr * nt);
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for j in 0..nr {
            let row = &self.coef[j * nm..(j + 1) * nm];
            buf[0] = Complex64::new(row[0].re, 0.0);
            for m in 1..nt / 2 {
                buf[m] = row[m];
                buf[nt - m] = row[m].conj();
            }
            buf[nt / 2] = Complex64::new(row[nt / 2].re, 0.0);
            grid.fft_inverse(&mut buf);
            values.extend(buf.iter().map(|c| c.re));
        }
        PolarField { grid: grid.clone(), values }
    }
}

/// Interpolant of a polar field: six-point Lagrange in `r`, trigonometric in `θ`.
#[derive(Clone)]
pub struct Evaluator {
    grid: Arc<PolarGrid>,
    modes: Modes,
}

impl Evaluator {
    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        let weights = self.grid.radial_interp_weights(r);
        let nm = self.modes.n_modes();
        let nyq = self.modes.n_theta / 2;
        let mut acc = 0.0;
        let unit = Complex64::from_polar(1.0, theta);
        let mut e = Complex64::new(1.0, 0.0);
        for m in 0..nm {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut c = Complex64::new(0.0, 0.0);
            for &(node, reflected, w) in &weights {
                let v = self.modes.get(node, m);
                c += if reflected { v * (w * sign) } else { v * w };
            }
            let term = (c * e).re;
            acc += if m == 0 || m == nyq {
                if m == nyq {
                    c.re * (m as f64 * theta).cos()
                } else {
                    term
                }
            } else {
                2.0 * term
            };
            e *= unit;
        }
        acc
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let r = x[0].hypot(x[1]);
        self.eval_polar(r, x[1].atan2(x[0]))
    }
}
