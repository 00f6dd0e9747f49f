//! Polar discretization of the plane, of an exterior annulus, and of the
//! Kelvin-image disk.
//!
//! Radial derivatives use Fornberg weights on the mapped nodes (five-point
//! centered, six-point one-sided next to a boundary). Disk grids are staggered
//! by half a cell so the origin is never a node; stencils that reach across the
//! origin use the parity ghost `u(-r, θ) = u(r, θ + π)`. Angular derivatives are
//! spectral.

mod field;
mod hessian;
pub mod io;

pub use field::{Evaluator, Modes, PolarField};
pub use hessian::{cartesian_hessian, det_hessian, divergence, flux_pair, gradient, HessianField};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::fornberg_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Disk `[0, R_max]` for problems posed on the whole plane.
    Global,
    /// Annulus `[r₀, R_max]`.
    Exterior,
    /// Disk `[0, 1/r₀]` holding Kelvin-transformed exterior problems.
    Kelvin,
}

impl GridKind {
    pub fn code(self) -> u64 {
        match self {
            GridKind::Global => 0,
            GridKind::Exterior => 1,
            GridKind::Kelvin => 2,
        }
    }

    pub fn from_code(c: u64) -> Option<Self> {
        match c {
            0 => Some(GridKind::Global),
            1 => Some(GridKind::Exterior),
            2 => Some(GridKind::Kelvin),
            _ => None,
        }
    }

    pub fn contains_origin(self) -> bool {
        !matches!(self, GridKind::Exterior)
    }
}

/// One radial stencil entry: node index, whether the value is taken through
/// the origin (parity ghost), and the first/second derivative weights.
#[derive(Debug, Clone, Copy)]
pub struct StencilEntry {
    pub node: usize,
    pub reflected: bool,
    pub d1: f64,
    pub d2: f64,
}

pub struct PolarGrid {
    kind: GridKind,
    radii: Vec<f64>,
    thetas: Vec<f64>,
    stencils: Vec<Vec<StencilEntry>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PolarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarGrid")
            .field("kind", &self.kind)
            .field("n_r", &self.n_r())
            .field("n_theta", &self.n_theta())
            .field("r_start", &self.r_start())
            .field("r_max", &self.r_max())
            .finish()
    }
}

impl PolarGrid {
    /// Global grid on `[0, r_max]`: `r = sinh(s)` with `s` uniform and staggered,
    /// i.e. nearly uniform spacing on `[0, 1]` and geometric growth beyond.
    pub fn global(n_r: usize, n_theta: usize, r_max: f64) -> Result<Arc<Self>> {
        if r_max < 32.0 {
            return Err(Error::InvalidGrid(format!("R_max = {r_max} < 32")));
        }
        let s_max = r_max.asinh();
        let ds = s_max / (n_r as f64 - 0.5);
        let radii = (0..n_r).map(|j| ((j as f64 + 0.5) * ds).sinh()).collect();
        Self::build(GridKind::Global, radii, n_theta)
    }

    /// Exterior annulus `[r0, r_max]` with logarithmically uniform nodes at both ends.
    pub fn exterior(r0: f64, n_r: usize, n_theta: usize, r_max: f64) -> Result<Arc<Self>> {
        if !(r0 > 0.0) || r_max < 32.0 * r0.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "exterior grid needs r0 > 0 and R_max >= 32 max(1, r0); got r0 = {r0}, R_max = {r_max}"
            )));
        }
        let ds = (r_max / r0).ln() / (n_r as f64 - 1.0);
        let mut radii: Vec<f64> = (0..n_r).map(|j| r0 * (j as f64 * ds).exp()).collect();
        radii[0] = r0;
        radii[n_r - 1] = r_max;
        Self::build(GridKind::Exterior, radii, n_theta)
    }

    /// Uniform staggered disk grid on `[0, radius]` for Kelvin-image problems.
    pub fn kelvin(radius: f64, n_r: usize, n_theta: usize) -> Result<Arc<Self>> {
        if !(radius > 0.0) {
            return Err(Error::InvalidGrid(format!("Kelvin disk radius {radius} must be > 0")));
        }
        let ds = radius / (n_r as f64 - 0.5);
        let radii = (0..n_r).map(|j| (j as f64 + 0.5) * ds).collect();
        Self::build(GridKind::Kelvin, radii, n_theta)
    }

    fn build(kind: GridKind, radii: Vec<f64>, n_theta: usize) -> Result<Arc<Self>> {
        let n_r = radii.len();
        if n_r < 8 {
            return Err(Error::InvalidGrid(format!("n_r = {n_r} < 8")));
        }
        if n_theta < 32 || !n_theta.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_theta = {n_theta} must be a power of two >= 32"
            )));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("radii must be strictly increasing".into()));
        }
        let thetas = (0..n_theta).map(|i| 2.0 * PI * i as f64 / n_theta as f64).collect();
        let stencils = (0..n_r).map(|j| Self::stencil(kind, &radii, j)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_theta);
        let ifft = planner.plan_fft_inverse(n_theta);
        Ok(Arc::new(Self { kind, radii, thetas, stencils, fft, ifft }))
    }

    /// Resolve a (possibly negative) node index to a node and reflection flag.
    fn resolve(kind: GridKind, radii: &[f64], k: isize) -> (usize, bool, f64) {
        if k >= 0 {
            (k as usize, false, radii[k as usize])
        } else {
            debug_assert!(kind.contains_origin());
            let node = (-k - 1) as usize;
            (node, true, -radii[node])
        }
    }

    fn stencil_window(kind: GridKind, n: usize, j: usize) -> Vec<isize> {
        let j = j as isize;
        let n = n as isize;
        let (lo, hi) = if kind.contains_origin() {
            if j + 2 <= n - 1 {
                (j - 2, j + 2)
            } else {
                (n - 6, n - 1)
            }
        } else if j < 2 {
            (0, 5)
        } else if j + 2 > n - 1 {
            (n - 6, n - 1)
        } else {
            (j - 2, j + 2)
        };
        (lo..=hi).collect()
    }

    fn stencil(kind: GridKind, radii: &[f64], j: usize) -> Vec<StencilEntry> {
        let window = Self::stencil_window(kind, radii.len(), j);
        let resolved: Vec<(usize, bool, f64)> =
            window.iter().map(|&k| Self::resolve(kind, radii, k)).collect();
        let xs: Vec<f64> = resolved.iter().map(|r| r.2).collect();
        let w = fornberg_weights(radii[j], &xs, 2);
        resolved
            .iter()
            .enumerate()
            .map(|(i, &(node, reflected, _))| StencilEntry { node, reflected, d1: w[1][i], d2: w[2][i] })
            .collect()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    /// Number of stored angular modes, `0..=n_theta/2`.
    pub fn n_modes(&self) -> usize {
        self.n_theta() / 2 + 1
    }

    pub fn r_start(&self) -> f64 {
        match self.kind {
            GridKind::Exterior => self.radii[0],
            _ => 0.0,
        }
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn stencil_at(&self, j: usize) -> &[StencilEntry] {
        &self.stencils[j]
    }

    /// Whether node `j` carries a boundary condition.
    pub fn is_boundary(&self, j: usize) -> bool {
        j == self.n_r() - 1 || (self.kind == GridKind::Exterior && j == 0)
    }

    /// Nodes whose radial stencils are one-sided (reported as metadata on exterior grids).
    pub fn one_sided_nodes(&self) -> Vec<usize> {
        (0..self.n_r())
            .filter(|&j| {
                let st = &self.stencils[j];
                let centered = st.len() == 5 && st[2].node == j && !st[2].reflected;
                !centered
            })
            .collect()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_r()).filter(move |&j| !self.is_boundary(j))
    }

    pub fn point(&self, j: usize, i: usize) -> [f64; 2] {
        let (s, c) = self.thetas[i].sin_cos();
        [self.radii[j] * c, self.radii[j] * s]
    }

    /// Lagrange weights (6 nodes, with origin ghosts on disks) to interpolate at radius `r`.
    pub fn radial_interp_weights(&self, r: f64) -> Vec<(usize, bool, f64)> {
        let n = self.n_r() as isize;
        let idx = self.radii.partition_point(|&x| x < r) as isize;
        let mut lo = idx - 3;
        let mut hi = idx + 2;
        if self.kind.contains_origin() {
            if hi > n - 1 {
                hi = n - 1;
                lo = n - 6;
            }
        } else {
            if lo < 0 {
                lo = 0;
                hi = 5;
            }
            if hi > n - 1 {
                hi = n - 1;
                lo = n - 6;
            }
        }
        let resolved: Vec<(usize, bool, f64)> =
            (lo..=hi).map(|k| Self::resolve(self.kind, &self.radii, k)).collect();
        let xs: Vec<f64> = resolved.iter().map(|x| x.2).collect();
        let w = fornberg_weights(r, &xs, 0);
        resolved.iter().zip(&w[0]).map(|(&(node, refl, _), &wt)| (node, refl, wt)).collect()
    }

    /// 2D trapezoid/midpoint quadrature weights `r dr dθ` at each node (radial part only).
    pub fn radial_quadrature_weights(&self) -> Vec<f64> {
        let n = self.n_r();
        let r = &self.radii;
        let mut w = vec![0.0; n];
        for j in 0..n {
            let left = if j == 0 {
                if self.kind.contains_origin() {
                    0.0
                } else {
                    r[0]
                }
            } else {
                0.5 * (r[j - 1] + r[j])
            };
            let right = if j + 1 == n { r[n - 1] } else { 0.5 * (r[j] + r[j + 1]) };
            w[j] = 0.5 * (right * right - left * left);
        }
        w
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.fft.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.ifft.process(buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_grid_is_graded() {
        let g = PolarGrid::global(256, 64, 64.0).unwrap();
        let r = g.radii();
        assert!((g.r_max() - 64.0).abs() < 1e-12);
        let h0 = r[1] - r[0];
        assert!(h0 < 0.025 && h0 > 0.015, "h0 = {h0}");
        let ratio = (r[255] - r[254]) / (r[254] - r[253]);
        assert!((ratio - 1.02).abs() < 0.005, "{ratio}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PolarGrid::global(256, 48, 64.0).is_err());
        assert!(PolarGrid::global(256, 16, 64.0).is_err());
        assert!(PolarGrid::global(256, 64, 16.0).is_err());
        assert!(PolarGrid::exterior(2.0, 128, 64, 40.0).is_err());
    }

    #[test]
    fn exterior_grid_flags_one_sided_nodes() {
        let g = PolarGrid::exterior(1.0, 64, 32, 64.0).unwrap();
        let one = g.one_sided_nodes();
        assert!(one.contains(&0) && one.contains(&63));
        assert!(!one.contains(&10));
    }

    #[test]
    fn radial_stencils_differentiate_even_and_odd_functions() {
        let g = PolarGrid::global(128, 32, 40.0).unwrap();
        // u = r² cosθ... use an even radial function through the origin.
        for j in 0..10 {
            let r = g.radii()[j];
            let (mut d1, mut d2) = (0.0, 0.0);
            for e in g.stencil_at(j) {
                let x = g.radii()[e.node];
                let v = (-x * x).exp();
                d1 += e.d1 * v;
                d2 += e.d2 * v;
            }
            let e1 = -2.0 * r * (-r * r).exp();
            let e2 = (4.0 * r * r - 2.0) * (-r * r).exp();
            assert!((d1 - e1).abs() < 1e-5 && (d2 - e2).abs() < 1e-4);
        }
    }
}
