use std::sync::Arc;

use serde::Serialize;

use super::linearized::{solve_linearized, BoundaryValues, FarField};
use crate::error::Result;
use crate::grid::{gradient, PolarField, PolarGrid};
use crate::linalg::{norm, Point};
use crate::radial::CoefficientField;

/// Discrete Green's function `L G(x, ·) = −δ_x` with Dirichlet data at `R_max`.
#[derive(Debug, Clone)]
pub struct GreenProbe {
    pub x: Point,
    pub values: PolarField,
    /// Mollifier radius used for the point source.
    pub mollifier: f64,
    /// `sup |G(x, y)| / (|log |x − y|| + 1)` over `y` outside the mollifier support.
    pub c2_fit: f64,
    /// `sup_{|y| ≤ |x|/2} |∇_y G(x, y)| · |x| / log |x|`.
    pub grad_bound_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub n_r: usize,
    pub n_theta: usize,
    pub c2_fit: f64,
    pub grad_bound_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenReport {
    pub x: Point,
    pub c2_fit: f64,
    pub grad_bound_fit: f64,
    pub refinement_table: Vec<RefinementRow>,
}

impl GreenReport {
    /// Largest relative change of either fitted constant between consecutive refinements.
    pub fn max_relative_change(&self) -> f64 {
        self.refinement_table
            .windows(2)
            .map(|w| {
                let c = ((w[1].c2_fit - w[0].c2_fit) / w[0].c2_fit).abs();
                let g = ((w[1].grad_bound_fit - w[0].grad_bound_fit) / w[0].grad_bound_fit).abs();
                c.max(g)
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest radius beyond which `sup_θ |a − I| < threshold`.
pub fn r0_heuristic(coeffs: &CoefficientField, threshold: f64) -> f64 {
    let dev = coeffs.radial_deviation_profile();
    let radii = coeffs.grid().radii();
    let mut r0 = 0.0;
    for (j, d) in dev.iter().enumerate() {
        if *d >= threshold {
            r0 = radii[j];
        }
    }
    r0
}

fn local_spacing(grid: &PolarGrid, r: f64) -> f64 {
    let radii = grid.radii();
    let k = radii.partition_point(|&v| v < r).clamp(1, radii.len() - 1);
    let dr = radii[k] - radii[k - 1];
    let dt = 2.0 * std::f64::consts::PI / grid.n_theta() as f64;
    dr.max(r * dt)
}

pub fn probe_green(coeffs: &CoefficientField, x: Point) -> Result<GreenProbe> {
    let eps = 2.0 * local_spacing(coeffs.grid(), norm(x));
    probe_green_with(coeffs, x, eps)
}

/// Probe with an explicit mollifier radius.
pub fn probe_green_with(coeffs: &CoefficientField, x: Point, eps: f64) -> Result<GreenProbe> {
    let grid = coeffs.grid().clone();
    let bump = |y: Point| {
        let s2 = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)) / (eps * eps);
        if s2 < 1.0 {
            (1.0 - s2).powi(2)
        } else {
            0.0
        }
    };
    let mut delta = PolarField::from_fn(&grid, |r, t| bump([r * t.cos(), r * t.sin()]));
    let w = grid.radial_quadrature_weights();
    let dtheta = 2.0 * std::f64::consts::PI / grid.n_theta() as f64;
    let mass: f64 = (0..grid.n_r()).map(|j| w[j] * dtheta * delta.row(j).iter().sum::<f64>()).sum();
    delta = delta.scale(-1.0 / mass);
    let sol = solve_linearized(coeffs, &delta, FarField::Dirichlet, &BoundaryValues::default())?;
    let g = sol.psi;

    let mut c2: f64 = 0.0;
    for j in grid.interior_nodes() {
        for i in 0..grid.n_theta() {
            let y = grid.point(j, i);
            let dist = (y[0] - x[0]).hypot(y[1] - x[1]);
            if dist < eps {
                continue;
            }
            c2 = c2.max(g.get(j, i).abs() / (dist.ln().abs() + 1.0));
        }
    }
    let (g1, g2) = gradient(&g);
    let rx = norm(x);
    let mut gb: f64 = 0.0;
    for j in 0..grid.n_r() {
        if grid.radii()[j] > 0.5 * rx {
            break;
        }
        for i in 0..grid.n_theta() {
            gb = gb.max(g1.get(j, i).hypot(g2.get(j, i)));
        }
    }
    Ok(GreenProbe { x, values: g, mollifier: eps, c2_fit: c2, grad_bound_fit: gb * rx / rx.ln() })
}

/// Repeats the probe on successively refined grids `(n_r, n_theta)`; the mollifier radius is
/// fixed by the first level.
pub fn green_refinement(
    build: impl Fn(&Arc<PolarGrid>) -> Result<CoefficientField>,
    x: Point,
    r_max: f64,
    levels: &[(usize, usize)],
) -> Result<GreenReport> {
    let mut rows = Vec::new();
    let mut eps = None;
    for &(n_r, n_theta) in levels {
        let grid = PolarGrid::global(n_r, n_theta, r_max)?;
        let eps = *eps.get_or_insert_with(|| 2.0 * local_spacing(&grid, norm(x)));
        let p = probe_green_with(&build(&grid)?, x, eps)?;
        rows.push(RefinementRow { n_r, n_theta, c2_fit: p.c2_fit, grad_bound_fit: p.grad_bound_fit });
    }
    let last = rows.last().cloned().expect("at least one refinement level");
    Ok(GreenReport { x, c2_fit: last.c2_fit, grad_bound_fit: last.grad_bound_fit, refinement_table: rows })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_matches_free_space() {
        let g = PolarGrid::global(256, 64, 64.0).unwrap();
        let c = CoefficientField::identity(&g);
        let x = [4.0, 0.0];
        let p = probe_green(&c, x).unwrap();
        assert!(p.c2_fit <= 1.2, "{}", p.c2_fit);
        // Dirichlet Green's function of the disk, away from the source.
        let r = g.r_max();
        let exact = |y: Point| {
            let d = (y[0] - x[0]).hypot(y[1] - x[1]);
            let xs = [x[0] * r * r / 16.0, 0.0];
            let ds = (y[0] - xs[0]).hypot(y[1] - xs[1]);
            -(d.ln() - ds.ln() + (r / 4.0).ln()) / (2.0 * std::f64::consts::PI)
        };
        let ev = p.values.evaluator();
        for y in [[0.0, 0.0], [-3.0, 2.0], [10.0, 5.0]] {
            assert!((ev.eval(y) - exact(y)).abs() < 2e-3, "{y:?}: {} vs {}", ev.eval(y), exact(y));
        }
    }
}
