use num_complex::Complex64;

use super::mode_bvp::{BoundaryCondition, ModeSolver};
use super::operator::{apply_cartesian, apply_modes, separable_average};
use crate::error::{Error, Result};
use crate::grid::{Modes, PolarField, PolarGrid};
use crate::radial::{CoefficientField, Separable};

/// Far-field (outer boundary) condition for the truncated problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarField {
    /// `ψ = g` at `R_max`.
    Dirichlet,
    /// `ψ′ + (τ/r)ψ = 0` at `R_max`.
    Robin(f64),
    /// `ψ′ = 0` for the angular mean and `ψ = g` for every other mode: bounded,
    /// log-free behaviour at infinity with a free limiting constant.
    NeumannMean,
}

impl FarField {
    fn condition(self, m: usize) -> BoundaryCondition {
        match self {
            FarField::Dirichlet => BoundaryCondition::Dirichlet,
            FarField::Robin(t) => BoundaryCondition::Robin(t),
            FarField::NeumannMean if m == 0 => BoundaryCondition::Neumann,
            FarField::NeumannMean => BoundaryCondition::Dirichlet,
        }
    }
}

/// Dirichlet data sampled at the grid angles on the inner (annulus) and outer circles.
#[derive(Debug, Clone, Default)]
pub struct BoundaryValues {
    pub inner: Option<Vec<f64>>,
    pub outer: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub psi: PolarField,
    /// `sup |Lψ − g|` over interior nodes.
    pub residual: f64,
    pub iterations: usize,
    /// Successive update-norm ratios of the defect correction.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct DefectOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DefectOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

/// Inverse of `L` on one grid: one factored radial problem per angular mode, wrapped in
/// a defect correction when the coefficients are not exactly separable.
pub struct LinearSolver<'a> {
    coeffs: &'a CoefficientField,
    sep: Separable,
    exact: bool,
    solvers: Vec<ModeSolver>,
    pub options: DefectOptions,
}

fn row_modes(grid: &PolarGrid, samples: &[f64]) -> Vec<Complex64> {
    let nt = grid.n_theta();
    assert_eq!(samples.len(), nt, "boundary samples must match n_theta");
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_forward(&mut buf);
    buf.truncate(grid.n_modes());
    let inv = 1.0 / nt as f64;
    buf.iter().map(|c| c * inv).collect()
}

impl<'a> LinearSolver<'a> {
    pub fn new(coeffs: &'a CoefficientField, far: FarField) -> Result<Self> {
        let grid = coeffs.grid();
        let (sep, exact) = match coeffs.separable() {
            Some(s) if !coeffs.has_drift() => (s.clone(), true),
            _ => (separable_average(coeffs), false),
        };
        for j in 0..grid.n_r() {
            if !(sep.p[j] > 0.0 && sep.w[j] > 0.0) {
                return Err(Error::CoefficientDegeneracy { lambda_min: sep.p[j].min(sep.w[j]), i: j, j: 0 });
            }
        }
        let inner = if grid.kind().contains_origin() { None } else { Some(BoundaryCondition::Dirichlet) };
        let solvers = (0..grid.n_modes())
            .map(|m| ModeSolver::new(grid, &sep, m, inner, far.condition(m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs, sep, exact, solvers, options: DefectOptions::default() })
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn separable(&self) -> &Separable {
        &self.sep
    }

    fn solve_separable(&self, g: &PolarField, inner: &[Complex64], outer: &[Complex64]) -> PolarField {
        let grid = g.grid();
        let gm = g.modes();
        let mut out = Modes::zeros(grid);
        for (m, s) in self.solvers.iter().enumerate() {
            out.set_mode(m, &s.solve(&gm.mode(m), inner[m], outer[m]));
        }
        out.recompose(grid)
    }

    pub fn solve(&self, g: &PolarField, bv: &BoundaryValues) -> Result<LinearSolution> {
        let grid = g.grid();
        let zero = vec![Complex64::new(0.0, 0.0); grid.n_modes()];
        let inner = bv.inner.as_ref().map_or_else(|| zero.clone(), |v| row_modes(grid, v));
        let outer = bv.outer.as_ref().map_or_else(|| zero.clone(), |v| row_modes(grid, v));

        let mut psi = self.solve_separable(g, &inner, &outer);
        let mut ratios = Vec::new();
        let mut iterations = 1;
        if !self.exact {
            let mut prev = f64::INFINITY;
            let mut bad = 0;
            loop {
                let defect = apply_cartesian(self.coeffs, &psi).sub(&apply_modes(&self.sep, &psi));
                let next = self.solve_separable(&g.sub(&defect), &inner, &outer);
                let scale = next.sup_abs().max(1e-300);
                let update = next.sub(&psi).sup_abs() / scale;
                psi = next;
                iterations += 1;
                if prev.is_finite() && prev > 0.0 {
                    let ratio = update / prev;
                    ratios.push(ratio);
                    bad = if ratio >= 1.0 { bad + 1 } else { 0 };
                    if bad >= 3 {
                        return Err(Error::NonPerturbativeCoefficients { ratios });
                    }
                }
                if update < self.options.tol || scale <= 1e-300 {
                    break;
                }
                if iterations > self.options.max_iter {
                    return Err(Error::NonPerturbativeCoefficients { ratios });
                }
                prev = update;
            }
        }
        let residual = interior_residual(self.coeffs, &psi, g);
        Ok(LinearSolution { psi, residual, iterations, ratios })
    }
}

/// `sup |Lψ − g|` over nodes that carry the equation.
pub fn interior_residual(coeffs: &CoefficientField, psi: &PolarField, g: &PolarField) -> f64 {
    let lpsi = apply_cartesian(coeffs, psi);
    let grid = psi.grid();
    let mut m: f64 = 0.0;
    for j in grid.interior_nodes() {
        for i in 0..grid.n_theta() {
            m = m.max((lpsi.get(j, i) - g.get(j, i)).abs());
        }
    }
    m
}

pub fn solve_linearized(
    coeffs: &CoefficientField,
    g: &PolarField,
    far: FarField,
    bv: &BoundaryValues,
) -> Result<LinearSolution> {
    LinearSolver::new(coeffs, far)?.solve(g, bv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;

    #[test]
    fn identity_recovers_gaussian() {
        let g = PolarGrid::global(256, 32, 40.0).unwrap();
        let c = CoefficientField::identity(&g);
        let rhs = PolarField::from_fn(&g, |r, _| 4.0 * (r * r - 1.0) * (-r * r).exp());
        let sol = solve_linearized(&c, &rhs, FarField::Dirichlet, &BoundaryValues::default()).unwrap();
        let exact = PolarField::from_fn(&g, |r, _| (-r * r).exp());
        assert!(sol.psi.sub(&exact).sup_abs() < 1e-6, "{}", sol.psi.sub(&exact).sup_abs());
        assert!(sol.residual < 1e-8, "{}", sol.residual);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        let c = CoefficientField::identity(&g);
        let sol = solve_linearized(&c, &PolarField::zeros(&g), FarField::Dirichlet, &BoundaryValues::default()).unwrap();
        assert_eq!(sol.psi.sup_abs(), 0.0);
    }

    fn perturbed(g: &std::sync::Arc<PolarGrid>, amp: f64) -> CoefficientField {
        let bump = |r: f64, t: f64| amp * (-(r - 1.0).powi(2)).exp() * (1.0 + 0.5 * (2.0 * t).cos()) * r * r / (1.0 + r * r);
        let a11 = PolarField::from_fn(g, |r, t| 1.0 + bump(r, t));
        let a12 = PolarField::from_fn(g, |r, t| 0.5 * bump(r, t + 0.3) * (t).sin());
        let a22 = PolarField::from_fn(g, |r, t| 1.0 - bump(r, t + 1.0));
        CoefficientField::general(a11, a12, a22, None).unwrap()
    }

    #[test]
    fn defect_correction_contracts() {
        let g = PolarGrid::global(128, 32, 40.0).unwrap();
        let c = perturbed(&g, 0.05);
        assert!((c.deviation_from_identity() - 0.05).abs() < 0.02);
        let rhs = PolarField::from_fn(&g, |r, t| (-r * r).exp() * (1.0 + r * t.cos()));
        let sol = solve_linearized(&c, &rhs, FarField::Dirichlet, &BoundaryValues::default()).unwrap();
        assert!(sol.residual < 1e-8, "{}", sol.residual);
        let worst = sol.ratios.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 0.2, "{:?}", sol.ratios);
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        // A strong rotational drift is invisible to the separable part.
        let one = PolarField::constant(&g, 1.0);
        let b1 = PolarField::from_fn(&g, |r, t| -20.0 * r * (-0.1 * r * r).exp() * t.sin());
        let b2 = PolarField::from_fn(&g, |r, t| 20.0 * r * (-0.1 * r * r).exp() * t.cos());
        let c = CoefficientField::general(one.clone(), PolarField::zeros(&g), one, Some((b1, b2))).unwrap();
        let rhs = PolarField::from_fn(&g, |r, t| (-r * r).exp() * r * r * (2.0 * t).cos());
        match solve_linearized(&c, &rhs, FarField::Dirichlet, &BoundaryValues::default()) {
            Err(Error::NonPerturbativeCoefficients { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|s| s.ratios)),
        }
    }

    #[test]
    fn maximum_principle_on_annulus() {
        let g = PolarGrid::exterior(1.0, 128, 32, 32.0).unwrap();
        let c = CoefficientField::identity(&g);
        let nt = g.n_theta();
        let inner: Vec<f64> = (0..nt).map(|i| (g.thetas()[i] * 3.0).sin() + 0.2).collect();
        let outer: Vec<f64> = (0..nt).map(|i| 0.5 * (g.thetas()[i]).cos()).collect();
        let bv = BoundaryValues { inner: Some(inner.clone()), outer: Some(outer.clone()) };
        let sol = solve_linearized(&c, &PolarField::zeros(&g), FarField::Dirichlet, &bv).unwrap();
        let hi = inner.iter().chain(&outer).cloned().fold(f64::MIN, f64::max);
        let lo = inner.iter().chain(&outer).cloned().fold(f64::MAX, f64::min);
        for v in sol.psi.values() {
            assert!(*v <= hi + 1e-8 && *v >= lo - 1e-8);
        }
    }
}
