//! Global solutions of `det D²u = f` on the plane.
//!
//! In normalized variables `y = √A x` the source becomes `f₁`, the radial solution `U`
//! of the averaged problem is computed exactly, and the correction `φ = Σ ψˡ` is built
//! by the cascade
//!
//! ```text
//! L φ⁰ = f₁ − f̃₁,    L ψˡ = det D²φˡ⁻² − det D²φˡ⁻¹,    φˡ = φˡ⁻¹ + ψˡ,
//! ```
//!
//! with `L = cof(D²U) : D²`. Each right-hand side is a divergence of flux pairs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{default_window, fit_expansion, AsymptoticFit};
use crate::elliptic::{BoundaryValues, FarField, LinearSolver};
use crate::error::{Error, Result};
use crate::grid::{cartesian_hessian, det_hessian, Evaluator, HessianField, PolarField, PolarGrid};
use crate::linalg::Point;
use crate::problem::{normalize_source, AffineData, SourceField};
use crate::radial::{build_coefficients, CoefficientField, RadialProfile, RadialSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub l: usize,
    pub sup_psi: f64,
    pub weighted_sup: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_r: 256, n_theta: 64, r_max: 64.0 }
    }
}

impl GridSpec {
    pub fn global_grid(&self) -> Result<Arc<PolarGrid>> {
        PolarGrid::global(self.n_r, self.n_theta, self.r_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalOptions {
    /// Stop once `sup (1+r)^τ |ψˡ|` falls below this.
    pub tol: f64,
    pub l_max: usize,
    /// Weight exponent; `0.9·min(β/2 − 1, 1)` when unset.
    pub tau: Option<f64>,
    /// Angles used for the spherical average of the source.
    pub n_average: usize,
    pub fit_window: Option<(f64, f64)>,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self { tol: 1e-12, l_max: 40, tau: None, n_average: 128, fit_window: None }
    }
}

pub fn default_tau(beta: f64) -> f64 {
    let b = if beta.is_finite() { beta } else { 6.0 };
    0.9 * (0.5 * b - 1.0).clamp(0.05, 1.0)
}

#[derive(Debug, Clone)]
pub struct IterationState {
    pub level: usize,
    /// `φˡ`.
    pub phi: PolarField,
    /// `φˡ⁻¹` (zero at level 0).
    pub phi_prev: PolarField,
    /// `ψˡ` (`ψ⁰ = φ⁰`).
    pub psi: PolarField,
    pub history: Vec<HistoryEntry>,
    pub tau: f64,
    pub alpha_holder: f64,
}

/// Fixed data shared by every level: the factored inverse of `L`, the discrete
/// Hessian of `U` and `f₁ − 1` on the grid.
pub struct IterationContext<'a> {
    pub solver: LinearSolver<'a>,
    pub base_hessian: HessianField,
    pub f1_dev: PolarField,
    pub tau: f64,
}

impl<'a> IterationContext<'a> {
    pub fn new(coeffs: &'a CoefficientField, profile: &RadialProfile, f1: &SourceField, tau: f64) -> Result<Self> {
        let grid = coeffs.grid();
        let base = PolarField::from_radial(grid, &profile.u);
        Self::with_base(coeffs, &base, sample_deviation(grid, f1)?, tau, FarField::Dirichlet)
    }

    /// Context for a cascade around an arbitrary base `U` with source deviation `f_dev`.
    pub fn with_base(coeffs: &'a CoefficientField, base: &PolarField, f_dev: PolarField, tau: f64, far: FarField) -> Result<Self> {
        let solver = LinearSolver::new(coeffs, far)?;
        Ok(Self { solver, base_hessian: cartesian_hessian(base), f1_dev: f_dev, tau })
    }

    /// `sup |det D²(U + φ) − f₁|` over equation nodes.
    pub fn residual(&self, phi_hessian: &HessianField) -> f64 {
        let h = self.base_hessian.add(phi_hessian);
        let det = det_hessian(&h);
        let g = det.grid().clone();
        let mut sup: f64 = 0.0;
        for j in g.interior_nodes() {
            for i in 0..g.n_theta() {
                sup = sup.max((det.get(j, i) - 1.0 - self.f1_dev.get(j, i)).abs());
            }
        }
        sup
    }

    fn check_convexity(&self, level: usize, phi_hessian: &HessianField) -> Result<()> {
        let h = self.base_hessian.add(phi_hessian);
        let (lambda_min, j, i) = h.min_eigenvalue();
        if !(lambda_min > 0.0) {
            let g = h.u11.grid();
            return Err(Error::IterationBreakdown { level, lambda_min, r: g.radii()[j], theta: g.thetas()[i] });
        }
        Ok(())
    }

    fn entry(&self, l: usize, psi: &PolarField, phi_hessian: &HessianField) -> HistoryEntry {
        HistoryEntry {
            l,
            sup_psi: psi.sup_abs(),
            weighted_sup: psi.weighted_sup(self.tau),
            residual: self.residual(phi_hessian),
        }
    }
}

/// `f − 1` at the grid nodes.
pub fn sample_deviation(grid: &Arc<PolarGrid>, f: &SourceField) -> Result<PolarField> {
    let mut out = PolarField::zeros(grid);
    for j in 0..grid.n_r() {
        for i in 0..grid.n_theta() {
            let x = grid.point(j, i);
            f.checked_eval(x)?;
            out.set(j, i, f.deviation(x));
        }
    }
    Ok(out)
}

fn remove_mean(field: &mut PolarField) {
    let mean = field.theta_mean();
    let nt = field.grid().n_theta();
    for (j, m) in mean.iter().enumerate() {
        for i in 0..nt {
            let v = field.get(j, i);
            field.set(j, i, v - m);
        }
    }
}

/// Solves `L φ⁰ = f₁ − f̃₁` with the angular mean of the right-hand side removed, so
/// that `φ⁰` carries no logarithmic growth.
pub fn initial_correction(solver: &LinearSolver<'_>, f1_dev: &PolarField) -> Result<PolarField> {
    let mut g = f1_dev.clone();
    remove_mean(&mut g);
    Ok(solver.solve(&g, &BoundaryValues::default())?.psi)
}

/// Level-0 state from `φ⁰`.
pub fn initial_state(ctx: &IterationContext<'_>, phi0: PolarField) -> Result<IterationState> {
    let h = cartesian_hessian(&phi0);
    ctx.check_convexity(0, &h)?;
    let entry = ctx.entry(0, &phi0, &h);
    Ok(IterationState {
        level: 0,
        phi_prev: PolarField::zeros(phi0.grid()),
        psi: phi0.clone(),
        phi: phi0,
        history: vec![entry],
        tau: ctx.tau,
        alpha_holder: 0.5,
    })
}

/// `div B(a, b) = ∂₁₁a·∂₂₂b − ∂₁₂a·∂₁₂b` from the Hessians.
fn flux_divergence(ha: &HessianField, hb: &HessianField) -> PolarField {
    ha.u11.mul(&hb.u22).sub(&ha.u12.mul(&hb.u12))
}

/// One level: `L ψˡ = −div[B(φˡ⁻², ψˡ⁻¹) + B(ψˡ⁻¹, φˡ⁻¹)]`, which equals
/// `det D²φˡ⁻² − det D²φˡ⁻¹` by bilinearity of `B`.
///
/// The divergence is expanded pointwise: differencing the fluxes leaves third
/// derivatives of `ψ` times `∂₁φ` that cancel only in the continuum, and near a
/// non-stationary origin their discrete remainder grows from level to level.
pub fn picard_step(state: &IterationState, ctx: &IterationContext<'_>) -> Result<IterationState> {
    let h_prev = cartesian_hessian(&state.phi_prev);
    let h_psi = cartesian_hessian(&state.psi);
    let h_phi = cartesian_hessian(&state.phi);
    let rhs = flux_divergence(&h_prev, &h_psi).add(&flux_divergence(&h_psi, &h_phi)).scale(-1.0);
    let next = ctx.solver.solve(&rhs, &BoundaryValues::default())?.psi;
    let phi = state.phi.add(&next);
    let level = state.level + 1;
    let h = cartesian_hessian(&phi);
    ctx.check_convexity(level, &h)?;
    let mut history = state.history.clone();
    history.push(ctx.entry(level, &next, &h));
    Ok(IterationState {
        level,
        phi_prev: state.phi.clone(),
        psi: next,
        phi,
        history,
        tau: state.tau,
        alpha_holder: state.alpha_holder,
    })
}

/// Converged global solution; `u(x) = v(√A x) + b·x + shift`.
#[derive(Clone)]
pub struct GlobalSolution {
    pub grid: Arc<PolarGrid>,
    pub aff: AffineData,
    /// Normalized source `f₁`.
    pub f1: SourceField,
    pub profile: RadialProfile,
    pub coeffs: CoefficientField,
    pub phi: PolarField,
    /// `U + φ` on the grid; solves `det D²v = f₁`.
    pub v: PolarField,
    pub shift: f64,
    pub fit: AsymptoticFit,
    pub history: Vec<HistoryEntry>,
    pub levels: usize,
    pub converged: bool,
    pub residual: f64,
    pub tau: f64,
    v_eval: Evaluator,
    phi_eval: Evaluator,
}

impl std::fmt::Debug for GlobalSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GlobalSolution")
            .field("grid", &self.grid)
            .field("shift", &self.shift)
            .field("fit", &self.fit)
            .field("levels", &self.levels)
            .field("residual", &self.residual)
            .finish()
    }
}

impl GlobalSolution {
    /// `v(y)` including the additive shift; beyond `R_max` the fitted expansion.
    pub fn eval_v(&self, y: Point) -> f64 {
        let r = y[0].hypot(y[1]);
        if r <= self.grid.r_max() {
            self.v_eval.eval(y) + self.shift
        } else {
            0.5 * r * r + self.fit.d_fit * r.ln() + self.fit.c_fit
        }
    }

    /// `φ(y)` (zero beyond `R_max`).
    pub fn eval_phi(&self, y: Point) -> f64 {
        if y[0].hypot(y[1]) <= self.grid.r_max() {
            self.phi_eval.eval(y)
        } else {
            0.0
        }
    }

    pub fn u_eval(&self, x: Point) -> f64 {
        let y = self.aff.to_normalized(x);
        self.eval_v(y) + self.aff.b[0] * x[0] + self.aff.b[1] * x[1]
    }

    pub fn d(&self) -> f64 {
        self.profile.d
    }

    /// Per-level ratios `weighted_sup(l+1) / weighted_sup(l)` from level 1 on.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        ratios(&self.history)
    }
}

pub fn ratios(history: &[HistoryEntry]) -> Vec<f64> {
    history
        .windows(2)
        .skip(1)
        .filter(|w| w[0].weighted_sup > 0.0)
        .map(|w| w[1].weighted_sup / w[0].weighted_sup)
        .collect()
}

/// Runs the cascade to `weighted_sup < tol`; fails with the full history after `l_max`.
pub fn solve_global(f: &SourceField, aff: &AffineData, spec: &GridSpec, opts: &GlobalOptions) -> Result<GlobalSolution> {
    let grid = spec.global_grid()?;
    let f1 = normalize_source(f, aff);
    let src = RadialSource::from_source(&f1, opts.n_average.max(grid.n_theta()));
    let profile = src.profile(grid.radii())?;
    let coeffs = build_coefficients(&profile, &grid)?;
    let tau = opts.tau.unwrap_or_else(|| default_tau(f.beta));

    let (phi, history, converged) = {
        let ctx = IterationContext::new(&coeffs, &profile, &f1, tau)?;
        let phi0 = initial_correction(&ctx.solver, &ctx.f1_dev)?;
        let mut state = initial_state(&ctx, phi0)?;
        let mut converged = false;
        while state.level < opts.l_max {
            state = picard_step(&state, &ctx)?;
            let last = state.history.last().copied().unwrap();
            if last.weighted_sup < opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            let last = state.history.last().map_or(f64::NAN, |h| h.weighted_sup);
            return Err(Error::NonConvergence { levels: state.level, last, history: state.history });
        }
        (state.phi, state.history, converged)
    };

    let v = PolarField::from_radial(&grid, &profile.u).add(&phi);
    let residual = history.last().map_or(f64::NAN, |h| h.residual);
    let mut sol = GlobalSolution {
        v_eval: v.evaluator(),
        phi_eval: phi.evaluator(),
        grid: grid.clone(),
        aff: aff.clone(),
        f1,
        profile,
        coeffs,
        phi,
        v,
        shift: 0.0,
        fit: AsymptoticFit { d_fit: 0.0, c_fit: 0.0, sigma_fit: None, window: [0.0, 0.0], residual_table: vec![] },
        levels: history.last().map_or(0, |h| h.l),
        history,
        converged,
        residual,
        tau,
    };
    let window = opts.fit_window.unwrap_or_else(|| default_window(grid.r_max()));
    let raw = {
        let s = &sol;
        let u = |x: Point| s.v_eval.eval(s.aff.to_normalized(x)) + s.aff.b[0] * x[0] + s.aff.b[1] * x[1];
        fit_expansion(&u, &sol.aff, window)?
    };
    sol.shift = aff.c - raw.c_fit;
    sol.fit = AsymptoticFit { c_fit: aff.c, ..raw };
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::solve_mode_bvp;
    use crate::elliptic::{BoundaryCondition, ModeBvp};
    use crate::radial::Separable;
    use num_complex::Complex64;

    fn small() -> GridSpec {
        GridSpec { n_r: 128, n_theta: 32, r_max: 64.0 }
    }

    #[test]
    fn radial_source_needs_no_correction() {
        let sol = solve_global(&SourceField::rational(0.1, 4.0), &AffineData::identity(), &small(), &GlobalOptions::default()).unwrap();
        assert!(sol.phi.sup_abs() < 1e-13);
        assert_eq!(sol.levels, 1);
    }

    #[test]
    fn jorgens_case() {
        let sol = solve_global(&SourceField::constant(1.0), &AffineData::identity(), &small(), &GlobalOptions::default()).unwrap();
        let g = sol.grid.clone();
        let mut err: f64 = 0.0;
        for j in 0..g.n_r() {
            for i in 0..g.n_theta() {
                let x = g.point(j, i);
                err = err.max((sol.u_eval(x) - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs());
            }
        }
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn phi0_is_a_single_mode() {
        let spec = small();
        let grid = spec.global_grid().unwrap();
        let f1 = SourceField::from_deviation(
            |x: Point| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let c2 = if r2 > 0.0 { (x[0] * x[0] - x[1] * x[1]) / r2 } else { 0.0 };
                0.1 * c2 * r2 / (1.0 + r2).powi(3)
            },
            1.2,
            4.0,
        );
        let src = RadialSource::from_source(&f1, 64);
        let profile = src.profile(grid.radii()).unwrap();
        let coeffs = build_coefficients(&profile, &grid).unwrap();
        let ctx = IterationContext::new(&coeffs, &profile, &f1, 0.9).unwrap();
        let phi0 = initial_correction(&ctx.solver, &ctx.f1_dev).unwrap();
        let modes = phi0.modes();
        for m in [0usize, 1, 3, 4] {
            assert!((0..grid.n_r()).all(|j| modes.amplitude(j, m) < 1e-12));
        }
        let rhs: Vec<Complex64> = ctx.f1_dev.modes().mode(2);
        let sep: &Separable = ctx.solver.separable();
        let bvp = ModeBvp {
            grid: &grid,
            m: 2,
            coeffs: sep,
            rhs: &rhs,
            inner: None,
            outer: (BoundaryCondition::Dirichlet, Complex64::new(0.0, 0.0)),
        };
        let one = solve_mode_bvp(&bvp).unwrap();
        let got = modes.mode(2);
        let err = one.iter().zip(&got).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn angular_family_contracts() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let sol = solve_global(&f, &AffineData::identity(), &small(), &GlobalOptions::default()).unwrap();
        assert!(sol.converged);
        for r in sol.contraction_ratios() {
            assert!(r <= 0.5, "{r}");
        }
        assert!(sol.residual < 5e-5, "{}", sol.residual);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let spec = small();
        let grid = spec.global_grid().unwrap();
        let src = RadialSource::from_source(&f, 128);
        let profile = src.profile(grid.radii()).unwrap();
        let coeffs = build_coefficients(&profile, &grid).unwrap();
        let ctx = IterationContext::new(&coeffs, &profile, &f, 0.9).unwrap();
        let mut state = initial_state(&ctx, initial_correction(&ctx.solver, &ctx.f1_dev).unwrap()).unwrap();
        for _ in 0..30 {
            state = picard_step(&state, &ctx).unwrap();
        }
        let again = picard_step(&state, &ctx).unwrap();
        assert!(again.phi.sub(&state.phi).sup_abs() < 1e-12);
    }

    #[test]
    fn non_convergence_carries_history() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let opts = GlobalOptions { l_max: 2, tol: 1e-30, ..GlobalOptions::default() };
        match solve_global(&f, &AffineData::identity(), &small(), &opts) {
            Err(Error::NonConvergence { levels, history, .. }) => {
                assert_eq!(levels, 2);
                assert_eq!(history.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }
}
